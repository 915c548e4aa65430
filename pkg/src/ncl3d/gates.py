"""Threshold gates with hysteresis, the primitives of NULL Convention Logic.

A threshold gate asserts its output when its set condition is satisfied,
deasserts it only after every input has deasserted, and holds its previous
value in between. The set condition is a positive-unate Boolean function,
stored canonically as a minimal sorted sum of products over input indices,
so two specs that compute the same function compare equal.

Regular gates follow the THmn naming scheme: n inputs, output asserted once
m of them are asserted. A trailing ``w`` section gives integer weights to
the leading inputs, e.g. ``TH54w322`` weighs inputs a, b, c as 3, 2, 2 and
fires when the weighted sum reaches 5. Gates whose set function is not a
pure weighted threshold (TH24comp, THand0) exist only as catalog entries.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence, Tuple

Product = Tuple[int, ...]
Products = Tuple[Product, ...]

INPUT_LETTERS = "abcd"


class GateError(ValueError):
    """Malformed gate name, spec, or evaluation request."""


def canonical_sop(products: Iterable[Iterable[int]], arity: int) -> Products:
    """Normalize a sum of products: sorted indices, absorption, sorted list.

    Absorption drops any product that is a superset of another, which makes
    the representation minimal for the positive-unate functions used here.
    """
    seen = set()
    for raw in products:
        prod = tuple(sorted(set(int(i) for i in raw)))
        if not prod:
            raise GateError("empty product in set function")
        if any(i < 0 or i >= arity for i in prod):
            raise GateError(f"product {prod} references inputs beyond arity {arity}")
        seen.add(prod)
    kept = []
    for prod in seen:
        pset = set(prod)
        if any(set(other) < pset for other in seen if other != prod):
            continue
        kept.append(prod)
    if not kept:
        raise GateError("set function has no products")
    return tuple(sorted(kept))


def threshold_products(weights: Sequence[int], threshold: int) -> Products:
    """Minimal input subsets whose weighted sum reaches the threshold."""
    n = len(weights)
    if threshold < 1:
        raise GateError("threshold must be at least 1")
    if threshold > sum(weights):
        raise GateError(
            f"threshold {threshold} exceeds total input weight {sum(weights)}"
        )
    hits = []
    for k in range(1, n + 1):
        for combo in combinations(range(n), k):
            if sum(weights[i] for i in combo) >= threshold:
                hits.append(combo)
    return canonical_sop(hits, n)


@dataclass(frozen=True)
class GateSpec:
    """One gate type: set function plus transistor-level bookkeeping.

    ``pmos``/``nmos`` are None for ad hoc gates, in which case
    :func:`transistor_counts` falls back to a documented estimate.
    ``miv_override`` replaces the default inter-tier via count (arity + 2)
    used by the monolithic-3D area model.
    """

    name: str
    arity: int
    products: Products
    weights: Optional[Tuple[int, ...]] = None
    threshold: Optional[int] = None
    pmos: Optional[int] = None
    nmos: Optional[int] = None
    miv_override: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.arity <= 4:
            raise GateError(f"{self.name}: arity {self.arity} outside [1, 4]")
        if self.products != canonical_sop(self.products, self.arity):
            raise GateError(f"{self.name}: set function is not canonical")
        if (self.weights is None) != (self.threshold is None):
            raise GateError(f"{self.name}: weights and threshold go together")
        if self.weights is not None:
            if len(self.weights) != self.arity:
                raise GateError(f"{self.name}: weight count != arity")
            if any(w < 1 for w in self.weights):
                raise GateError(f"{self.name}: weights must be positive")
            expanded = threshold_products(self.weights, self.threshold)
            if expanded != self.products:
                raise GateError(
                    f"{self.name}: stored set function disagrees with its "
                    f"threshold expansion"
                )
        for count in (self.pmos, self.nmos):
            if count is not None and count < 1:
                raise GateError(f"{self.name}: transistor counts must be >= 1")

    @property
    def max_stack(self) -> int:
        """Longest series chain in the set network, in devices."""
        return max(len(p) for p in self.products)

    def describe(self) -> str:
        """Set function in a + bc form with letter-named inputs."""
        return " + ".join(
            "".join(INPUT_LETTERS[i] for i in prod) for prod in self.products
        )


def eval_set(spec: GateSpec, inputs: Sequence[int]) -> int:
    """Evaluate the set condition (no hysteresis) on 0/1 inputs."""
    if len(inputs) != spec.arity:
        raise GateError(
            f"{spec.name} expects {spec.arity} inputs, got {len(inputs)}"
        )
    return int(any(all(inputs[i] for i in prod) for prod in spec.products))


def next_output(spec: GateSpec, inputs: Sequence[int], prev: int) -> int:
    """One hysteresis step: set wins, all-deasserted resets, else hold."""
    if eval_set(spec, inputs):
        return 1
    if not any(inputs):
        return 0
    return prev


def transistor_counts(spec: GateSpec) -> Tuple[int, int]:
    """(pmos, nmos) device counts.

    Catalog entries carry explicit counts. Anything else gets the coarse
    structural estimate 2 * literals + 4 hold/feedback + 2 output devices,
    split evenly. The estimate is approximate by design and is never used
    for the studied gate set.
    """
    if spec.pmos is not None and spec.nmos is not None:
        return spec.pmos, spec.nmos
    literals = sum(len(p) for p in spec.products)
    total = 2 * literals + 6
    return total // 2, total - total // 2


_TH_NAME = re.compile(r"^TH([1-9])([1-9])(?:[wW]([0-9]+))?$")


def parse_th_name(name: str) -> Tuple[int, int, Tuple[int, ...]]:
    """Split a THmn / THmnw... name into (threshold, arity, weights)."""
    m = _TH_NAME.match(name)
    if m is None:
        raise GateError(f"malformed threshold gate name {name!r}")
    threshold, arity = int(m.group(1)), int(m.group(2))
    if arity > 4:
        raise GateError(f"{name}: arity {arity} outside [1, 4]")
    digits = m.group(3) or ""
    if len(digits) > arity:
        raise GateError(f"{name}: more weights than inputs")
    lead = tuple(int(c) for c in digits)
    if any(not 2 <= w <= threshold for w in lead):
        raise GateError(f"{name}: weights must lie in [2, {threshold}]")
    weights = lead + (1,) * (arity - len(lead))
    if threshold > sum(weights):
        raise GateError(
            f"{name}: threshold {threshold} exceeds total weight {sum(weights)}"
        )
    return threshold, arity, weights


def _th_spec(name: str, pmos: Optional[int] = None, nmos: Optional[int] = None) -> GateSpec:
    threshold, arity, weights = parse_th_name(name)
    return GateSpec(
        name=name,
        arity=arity,
        products=threshold_products(weights, threshold),
        weights=weights,
        threshold=threshold,
        pmos=pmos,
        nmos=nmos,
    )


def _irregular(name: str, arity: int, products, pmos: int, nmos: int) -> GateSpec:
    return GateSpec(
        name=name,
        arity=arity,
        products=canonical_sop(products, arity),
        pmos=pmos,
        nmos=nmos,
    )


def _default_entries() -> Tuple[GateSpec, ...]:
    # Device counts for the six-gate study set follow the bundled reference
    # data; the remaining entries carry static-template estimates.
    return (
        _th_spec("TH12", 3, 3),
        _th_spec("TH13", 4, 4),
        _th_spec("TH22", 6, 6),
        _th_spec("TH23", 10, 10),
        _th_spec("TH33", 8, 8),
        _th_spec("TH44", 10, 10),
        _th_spec("TH24", 13, 13),
        _th_spec("TH34", 13, 11),
        _th_spec("TH34w2", 13, 13),
        _th_spec("TH54w322", 11, 10),
        _irregular("TH24comp", 4, [(0, 2), (0, 3), (1, 2), (1, 3)], 9, 9),
        _irregular("THand0", 4, [(0, 1), (1, 2), (0, 3)], 10, 10),
    )


class GateCatalog:
    """Named gate specs, extensible from catalog files."""

    def __init__(self, entries: Iterable[GateSpec] = ()):
        self._entries: dict[str, GateSpec] = {}
        for spec in entries:
            self.add(spec)

    def add(self, spec: GateSpec) -> None:
        if spec.name in self._entries and self._entries[spec.name] != spec:
            raise GateError(f"conflicting redefinition of {spec.name}")
        self._entries[spec.name] = spec

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> GateSpec:
        return self._entries[name]

    def __iter__(self):
        return iter(self._entries.values())

    def names(self) -> Tuple[str, ...]:
        return tuple(self._entries)

    def copy(self) -> "GateCatalog":
        return GateCatalog(self._entries.values())


DEFAULT_CATALOG = GateCatalog(_default_entries())

# The subset characterized by the bundled 2D/M3D reference measurements.
STUDY_GATES = ("TH22", "TH24", "TH34", "TH54w322", "THand0", "TH24comp")


def spec_from_name(name: str, catalog: Optional[GateCatalog] = None) -> GateSpec:
    """Resolve a gate name: catalog entry first, THmn grammar otherwise."""
    cat = DEFAULT_CATALOG if catalog is None else catalog
    if name in cat:
        return cat[name]
    return _th_spec(name)


def _spec_to_dict(spec: GateSpec) -> dict:
    doc = {
        "arity": spec.arity,
        "products": [list(p) for p in spec.products],
    }
    if spec.weights is not None:
        doc["weights"] = list(spec.weights)
        doc["threshold"] = spec.threshold
    if spec.pmos is not None:
        doc["pmos"] = spec.pmos
        doc["nmos"] = spec.nmos
    if spec.miv_override is not None:
        doc["miv"] = spec.miv_override
    return doc


def _spec_from_dict(name: str, doc: Mapping) -> GateSpec:
    try:
        arity = int(doc["arity"])
        products = canonical_sop([tuple(p) for p in doc["products"]], arity)
    except (KeyError, TypeError) as exc:
        raise GateError(f"catalog entry {name!r} is malformed: {exc}") from exc
    weights = doc.get("weights")
    return GateSpec(
        name=name,
        arity=arity,
        products=products,
        weights=None if weights is None else tuple(int(w) for w in weights),
        threshold=None if weights is None else int(doc["threshold"]),
        pmos=None if "pmos" not in doc else int(doc["pmos"]),
        nmos=None if "nmos" not in doc else int(doc["nmos"]),
        miv_override=None if "miv" not in doc else int(doc["miv"]),
    )


def dump_catalog(catalog: GateCatalog) -> str:
    """Serialize a catalog to its JSON text form (sorted, round-trips)."""
    body = {spec.name: _spec_to_dict(spec) for spec in catalog}
    return json.dumps({"version": 1, "gates": body}, indent=2, sort_keys=True) + "\n"


def parse_catalog(text: str, base: Optional[GateCatalog] = None) -> GateCatalog:
    """Parse a catalog JSON document, layered on top of ``base`` entries."""
    try:
        doc = json.loads(text)
        gates = doc["gates"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise GateError(f"catalog document is malformed: {exc}") from exc
    catalog = (base or DEFAULT_CATALOG).copy()
    for name in sorted(gates):
        catalog.add(_spec_from_dict(name, gates[name]))
    return catalog


def load_catalog(path, base: Optional[GateCatalog] = None) -> GateCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_catalog(fh.read(), base)


def save_catalog(catalog: GateCatalog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_catalog(catalog))
