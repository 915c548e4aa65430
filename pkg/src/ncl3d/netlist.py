"""Dual-rail signals, combinational NCL netlists, and DI checkers.

A Netlist is an acyclic graph of threshold-gate instances over named
single-rail nets; feedback exists only inside gate hysteresis. Primary
inputs and outputs are dual-rail ports. Evaluation is a one-pass fixpoint
(settle), on top of which the two behavioral delay-insensitivity checkers
are built: input-completeness sweeps partial input wavefronts, and
observability suppresses one gate at a time.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .gates import DEFAULT_CATALOG, GateCatalog, GateError, GateSpec, spec_from_name


class NetlistError(ValueError):
    pass


class CycleError(NetlistError):
    """The gate graph contains a combinational cycle."""


class NonConvergenceError(NetlistError):
    """A second settle pass still changed nets; acyclicity was violated."""


class FormatError(NetlistError):
    """Malformed netlist text; carries a 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DR(Enum):
    """One dual-rail bit: (rail1, rail0) pairs."""

    NULL = (0, 0)
    DATA0 = (0, 1)
    DATA1 = (1, 0)
    INVALID = (1, 1)

    @classmethod
    def from_rails(cls, rail1: int, rail0: int) -> "DR":
        return cls((rail1, rail0))

    @classmethod
    def from_bit(cls, bit: int) -> "DR":
        return cls.DATA1 if bit else cls.DATA0

    @property
    def rails(self) -> Tuple[int, int]:
        return self.value

    @property
    def is_data(self) -> bool:
        return self in (DR.DATA0, DR.DATA1)

    @property
    def bit(self) -> int:
        if not self.is_data:
            raise ValueError(f"{self.name} carries no data bit")
        return 1 if self is DR.DATA1 else 0


@dataclass(frozen=True)
class Port:
    """A dual-rail port: a name bound to its two rail nets.

    Input ports always use the canonical ``name.1``/``name.0`` rails (they
    are the external drive points); output ports may be bound to arbitrary
    internal nets, which is how inverters become zero-cost rail swaps.
    """

    name: str
    rail1: str
    rail0: str

    @property
    def rails(self) -> Tuple[str, str]:
        return self.rail1, self.rail0

    @property
    def is_canonical(self) -> bool:
        return self.rail1 == f"{self.name}.1" and self.rail0 == f"{self.name}.0"


def port(name: str) -> Port:
    return Port(name, f"{name}.1", f"{name}.0")


@dataclass(frozen=True)
class GateInst:
    """One gate instance: type name, instance name, input nets, output net."""

    kind: str
    name: str
    ins: Tuple[str, ...]
    out: str


@dataclass(frozen=True)
class Defect:
    """One structural rule violation found by validate()."""

    code: str
    subject: str
    detail: str

    def __str__(self):
        return f"{self.code}: {self.subject} ({self.detail})"


class Netlist:
    """Combinational dual-rail NCL netlist.

    Mutable while being built (add gates), then treated as immutable;
    settle() and the checkers never modify it.
    """

    def __init__(
        self,
        inputs: Sequence,
        outputs: Sequence,
        catalog: Optional[GateCatalog] = None,
        ctl_inputs: Sequence[str] = (),
        ctl_outputs: Sequence[str] = (),
    ):
        self.inputs: Tuple[Port, ...] = tuple(
            p if isinstance(p, Port) else port(p) for p in inputs
        )
        self.outputs: Tuple[Port, ...] = tuple(
            p if isinstance(p, Port) else port(p) for p in outputs
        )
        self.catalog = DEFAULT_CATALOG if catalog is None else catalog
        self.ctl_inputs = tuple(ctl_inputs)
        self.ctl_outputs = tuple(ctl_outputs)
        self.gates: list[GateInst] = []
        self._names: set[str] = set()
        self._dirty = True
        self._rows: Optional[tuple] = None
        for p in self.inputs:
            if not p.is_canonical:
                raise NetlistError(f"input port {p.name} must use canonical rails")

    # -- construction -----------------------------------------------------

    def add(self, kind: str, ins: Sequence[str], out: str, name: Optional[str] = None) -> GateInst:
        if name is None:
            name = f"u{len(self.gates) + 1}"
        if name in self._names:
            raise NetlistError(f"duplicate instance name {name}")
        inst = GateInst(kind, name, tuple(ins), out)
        self.gates.append(inst)
        self._names.add(name)
        self._dirty = True
        self._rows = None
        return inst

    def bind_outputs(self, ports: Sequence[Port]) -> None:
        """Replace the output port list (used once synthesis knows rails)."""
        self.outputs = tuple(ports)
        self._dirty = True
        self._rows = None

    def spec(self, kind: str) -> GateSpec:
        return spec_from_name(kind, self.catalog)

    # -- derived structure -------------------------------------------------

    def input_rails(self) -> Tuple[str, ...]:
        return tuple(r for p in self.inputs for r in p.rails)

    def output_rails(self) -> Tuple[str, ...]:
        return tuple(r for p in self.outputs for r in p.rails)

    def external_rails(self) -> Tuple[str, ...]:
        return self.input_rails() + self.ctl_inputs

    def _refresh(self) -> None:
        if not self._dirty:
            return
        self._driver: Dict[str, GateInst] = {}
        self._multi: list[str] = []
        for inst in self.gates:
            if inst.out in self._driver:
                self._multi.append(inst.out)
            else:
                self._driver[inst.out] = inst
        self._readers: Dict[str, list] = {}
        for inst in self.gates:
            for pin in inst.ins:
                self._readers.setdefault(pin, []).append(inst)
        nets = dict.fromkeys(self.external_rails())
        for inst in self.gates:
            for pin in inst.ins:
                nets.setdefault(pin)
            nets.setdefault(inst.out)
        for r in self.output_rails() + self.ctl_outputs:
            nets.setdefault(r)
        self._nets = tuple(nets)
        self._dirty = False

    @property
    def nets(self) -> Tuple[str, ...]:
        self._refresh()
        return self._nets

    def driver_of(self, net: str) -> Optional[GateInst]:
        self._refresh()
        return self._driver.get(net)

    def fanout(self, net: str) -> int:
        self._refresh()
        return len(self._readers.get(net, ()))

    def topo_order(self) -> Tuple[GateInst, ...]:
        """Gates in dependency order; raises CycleError on feedback."""
        self._refresh()
        pending = {inst.name: sum(1 for pin in inst.ins if pin in self._driver)
                   for inst in self.gates}
        ready = [inst for inst in self.gates if pending[inst.name] == 0]
        order = []
        head = 0
        while head < len(ready):
            inst = ready[head]
            head += 1
            order.append(inst)
            for reader in self._readers.get(inst.out, ()):
                count = reader.ins.count(inst.out)
                pending[reader.name] -= count
                if pending[reader.name] == 0:
                    ready.append(reader)
        if len(order) != len(self.gates):
            stuck = sorted(n for n, k in pending.items() if k > 0)
            raise CycleError(f"combinational cycle through {', '.join(stuck[:8])}")
        return tuple(order)

    # -- validation ---------------------------------------------------------

    def validate(self) -> list:
        """Structural defects as data; empty list iff all invariants hold."""
        self._refresh()
        defects = []
        for net in sorted(set(self._multi)):
            defects.append(Defect("multiple-drivers", net, "more than one gate drives this net"))
        external = set(self.external_rails())
        for net in self._nets:
            if net not in self._driver and net not in external:
                defects.append(Defect("undriven-net", net, "no gate output or primary input drives it"))
        for inst in self.gates:
            try:
                spec = self.spec(inst.kind)
            except GateError as exc:
                defects.append(Defect("unknown-gate", inst.name, str(exc)))
                continue
            if len(inst.ins) != spec.arity:
                defects.append(Defect(
                    "arity-mismatch", inst.name,
                    f"{inst.kind} takes {spec.arity} inputs, got {len(inst.ins)}"))
        try:
            self.topo_order()
        except CycleError as exc:
            defects.append(Defect("cycle", "netlist", str(exc)))
        return defects

    # -- evaluation ----------------------------------------------------------

    def _compiled(self):
        """Topo-ordered (spec, input tuple, output net) rows for settle."""
        if self._rows is None:
            self._rows = tuple(
                (self.spec(inst.kind), inst.ins, inst.out, inst.name)
                for inst in self.topo_order()
            )
        return self._rows


def settle(
    netlist: Netlist,
    rails: Mapping[str, int],
    state: Optional[Mapping[str, int]] = None,
    frozen: Optional[Mapping[str, int]] = None,
) -> Dict[str, int]:
    """Fixpoint evaluation: one topological pass, then a verification pass.

    ``rails`` gives externally driven rail values (missing rails read 0);
    ``state`` gives previous net values for hysteresis (missing nets read
    0, the all-NULL reset); ``frozen`` pins nets to fixed values, used by
    the observability checker. Returns the complete net-value map. One
    pass suffices on an acyclic graph; a second pass verifies that and
    raises NonConvergenceError otherwise.
    """
    values: Dict[str, int] = {}
    state = state or {}
    frozen = frozen or {}
    for net in netlist.nets:
        values[net] = state.get(net, 0)
    for r in netlist.external_rails():
        values[r] = rails.get(r, 0)
    values.update(frozen)
    rows = netlist._compiled()
    for spec, ins, out, _ in rows:
        if out in frozen:
            continue
        prev = values[out]
        iv = [values[p] for p in ins]
        if any(all(iv[i] for i in prod) for prod in spec.products):
            values[out] = 1
        elif not any(iv):
            values[out] = 0
        else:
            values[out] = prev
    for spec, ins, out, name in rows:
        if out in frozen:
            continue
        iv = [values[p] for p in ins]
        if any(all(iv[i] for i in prod) for prod in spec.products):
            nxt = 1
        elif not any(iv):
            nxt = 0
        else:
            nxt = values[out]
        if nxt != values[out]:
            raise NonConvergenceError(f"net {out} (gate {name}) did not settle")
    return values


# Net values plus gate hysteresis state; for these gates the two coincide
# (a gate's state is its output net), so one map serves as both.
WavefrontState = Dict[str, int]


def encode_word(ports: Sequence[Port], bits: Mapping[str, Optional[int]]) -> Dict[str, int]:
    """Rail values for the given port bits; None or missing means NULL."""
    rails: Dict[str, int] = {}
    for p in ports:
        bit = bits.get(p.name)
        r1, r0 = (0, 0) if bit is None else DR.from_bit(bit).rails
        rails[f"{p.name}.1"] = r1
        rails[f"{p.name}.0"] = r0
    return rails


def port_value(values: Mapping[str, int], p: Port) -> DR:
    return DR.from_rails(values[p.rail1], values[p.rail0])


def output_word(netlist: Netlist, values: Mapping[str, int]) -> Dict[str, DR]:
    return {p.name: port_value(values, p) for p in netlist.outputs}


@dataclass(frozen=True)
class ICViolation:
    """Outputs completed a wavefront before the inputs did."""

    direction: str               # "null-to-data" or "data-to-null"
    vector: Tuple[int, ...]      # data bit per input port
    subset: Tuple[str, ...]      # the partial input set that sufficed

    def __str__(self):
        word = "".join(str(b) for b in self.vector)
        return (f"input-completeness ({self.direction}): inputs {{{', '.join(self.subset)}}} "
                f"of vector {word} already complete all outputs")


@dataclass(frozen=True)
class ObsViolation:
    """A gate whose transitions never reach a primary output."""

    gate: str

    def __str__(self):
        return f"observability: gate {self.gate} never affects any primary output"


def _check_preconditions(netlist: Netlist) -> None:
    defects = netlist.validate()
    if defects:
        raise NetlistError("netlist does not validate: " + "; ".join(str(d) for d in defects[:4]))
    if netlist.ctl_inputs:
        raise NetlistError("checkers expect pure dual-rail netlists (no control inputs)")


def _vector_space(netlist: Netlist, limit: int, trials: Optional[int], seed: int):
    """All (or sampled) legal DATA vectors as per-port bit tuples."""
    n = len(netlist.inputs)
    if trials is None:
        if n > limit:
            raise NetlistError(
                f"{n} dual-rail inputs exceed the exhaustive guard of {limit}; "
                f"pass a trial count for sampled mode")
        return [tuple(v) for v in itertools.product((0, 1), repeat=n)], None
    rng = random.Random(seed)
    return None, rng


def check_input_completeness(
    netlist: Netlist,
    max_exhaustive_inputs: int = 12,
    trials: Optional[int] = None,
    seed: int = 0,
) -> list:
    """Partial-wavefront sweep per the behavioral definition.

    Exhaustive over every legal DATA vector and every strict nonempty
    subset of input ports when the port count is within the guard;
    otherwise ``trials`` random (vector, subset) pairs. Checks both the
    NULL→DATA and DATA→NULL directions. Empty list iff input-complete.
    """
    _check_preconditions(netlist)
    ports = netlist.inputs
    names = [p.name for p in ports]
    n = len(ports)
    if n < 2:
        return []  # no strict nonempty subset exists
    vectors, rng = _vector_space(netlist, max_exhaustive_inputs, trials, seed)

    def cases():
        if vectors is not None:
            subsets = [c for k in range(1, n) for c in itertools.combinations(range(n), k)]
            for vec in vectors:
                for sub in subsets:
                    yield vec, sub
        else:
            for _ in range(trials):
                vec = tuple(rng.randint(0, 1) for _ in range(n))
                k = rng.randint(1, n - 1)
                sub = tuple(sorted(rng.sample(range(n), k)))
                yield vec, sub

    violations = []
    seen = set()
    null_state = settle(netlist, {})
    data_states: Dict[Tuple[int, ...], Dict[str, int]] = {}
    for vec, sub in cases():
        if (vec, sub) in seen:
            continue
        seen.add((vec, sub))
        # NULL -> DATA: drive only the subset's rails, from the NULL state.
        partial = {names[i]: vec[i] for i in sub}
        vals = settle(netlist, encode_word(ports, partial), null_state)
        if all(dv.is_data for dv in output_word(netlist, vals).values()):
            violations.append(ICViolation(
                "null-to-data", vec, tuple(names[i] for i in sub)))
        # DATA -> NULL: from the settled full-DATA state, drop the subset.
        if vec not in data_states:
            full = {names[i]: vec[i] for i in range(n)}
            data_states[vec] = settle(netlist, encode_word(ports, full), null_state)
        kept = {names[i]: vec[i] for i in range(n) if i not in sub}
        vals = settle(netlist, encode_word(ports, kept), data_states[vec])
        if all(dv is DR.NULL for dv in output_word(netlist, vals).values()):
            violations.append(ICViolation(
                "data-to-null", vec, tuple(names[i] for i in sub)))
    return violations


def check_observability(
    netlist: Netlist,
    max_exhaustive_inputs: int = 12,
    trials: Optional[int] = None,
    seed: int = 0,
) -> list:
    """Transition-suppression sweep: freeze one gate output at 0 per DATA
    wavefront; a gate no wavefront can ever observe at the outputs is
    flagged. Empty list iff every gate is observable."""
    _check_preconditions(netlist)
    ports = netlist.inputs
    names = [p.name for p in ports]
    n = len(ports)
    vectors, rng = _vector_space(netlist, max_exhaustive_inputs, trials, seed)
    if vectors is None:
        vectors = [tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(trials)]
    null_state = settle(netlist, {})
    out_rails = netlist.output_rails()
    baselines = []
    for vec in vectors:
        rails = encode_word(ports, dict(zip(names, vec)))
        vals = settle(netlist, rails, null_state)
        baselines.append((rails, tuple(vals[r] for r in out_rails)))
    violations = []
    for inst in netlist.gates:
        observed = False
        for rails, base in baselines:
            vals = settle(netlist, rails, null_state, frozen={inst.out: 0})
            if tuple(vals[r] for r in out_rails) != base:
                observed = True
                break
        if not observed:
            violations.append(ObsViolation(inst.name))
    return violations


# -- text format -------------------------------------------------------------
#
# One declaration or gate per line; '#' starts a comment.
#   input A B
#   output S Cout            (or  output Z=x.0,x.1  for rebound rails)
#   ctlin ki                 (optional bare control nets)
#   TH22 s1 A.1 B.1 -> S.1   (kind, instance, inputs..., ->, output)
# Serialization is deterministic and round-trips bit-exact.

def _parse_output_token(tok: str, lineno: int) -> Port:
    if "=" not in tok:
        return port(tok)
    name, _, rest = tok.partition("=")
    rails = rest.split(",")
    if len(rails) != 2 or not name or not all(rails):
        raise FormatError(lineno, f"bad output binding {tok!r}; expected NAME=RAIL1,RAIL0")
    return Port(name, rails[0], rails[1])


def parse_netlist(text: str, catalog: Optional[GateCatalog] = None) -> Netlist:
    inputs: list = []
    outputs: list = []
    ctl_in: list = []
    ctl_out: list = []
    gate_lines: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head, rest = toks[0], toks[1:]
        if head == "input":
            inputs.extend(port(t) for t in rest)
        elif head == "output":
            outputs.extend(_parse_output_token(t, lineno) for t in rest)
        elif head == "ctlin":
            ctl_in.extend(rest)
        elif head == "ctlout":
            ctl_out.extend(rest)
        else:
            if "->" not in rest or rest.index("->") != len(rest) - 2:
                raise FormatError(lineno, "gate line must end with '-> <output net>'")
            if len(rest) < 4:
                raise FormatError(lineno, "gate line needs kind, instance, inputs, '->', output")
            gate_lines.append((lineno, head, rest[0], rest[1:-2], rest[-1]))
    if not inputs:
        raise FormatError(1, "no input declaration")
    if not outputs:
        raise FormatError(1, "no output declaration")
    nl = Netlist(inputs, outputs, catalog=catalog, ctl_inputs=ctl_in, ctl_outputs=ctl_out)
    for lineno, kind, name, ins, out in gate_lines:
        try:
            nl.spec(kind)
        except GateError as exc:
            raise FormatError(lineno, str(exc)) from exc
        try:
            nl.add(kind, ins, out, name=name)
        except NetlistError as exc:
            raise FormatError(lineno, str(exc)) from exc
    return nl


def serialize_netlist(netlist: Netlist) -> str:
    lines = ["input " + " ".join(p.name for p in netlist.inputs)]
    outs = []
    for p in netlist.outputs:
        outs.append(p.name if p.is_canonical else f"{p.name}={p.rail1},{p.rail0}")
    lines.append("output " + " ".join(outs))
    if netlist.ctl_inputs:
        lines.append("ctlin " + " ".join(netlist.ctl_inputs))
    if netlist.ctl_outputs:
        lines.append("ctlout " + " ".join(netlist.ctl_outputs))
    for g in netlist.gates:
        lines.append(f"{g.kind} {g.name} {' '.join(g.ins)} -> {g.out}")
    return "\n".join(lines) + "\n"


def load_netlist(path, catalog: Optional[GateCatalog] = None) -> Netlist:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_netlist(fh.read(), catalog)


def save_netlist(netlist: Netlist, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_netlist(netlist))
