"""RC estimation of gate and circuit figures in 2D and folded-3D form.

The model prices each threshold gate from four wire classes (supply drop,
ground return, an average output net, and an average input net), a device
capacitance proportional to the longest series stack, and a per-type drive
resistance.  Folding a gate across two tiers shortens the routable wire
classes by ``alpha`` and inserts one inter-tier via per folded net; supply
and ground runs keep their 2D geometry.  Delay is the ln(2)*R*C step
response, skew is a fixed fraction of delay, power splits into an
activity-driven dynamic term and a per-transistor leak, and area is a
transistor-count model with a via adder for the folded form.

Free coefficients come from :func:`calibrate`, which fits the bundled
reference measurements.  Units throughout: nm for drawn lengths, Ohm,
fF (C_int is fF/mm), ps, uW, um^2, MHz, volts.
"""
import json
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache
from hashlib import sha256
from importlib import resources
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .gates import GateCatalog, GateSpec, STUDY_GATES, spec_from_name, transistor_counts
from .netlist import Netlist
from .pipeline import PipelineSystem, build_pipeline
from .refdata import ReferenceTable, load_reference
from .sim import DelayAssignment, Report, Trace, measure, simulate

LN2 = math.log(2.0)

MODES = ("2D", "M3D")


class PpaError(ValueError):
    """Bad mode, fold ratio, or estimation request."""


class CalibrationError(PpaError):
    """The model cannot reproduce the reference data it was fit against."""


def _norm_mode(mode: str) -> str:
    m = str(mode).upper()
    if m not in MODES:
        raise PpaError(f"unknown mode {mode!r}, expected one of {MODES}")
    return m


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha <= 1.0:
        raise PpaError(f"fold ratio alpha={alpha} outside (0, 1]")
    return float(alpha)


# --------------------------------------------------------------- technology

@dataclass(frozen=True)
class TechParams:
    """Process constants. Defaults describe the 50 nm study node."""

    L_G: float = 50.0          # drawn gate length, nm
    l_src: float = 50.0        # source/drain extension, nm
    w_src: float = 90.0        # source/drain width, nm
    t_ILD: float = 120.0       # inter-layer dielectric, nm
    t_miv: float = 50.0        # inter-tier via height, nm
    w_M1: float = 65.0         # metal-1 width, nm
    pitch_M1: float = 130.0    # metal-1 pitch, nm
    w_gate: float = 50.0       # transistor gate width, nm
    R_int_sq: float = 0.38     # metal sheet resistance, Ohm/sq
    R_via: float = 6.0         # stacked-contact resistance, Ohm
    C_int: float = 179.93      # wire capacitance, fF/mm
    R_MIV: float = 5.5         # inter-tier via resistance, Ohm
    C_MIV: float = 0.04        # inter-tier via capacitance, fF
    koz: float = 50.0          # via keep-out, nm
    cell_tracks: int = 14      # cell height in M1 tracks
    V_DD: float = 1.1          # supply, V
    C_load: float = 1.0        # default output pin load, fF

    def __post_init__(self):
        can_be_zero = {"R_MIV", "C_MIV", "koz"}
        for f in fields(self):
            v = getattr(self, f.name)
            if v < 0 or (v == 0 and f.name not in can_be_zero):
                raise PpaError(f"tech parameter {f.name} must be positive, got {v}")

    @property
    def cell_height(self) -> float:
        """Routable cell span in nm, the base length for wire classes."""
        return self.cell_tracks * self.pitch_M1

    def replaced(self, **kw) -> "TechParams":
        return replace(self, **kw)

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def digest(self) -> str:
        return _digest(self.to_dict())


def dump_tech(tech: TechParams) -> str:
    return json.dumps({"version": 1, "tech": tech.to_dict()},
                      indent=2, sort_keys=True) + "\n"


def parse_tech(text: str) -> TechParams:
    try:
        doc = json.loads(text)
        body = doc["tech"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise PpaError(f"tech document is malformed: {exc}") from exc
    if doc.get("version") != 1:
        raise PpaError("unsupported tech document version")
    known = {f.name for f in fields(TechParams)}
    unknown = sorted(set(body) - known)
    if unknown:
        raise PpaError(f"unknown tech parameters: {unknown}")
    return TechParams(**body)


def load_tech(path) -> TechParams:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_tech(fh.read())


def save_tech(tech: TechParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_tech(tech))


@lru_cache(maxsize=1)
def default_tech() -> TechParams:
    text = resources.files("ncl3d").joinpath("data/default_tech.json").read_text("utf-8")
    return parse_tech(text)


def _digest(doc) -> str:
    return sha256(json.dumps(doc, sort_keys=True,
                             separators=(",", ":")).encode("utf-8")).hexdigest()


# -------------------------------------------------------------- wire classes

class Scenario(Enum):
    """The four wire classes a gate drives or is driven through."""

    VDD_TO_NODE = "vdd_to_node"
    NODE_TO_GND = "node_to_gnd"
    NODE_TO_NODE = "node_to_node"      # output net toward the next gate
    INPUT_TO_NODE = "input_to_node"    # input pin branch


@dataclass(frozen=True)
class WireRC:
    r: float             # Ohm
    c: float             # fF
    includes_miv: bool


def wire_parasitics(scenario: Scenario, tech: TechParams, mode: str = "2D",
                    alpha: float = 1.0, route_fraction: float = 0.5) -> WireRC:
    """RC of one wire class.

    Supply and ground drops span half the cell and keep their geometry in
    both modes.  Node-to-node and input-to-node runs cover ``route_fraction``
    of a full cell span; in M3D those shrink by ``alpha`` and gain one
    inter-tier via.  Via counts: one for supply, ground, and input branches,
    two for the landed output net.
    """
    mode = _norm_mode(mode)
    _check_alpha(alpha)
    if route_fraction <= 0.0:
        raise PpaError(f"route_fraction must be positive, got {route_fraction}")
    if scenario in (Scenario.VDD_TO_NODE, Scenario.NODE_TO_GND):
        length, vias, folds = tech.cell_height / 2.0, 1, False
    elif scenario is Scenario.NODE_TO_NODE:
        length, vias, folds = tech.cell_height * route_fraction, 2, True
    elif scenario is Scenario.INPUT_TO_NODE:
        length, vias, folds = tech.cell_height * route_fraction, 1, True
    else:
        raise PpaError(f"unknown wire scenario {scenario!r}")
    r_wire = tech.R_int_sq * length / tech.w_M1
    c_wire = tech.C_int * length * 1e-6
    if mode == "M3D" and folds:
        return WireRC(r=r_wire * alpha + vias * tech.R_via + tech.R_MIV,
                      c=c_wire * alpha + tech.C_MIV,
                      includes_miv=True)
    return WireRC(r=r_wire + vias * tech.R_via, c=c_wire, includes_miv=False)


def miv_count(spec: GateSpec) -> int:
    """Inter-tier vias a folded gate needs: one per pin plus both rails."""
    if spec.miv_override is not None:
        return spec.miv_override
    return spec.arity + 2


# -------------------------------------------------------------- calibration

@dataclass(frozen=True)
class Calibration:
    """Fitted model coefficients.

    ``route_fraction`` here is the fitted average net span actually used by
    the gate estimators; the knob on :func:`wire_parasitics` keeps its
    conservative default for direct use.  ``r_drive`` and ``activity_mhz``
    are per-type maps; unknown types fall back to the map average.
    """

    a_unit: float                      # um^2 per transistor
    a_miv_eff: float                   # um^2 per inter-tier via
    c_dev: float                       # fF per device of series stack
    k_skew: float                      # skew as a fraction of delay
    route_fraction: float              # fitted average net span, cell spans
    net_route_factor: float            # circuit fanout segment span, cell spans
    test_rate_mhz: float               # cycle rate behind the power figures
    p_leak_per_t: float                # uW of leak per transistor
    r_drive: Mapping[str, float] = field(default_factory=dict)       # Ohm
    activity_mhz: Mapping[str, float] = field(default_factory=dict)  # MHz
    residuals: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        # a_miv_eff may be zeroed to model vias as free, mirroring the
        # zeroable R_MIV/C_MIV tech fields; everything else must be positive.
        for name in ("a_unit", "c_dev", "k_skew", "route_fraction",
                     "net_route_factor", "test_rate_mhz", "p_leak_per_t"):
            if getattr(self, name) <= 0:
                raise PpaError(f"calibration field {name} must be positive")
        if self.a_miv_eff < 0:
            raise PpaError("calibration field a_miv_eff must be non-negative")
        for label, table in (("r_drive", self.r_drive),
                             ("activity_mhz", self.activity_mhz)):
            for kind, value in table.items():
                if value <= 0:
                    raise PpaError(f"{label}[{kind}] must be positive")

    def r_drive_for(self, kind: str) -> float:
        if kind in self.r_drive:
            return self.r_drive[kind]
        if not self.r_drive:
            raise PpaError("calibration carries no drive resistances")
        return sum(self.r_drive.values()) / len(self.r_drive)

    def activity_for(self, kind: str) -> float:
        if kind in self.activity_mhz:
            return self.activity_mhz[kind]
        if not self.activity_mhz:
            raise PpaError("calibration carries no activity figures")
        return sum(self.activity_mhz.values()) / len(self.activity_mhz)

    def to_dict(self) -> Dict[str, object]:
        doc: Dict[str, object] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            doc[f.name] = dict(v) if isinstance(v, Mapping) else v
        return doc

    def digest(self) -> str:
        return _digest(self.to_dict())


def dump_calibration(cal: Calibration) -> str:
    return json.dumps({"version": 1, "calibration": cal.to_dict()},
                      indent=2, sort_keys=True) + "\n"


def parse_calibration(text: str) -> Calibration:
    try:
        doc = json.loads(text)
        body = dict(doc["calibration"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise PpaError(f"calibration document is malformed: {exc}") from exc
    if doc.get("version") != 1:
        raise PpaError("unsupported calibration document version")
    known = {f.name for f in fields(Calibration)}
    unknown = sorted(set(body) - known)
    if unknown:
        raise PpaError(f"unknown calibration fields: {unknown}")
    return Calibration(**body)


def load_calibration(path) -> Calibration:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_calibration(fh.read())


def save_calibration(cal: Calibration, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_calibration(cal))


@lru_cache(maxsize=1)
def default_calibration() -> Calibration:
    text = resources.files("ncl3d").joinpath(
        "data/default_calibration.json").read_text("utf-8")
    return parse_calibration(text)


# ---------------------------------------------------------- gate estimators

def _wires(tech: TechParams, mode: str, alpha: float,
           route_fraction: float) -> Dict[Scenario, WireRC]:
    return {s: wire_parasitics(s, tech, mode, alpha, route_fraction)
            for s in Scenario}


def _cap_total(spec: GateSpec, tech: TechParams, mode: str, alpha: float,
               route_fraction: float, c_dev: float,
               load: Optional[float]) -> float:
    """Switched capacitance: devices, all four wire classes, output load."""
    w = _wires(tech, mode, alpha, route_fraction)
    c = c_dev * spec.max_stack
    c += w[Scenario.VDD_TO_NODE].c + w[Scenario.NODE_TO_GND].c
    c += w[Scenario.NODE_TO_NODE].c + spec.arity * w[Scenario.INPUT_TO_NODE].c
    c += tech.C_load if load is None else load
    return c


def _worst_wire_r(tech: TechParams, mode: str, alpha: float,
                  route_fraction: float) -> float:
    return max(w.r for w in _wires(tech, mode, alpha, route_fraction).values())


def _as_spec(kind: Union[str, GateSpec],
             catalog: Optional[GateCatalog] = None) -> GateSpec:
    return kind if isinstance(kind, GateSpec) else spec_from_name(kind, catalog)


def gate_capacitance(kind: Union[str, GateSpec], tech: TechParams,
                     cal: Calibration, mode: str = "2D", alpha: float = 1.0,
                     load: Optional[float] = None) -> float:
    """Total switched capacitance in fF. ``load`` overrides the pin default."""
    spec = _as_spec(kind)
    return _cap_total(spec, tech, _norm_mode(mode), _check_alpha(alpha),
                      cal.route_fraction, cal.c_dev, load)


def gate_delay_skew(kind: Union[str, GateSpec], tech: TechParams,
                    cal: Calibration, mode: str = "2D", alpha: float = 1.0,
                    load: Optional[float] = None) -> Tuple[float, float]:
    """(propagation delay, output skew) in ps for one gate type."""
    spec = _as_spec(kind)
    mode = _norm_mode(mode)
    alpha = _check_alpha(alpha)
    c = _cap_total(spec, tech, mode, alpha, cal.route_fraction, cal.c_dev, load)
    r = cal.r_drive_for(spec.name) + _worst_wire_r(tech, mode, alpha,
                                                   cal.route_fraction)
    t_d = LN2 * r * c * 1e-3
    return t_d, cal.k_skew * t_d


def gate_power(kind: Union[str, GateSpec], tech: TechParams, cal: Calibration,
               mode: str = "2D", alpha: float = 1.0,
               load: Optional[float] = None,
               activity_mhz: Optional[float] = None) -> float:
    """Average power in uW: activity-weighted dynamic term plus leak."""
    spec = _as_spec(kind)
    c = gate_capacitance(spec, tech, cal, mode, alpha, load)
    act = cal.activity_for(spec.name) if activity_mhz is None else activity_mhz
    n_t = sum(transistor_counts(spec))
    return act * c * tech.V_DD ** 2 * 1e-3 + n_t * cal.p_leak_per_t


def gate_area(kind: Union[str, GateSpec], tech: TechParams, cal: Calibration,
              mode: str = "2D") -> float:
    """Footprint in um^2. Folding stacks the smaller device plane on top."""
    spec = _as_spec(kind)
    p, n = transistor_counts(spec)
    if _norm_mode(mode) == "2D":
        return (p + n) * cal.a_unit
    return max(p, n) * cal.a_unit + miv_count(spec) * cal.a_miv_eff


@dataclass(frozen=True)
class PpaReport:
    t_d: float      # ps
    t_s: float      # ps
    power: float    # uW
    area: float     # um^2
    mode: str
    alpha: float    # exactly 1.0 in 2D


def gate_ppa(kind: Union[str, GateSpec], tech: TechParams, cal: Calibration,
             mode: str = "2D", alpha: float = 1.0) -> PpaReport:
    mode = _norm_mode(mode)
    alpha = 1.0 if mode == "2D" else _check_alpha(alpha)
    t_d, t_s = gate_delay_skew(kind, tech, cal, mode, alpha)
    return PpaReport(
        t_d=t_d,
        t_s=t_s,
        power=gate_power(kind, tech, cal, mode, alpha),
        area=gate_area(kind, tech, cal, mode),
        mode=mode,
        alpha=alpha,
    )


def gate_improvements(kind: Union[str, GateSpec], tech: TechParams,
                      cal: Calibration, alpha: float) -> Dict[str, float]:
    """Percent reduction of each figure when the gate folds at ``alpha``."""
    base = gate_ppa(kind, tech, cal, "2D")
    fold = gate_ppa(kind, tech, cal, "M3D", alpha)
    return {
        "t_d": 100.0 * (1.0 - fold.t_d / base.t_d),
        "t_s": 100.0 * (1.0 - fold.t_s / base.t_s),
        "power": 100.0 * (1.0 - fold.power / base.power),
        "area": 100.0 * (1.0 - fold.area / base.area),
    }


# ------------------------------------------------------------------ fitting

# Anchors beyond the reference table: the deepest studied fold ratio and
# the best-case delay gain it is known to reach, plus the per-instance
# average delay gain the fanout-loaded circuit model is sized for (kept a
# few points under the 1 - alpha asymptote so the fit stays well inside
# its feasible range).
SWEEP_LOW_ALPHA = 0.6
SWEEP_LOW_TARGET = 0.16
INSTANCE_DELAY_TARGET = 0.26

_RF_BOUNDS = (0.2, 3.0)
_CDEV_BOUNDS = (0.05, 10.0)


def _fit_r_drive(spec: GateSpec, t_d2: float, tech: TechParams,
                 route_fraction: float, c_dev: float) -> float:
    """Drive resistance that reproduces the 2D delay exactly."""
    c2 = _cap_total(spec, tech, "2D", 1.0, route_fraction, c_dev, None)
    return t_d2 * 1e3 / (LN2 * c2) - _worst_wire_r(tech, "2D", 1.0, route_fraction)


def _delay_improvement(spec: GateSpec, r_drive: float, tech: TechParams,
                       alpha: float, route_fraction: float, c_dev: float,
                       load2: Optional[float] = None,
                       load3: Optional[float] = None) -> float:
    c2 = _cap_total(spec, tech, "2D", 1.0, route_fraction, c_dev, load2)
    c3 = _cap_total(spec, tech, "M3D", alpha, route_fraction, c_dev, load3)
    r2 = r_drive + _worst_wire_r(tech, "2D", 1.0, route_fraction)
    r3 = r_drive + _worst_wire_r(tech, "M3D", alpha, route_fraction)
    return 1.0 - (r3 * c3) / (r2 * c2)


def _study_improvements(tech: TechParams, table: ReferenceTable, alpha: float,
                        route_fraction: float, c_dev: float,
                        catalog: Optional[GateCatalog]) -> List[float]:
    out = []
    for name in table.gate_names():
        spec = _as_spec(name, catalog)
        r = _fit_r_drive(spec, table.gates_2d[name].t_d, tech,
                         route_fraction, c_dev)
        out.append(_delay_improvement(spec, r, tech, alpha,
                                      route_fraction, c_dev))
    return out


def _segment_cap(tech: TechParams, mode: str, alpha: float,
                 net_route_factor: float) -> float:
    """Capacitance of one fanout segment of the circuit routing model."""
    c = tech.C_int * tech.cell_height * net_route_factor * 1e-6
    if mode == "M3D":
        return c * alpha + tech.C_MIV
    return c


def _instance_rows(cl: Netlist,
                   catalog: Optional[GateCatalog] = None) -> List[Tuple[GateSpec, int]]:
    return [(cl.spec(g.kind), max(1, cl.fanout(g.out))) for g in cl.gates]


def _avg_instance_improvement(rows: Sequence[Tuple[GateSpec, int]],
                              r_drive: Mapping[str, float], tech: TechParams,
                              alpha: float, route_fraction: float,
                              c_dev: float, lam: float) -> float:
    seg2 = _segment_cap(tech, "2D", 1.0, lam)
    seg3 = _segment_cap(tech, "M3D", alpha, lam)
    total = 0.0
    for spec, fanout in rows:
        total += _delay_improvement(spec, r_drive[spec.name], tech, alpha,
                                    route_fraction, c_dev,
                                    load2=fanout * seg2, load3=fanout * seg3)
    return total / len(rows)


def _calibration_workload(width: int = 4):
    """The pipelined multiplier and input sweep behind the circuit anchors."""
    from .synth import build_array_multiplier, operand_bits

    cl = build_array_multiplier(width)
    vectors = [operand_bits(width, x, y)
               for x in range(1 << width) for y in range(1 << width)]
    return cl, vectors


def calibrate(tech: Optional[TechParams] = None,
              table: Optional[ReferenceTable] = None,
              catalog: Optional[GateCatalog] = None) -> Calibration:
    """Fit every model coefficient against the bundled reference rows.

    The fit is deterministic: area units and drive resistances are closed
    form, the (route_fraction, c_dev) pair comes from a bounded least
    squares on two delay-improvement anchors, the skew fraction is the
    minimax ratio, the via area adder is a least squares through the
    origin, the circuit routing span is bisected to its anchor, and the
    power pair (test rate, leak) solves the two circuit power anchors
    after one unit-delay simulation of the width-4 multiplier.
    """
    from scipy.optimize import least_squares

    tech = tech or default_tech()
    table = table or load_reference()
    names = table.gate_names()
    if not names:
        raise CalibrationError("reference table lists no gates")
    specs = {n: _as_spec(n, catalog) for n in names}
    alpha_ref = table.alpha
    residuals: Dict[str, float] = {}

    # area per transistor, which the 2D rows fix up to rounding noise
    units = {n: table.gates_2d[n].area / sum(transistor_counts(specs[n]))
             for n in names}
    a_unit = sum(units.values()) / len(units)
    unit_dev = max(abs(u / a_unit - 1.0) for u in units.values())
    if unit_dev > 0.01:
        raise CalibrationError(
            f"2D areas are not a common multiple of transistor count "
            f"(worst deviation {unit_dev:.2%})")
    residuals["a_unit_rel_spread"] = unit_dev

    # net span and device capacitance from two delay-improvement anchors
    avg_target = table.average_improvement_pct["t_d"] / 100.0

    def anchor_residuals(x):
        rf, cd = x
        ref = _study_improvements(tech, table, alpha_ref, rf, cd, catalog)
        low = _study_improvements(tech, table, SWEEP_LOW_ALPHA, rf, cd, catalog)
        return [sum(ref) / len(ref) - avg_target, max(low) - SWEEP_LOW_TARGET]

    fit = least_squares(anchor_residuals, x0=(1.0, 1.0),
                        bounds=((_RF_BOUNDS[0], _CDEV_BOUNDS[0]),
                                (_RF_BOUNDS[1], _CDEV_BOUNDS[1])))
    route_fraction, c_dev = float(fit.x[0]), float(fit.x[1])
    res_ref, res_low = anchor_residuals((route_fraction, c_dev))
    residuals["delay_avg_at_ref_alpha"] = res_ref + avg_target
    residuals["delay_max_at_low_alpha"] = res_low + SWEEP_LOW_TARGET
    if abs(res_ref) > 0.04:
        raise CalibrationError(
            f"average delay improvement at alpha={alpha_ref} lands at "
            f"{(res_ref + avg_target):.1%}, too far from its anchor")
    if not 0.12 <= res_low + SWEEP_LOW_TARGET <= 0.18:
        raise CalibrationError(
            f"best delay improvement at alpha={SWEEP_LOW_ALPHA} lands at "
            f"{(res_low + SWEEP_LOW_TARGET):.1%}, outside its anchor band")

    r_drive = {n: _fit_r_drive(specs[n], table.gates_2d[n].t_d, tech,
                               route_fraction, c_dev) for n in names}
    bad = [n for n, r in r_drive.items() if r <= 0]
    if bad:
        raise CalibrationError(f"non-physical drive resistance for {bad}")

    # skew fraction: minimax over the per-gate skew/delay ratios
    ratios = {n: table.gates_2d[n].t_s / table.gates_2d[n].t_d for n in names}
    lo, hi = min(ratios.values()), max(ratios.values())
    k_skew = 2.0 * lo * hi / (lo + hi)
    skew_err = (hi - lo) / (hi + lo)
    if skew_err > 0.10:
        raise CalibrationError(
            f"skew/delay ratios spread too wide for one fraction "
            f"(worst error {skew_err:.1%})")
    residuals["skew_worst_rel_err"] = skew_err

    # via area adder: least squares through the origin against the
    # fold-area overheads the improvement column implies
    num = den = 0.0
    for n in names:
        spec = specs[n]
        implied = table.gates_2d[n].area * (
            1.0 - table.improvements_pct[n]["area"] / 100.0)
        overhead = implied - max(*transistor_counts(spec)) * a_unit
        num += overhead * miv_count(spec)
        den += miv_count(spec) ** 2
    a_miv_eff = num / den
    if a_miv_eff <= 0:
        raise CalibrationError("fold area overheads imply a negative via adder")

    probe = Calibration(
        a_unit=a_unit, a_miv_eff=a_miv_eff, c_dev=c_dev, k_skew=k_skew,
        route_fraction=route_fraction, net_route_factor=1.0,
        test_rate_mhz=1.0, p_leak_per_t=1.0,
        r_drive=dict(r_drive), activity_mhz={n: 1.0 for n in names})
    area_errs = []
    for n in names:
        got = gate_improvements(specs[n], tech, probe, alpha_ref)["area"]
        area_errs.append(got - table.improvements_pct[n]["area"])
        if abs(area_errs[-1]) > 5.0:
            raise CalibrationError(
                f"{n} fold area improvement off by {area_errs[-1]:.1f} points")
    avg_area = table.average_improvement_pct["area"]
    got_avg = sum(gate_improvements(specs[n], tech, probe, alpha_ref)["area"]
                  for n in names) / len(names)
    if abs(got_avg - avg_area) > 3.0:
        raise CalibrationError(
            f"average fold area improvement {got_avg:.1f}% misses {avg_area}%")
    residuals["area_avg_impr_pct"] = got_avg

    # circuit routing span: bisect the fanout segment length until the
    # average per-instance delay improvement meets its anchor
    cl, vectors = _calibration_workload()
    rows = _instance_rows(cl)

    def lam_gap(lam: float) -> float:
        return _avg_instance_improvement(rows, r_drive, tech, alpha_ref,
                                         route_fraction, c_dev,
                                         lam) - INSTANCE_DELAY_TARGET

    lam_lo, lam_hi = 1e-3, 200.0
    if lam_gap(lam_lo) > 0 or lam_gap(lam_hi) < 0:
        raise CalibrationError("circuit delay anchor is outside the routing "
                               "span the fanout model can express")
    for _ in range(80):
        mid = 0.5 * (lam_lo + lam_hi)
        if lam_gap(mid) < 0:
            lam_lo = mid
        else:
            lam_hi = mid
    net_route_factor = 0.5 * (lam_lo + lam_hi)
    residuals["instance_delay_impr"] = (lam_gap(net_route_factor)
                                        + INSTANCE_DELAY_TARGET)

    # power pair (cycle rate, leak per transistor) from the two circuit
    # anchors; transition counts are delay independent, so one unit-delay
    # run of the multiplier fixes the per-net activity
    system = build_pipeline(cl, n_stages=1)
    trace = simulate(system, vectors)
    counts = trace.transition_counts()
    n_waves = len(trace.waves)
    v2 = tech.V_DD ** 2

    def weighted_cap(mode: str, alpha: float) -> float:
        seg = _segment_cap(tech, mode, alpha, net_route_factor)
        total = 0.0
        for g in cl.gates:
            spec = cl.spec(g.kind)
            fanout = max(1, cl.fanout(g.out))
            c = _cap_total(spec, tech, mode, alpha, route_fraction, c_dev,
                           fanout * seg)
            total += counts.get(g.out, 0) / (2.0 * n_waves) * c
        return total

    d2 = weighted_cap("2D", 1.0) * v2 * 1e-3    # uW per MHz
    d3 = weighted_cap("M3D", alpha_ref) * v2 * 1e-3
    p2 = float(table.circuit["power_2d_uw"])
    p3 = float(table.circuit["power_m3d_uw"])
    if d2 <= d3:
        raise CalibrationError("folding does not reduce switched capacitance")
    test_rate_mhz = (p2 - p3) / (d2 - d3)
    n_t_total = sum(sum(transistor_counts(cl.spec(g.kind))) for g in cl.gates)
    p_leak_per_t = (p2 - test_rate_mhz * d2) / n_t_total
    if test_rate_mhz <= 0 or p_leak_per_t <= 0:
        raise CalibrationError(
            f"circuit power anchors split into test rate {test_rate_mhz:.1f} "
            f"MHz and leak {p_leak_per_t:.2e} uW/transistor")
    residuals["circuit_dyn_2d_uw_per_mhz"] = d2

    # per-type activity from the standalone 2D power rows
    activity = {}
    for n in names:
        c2 = _cap_total(specs[n], tech, "2D", 1.0, route_fraction, c_dev, None)
        leak = sum(transistor_counts(specs[n])) * p_leak_per_t
        act = (table.gates_2d[n].power - leak) * 1e3 / (c2 * v2)
        if act <= 0:
            raise CalibrationError(f"{n} leak exceeds its total power")
        activity[n] = act

    return Calibration(
        a_unit=a_unit,
        a_miv_eff=a_miv_eff,
        c_dev=c_dev,
        k_skew=k_skew,
        route_fraction=route_fraction,
        net_route_factor=net_route_factor,
        test_rate_mhz=test_rate_mhz,
        p_leak_per_t=p_leak_per_t,
        r_drive=dict(r_drive),
        activity_mhz=activity,
        residuals=residuals,
    )


# ------------------------------------------------------------ circuit rollup

def circuit_delay_assignment(system: PipelineSystem, cl: Netlist,
                             tech: TechParams, cal: Calibration,
                             mode: str = "2D",
                             alpha: float = 1.0) -> DelayAssignment:
    """Per-instance delays in whole ps for simulating one implementation.

    Logic instances carry their fanout wire load; register and completion
    plumbing keeps the standalone pin load.
    """
    mode = _norm_mode(mode)
    alpha = 1.0 if mode == "2D" else _check_alpha(alpha)
    seg = _segment_cap(tech, mode, alpha, cal.net_route_factor)
    fanout = {g.name: max(1, cl.fanout(g.out)) for g in cl.gates}
    per: Dict[str, int] = {}
    for g in system.netlist.gates:
        load = fanout[g.name] * seg if g.name in fanout else None
        t_d, _ = gate_delay_skew(system.netlist.spec(g.kind), tech, cal,
                                 mode, alpha, load=load)
        per[g.name] = max(1, round(t_d))
    return DelayAssignment(per_gate=per)


def circuit_ppa(cl: Netlist, trace: Trace, tech: TechParams, cal: Calibration,
                mode: str = "2D", alpha: float = 1.0) -> PpaReport:
    """Roll a simulated trace and the gate model up to circuit figures.

    Area and power cover the gates of ``cl`` (the measured block); the
    handshake plumbing around it is excluded, matching how the reference
    circuit is accounted.  Delay and skew come from the trace.
    """
    mode = _norm_mode(mode)
    alpha = 1.0 if mode == "2D" else _check_alpha(alpha)
    rep = measure(trace)
    if rep.worst_forward_latency is None:
        raise PpaError("trace carries no completed waves to time")
    seg = _segment_cap(tech, mode, alpha, cal.net_route_factor)
    counts = trace.transition_counts()
    n_waves = len(trace.waves)
    p_dyn = 0.0
    area = 0.0
    n_t = 0
    for g in cl.gates:
        spec = cl.spec(g.kind)
        load = max(1, cl.fanout(g.out)) * seg
        c = _cap_total(spec, tech, mode, alpha, cal.route_fraction,
                       cal.c_dev, load)
        p_dyn += counts.get(g.out, 0) / (2.0 * n_waves) * c
        area += gate_area(spec, tech, cal, mode)
        n_t += sum(transistor_counts(spec))
    p_dyn *= cal.test_rate_mhz * tech.V_DD ** 2 * 1e-3
    return PpaReport(
        t_d=float(rep.worst_forward_latency),
        t_s=float(rep.worst_output_skew),
        power=p_dyn + n_t * cal.p_leak_per_t,
        area=area,
        mode=mode,
        alpha=alpha,
    )


@dataclass(frozen=True)
class CircuitResult:
    ppa: PpaReport
    metrics: Report
    trace: Trace


def evaluate_circuit(cl: Netlist, vectors: Sequence,
                     tech: Optional[TechParams] = None,
                     cal: Optional[Calibration] = None,
                     mode: str = "2D", alpha: float = 1.0,
                     n_stages: int = 1) -> CircuitResult:
    """Pipeline, simulate, and price one implementation of ``cl``."""
    tech = tech or default_tech()
    cal = cal or default_calibration()
    system = build_pipeline(cl, n_stages=n_stages)
    delays = circuit_delay_assignment(system, cl, tech, cal, mode, alpha)
    trace = simulate(system, vectors, delays)
    return CircuitResult(
        ppa=circuit_ppa(cl, trace, tech, cal, mode, alpha),
        metrics=measure(trace),
        trace=trace,
    )


# ------------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepRow:
    alpha: float
    improvements: Mapping[str, float]              # percent, 2D baseline
    per_gate: Mapping[str, Mapping[str, float]]    # empty for circuit sweeps


def sweep_alpha(target: Union[Sequence[str], Netlist],
                alphas: Sequence[float],
                tech: Optional[TechParams] = None,
                cal: Optional[Calibration] = None,
                vectors: Optional[Sequence] = None) -> List[SweepRow]:
    """Fold-ratio sweep, deepest fold last.

    ``target`` is either gate type names (headline row is their average)
    or a combinational netlist, which also needs input ``vectors``.
    """
    tech = tech or default_tech()
    cal = cal or default_calibration()
    order = sorted({_check_alpha(a) for a in alphas}, reverse=True)
    if not order:
        raise PpaError("no fold ratios to sweep")
    rows: List[SweepRow] = []
    if isinstance(target, Netlist):
        if vectors is None:
            raise PpaError("a circuit sweep needs input vectors")
        base = evaluate_circuit(target, vectors, tech, cal, "2D").ppa
        for a in order:
            fold = evaluate_circuit(target, vectors, tech, cal, "M3D", a).ppa
            rows.append(SweepRow(
                alpha=a,
                improvements={
                    "t_d": 100.0 * (1.0 - fold.t_d / base.t_d),
                    "t_s": 100.0 * (1.0 - fold.t_s / base.t_s),
                    "power": 100.0 * (1.0 - fold.power / base.power),
                    "area": 100.0 * (1.0 - fold.area / base.area),
                },
                per_gate={},
            ))
        return rows
    kinds = list(target)
    if not kinds:
        raise PpaError("no gate types to sweep")
    for a in order:
        per = {k: gate_improvements(k, tech, cal, a) for k in kinds}
        avg = {m: sum(p[m] for p in per.values()) / len(per)
               for m in ("t_d", "t_s", "power", "area")}
        rows.append(SweepRow(alpha=a, improvements=avg, per_gate=per))
    return rows
