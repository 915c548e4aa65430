"""RC model, calibration, and circuit rollup.

Wire figures are checked against hand-computed constants from the default
technology numbers.  Gate and circuit figures are checked against the
bundled reference rows and their improvement columns, with the bands the
model is required to hold.
"""
import json
import math

import pytest

from ncl3d.gates import GateSpec, canonical_sop, spec_from_name, transistor_counts
from ncl3d.ppa import (
    Calibration,
    CalibrationError,
    PpaError,
    Scenario,
    TechParams,
    calibrate,
    circuit_delay_assignment,
    default_calibration,
    default_tech,
    dump_calibration,
    dump_tech,
    evaluate_circuit,
    gate_area,
    gate_capacitance,
    gate_delay_skew,
    gate_improvements,
    gate_power,
    gate_ppa,
    load_calibration,
    load_tech,
    miv_count,
    parse_calibration,
    parse_tech,
    sweep_alpha,
    wire_parasitics,
)
from ncl3d.pipeline import build_pipeline
from ncl3d.refdata import load_reference
from ncl3d.sim import DelayAssignment, simulate
from ncl3d.synth import build_array_multiplier, operand_bits

# Hand-computed from the default technology: half a 14-track cell at
# 130 nm pitch is 910 nm of wire, so 0.38 Ohm/sq * 910 / 65 = 5.32 Ohm
# of metal and 179.93 fF/mm * 910 nm = 0.1637363 fF.
HALF_CELL_R = 5.32
HALF_CELL_C = 0.1637363

METRICS = ("t_d", "t_s", "power", "area")


@pytest.fixture(scope="module")
def tech():
    return default_tech()


@pytest.fixture(scope="module")
def cal():
    return default_calibration()


@pytest.fixture(scope="module")
def table():
    return load_reference()


# ----------------------------------------------------------------- tech I/O

def test_default_tech_values(tech):
    assert tech.V_DD == 1.1
    assert tech.C_int == 179.93
    assert tech.cell_tracks == 14
    assert tech.cell_height == 1820.0


def test_tech_validation():
    with pytest.raises(PpaError):
        TechParams(w_M1=0.0)
    with pytest.raises(PpaError):
        TechParams(V_DD=-1.0)
    # ideal vias are allowed, they model the degenerate fold
    ideal = TechParams(R_MIV=0.0, C_MIV=0.0)
    assert ideal.R_MIV == 0.0


def test_tech_round_trip(tech, tmp_path):
    path = tmp_path / "tech.json"
    path.write_text(dump_tech(tech.replaced(V_DD=0.9)))
    back = load_tech(path)
    assert back.V_DD == 0.9
    assert back.C_int == tech.C_int


@pytest.mark.parametrize("text", [
    "not json",
    json.dumps({"version": 2, "tech": {}}),
    json.dumps({"version": 1, "tech": {"no_such_knob": 1.0}}),
])
def test_tech_parse_errors(text):
    with pytest.raises(PpaError):
        parse_tech(text)


# ------------------------------------------------------------- wire classes

def test_supply_wires(tech):
    for s in (Scenario.VDD_TO_NODE, Scenario.NODE_TO_GND):
        w = wire_parasitics(s, tech)
        assert w.r == pytest.approx(HALF_CELL_R + 6.0, rel=1e-12)
        assert w.c == pytest.approx(HALF_CELL_C, rel=1e-12)
        assert not w.includes_miv


def test_signal_wires_2d(tech):
    ntn = wire_parasitics(Scenario.NODE_TO_NODE, tech, route_fraction=0.5)
    itn = wire_parasitics(Scenario.INPUT_TO_NODE, tech, route_fraction=0.5)
    # both span half a cell at the default fraction; the landed output
    # net pays one extra via
    assert ntn.r == pytest.approx(HALF_CELL_R + 12.0, rel=1e-12)
    assert itn.r == pytest.approx(HALF_CELL_R + 6.0, rel=1e-12)
    assert ntn.c == itn.c == pytest.approx(HALF_CELL_C, rel=1e-12)
    triple = wire_parasitics(Scenario.NODE_TO_NODE, tech, route_fraction=3.0)
    assert triple.r == pytest.approx(6 * HALF_CELL_R + 12.0, rel=1e-12)
    assert triple.c == pytest.approx(6 * HALF_CELL_C, rel=1e-12)


def test_signal_wires_fold(tech):
    w = wire_parasitics(Scenario.NODE_TO_NODE, tech, "M3D", 0.7, 0.5)
    assert w.includes_miv
    assert w.r == pytest.approx(HALF_CELL_R * 0.7 + 12.0 + 5.5, rel=1e-12)
    assert w.c == pytest.approx(HALF_CELL_C * 0.7 + 0.04, rel=1e-12)
    # supply geometry never folds
    v2 = wire_parasitics(Scenario.VDD_TO_NODE, tech, "2D")
    v3 = wire_parasitics(Scenario.VDD_TO_NODE, tech, "M3D", 0.7)
    assert v2 == v3


def test_degenerate_fold_wire_identity(tech):
    ideal = tech.replaced(R_MIV=0.0, C_MIV=0.0)
    for s in Scenario:
        flat = wire_parasitics(s, ideal, "2D", 1.0, 0.8)
        fold = wire_parasitics(s, ideal, "M3D", 1.0, 0.8)
        assert fold.r == flat.r
        assert fold.c == flat.c


def test_wire_validation(tech):
    with pytest.raises(PpaError):
        wire_parasitics(Scenario.NODE_TO_NODE, tech, "4D")
    with pytest.raises(PpaError):
        wire_parasitics(Scenario.NODE_TO_NODE, tech, "M3D", 0.0)
    with pytest.raises(PpaError):
        wire_parasitics(Scenario.NODE_TO_NODE, tech, "M3D", 1.2)
    with pytest.raises(PpaError):
        wire_parasitics(Scenario.NODE_TO_NODE, tech, route_fraction=0.0)


def test_miv_counts():
    assert miv_count(spec_from_name("TH22")) == 4
    assert miv_count(spec_from_name("TH24comp")) == 6
    tapped = GateSpec(name="T", arity=2, products=canonical_sop([(0, 1)], 2),
                      miv_override=9)
    assert miv_count(tapped) == 9


# ---------------------------------------------------------- calibration I/O

def test_calibration_validation(cal):
    with pytest.raises(PpaError):
        Calibration(a_unit=0.0, a_miv_eff=1.0, c_dev=1.0, k_skew=1.0,
                    route_fraction=1.0, net_route_factor=1.0,
                    test_rate_mhz=1.0, p_leak_per_t=1.0)
    with pytest.raises(PpaError):
        Calibration(a_unit=1.0, a_miv_eff=1.0, c_dev=1.0, k_skew=1.0,
                    route_fraction=1.0, net_route_factor=1.0,
                    test_rate_mhz=1.0, p_leak_per_t=1.0,
                    r_drive={"TH22": -5.0})
    with pytest.raises(PpaError):
        Calibration(a_unit=1.0, a_miv_eff=-0.001, c_dev=1.0, k_skew=1.0,
                    route_fraction=1.0, net_route_factor=1.0,
                    test_rate_mhz=1.0, p_leak_per_t=1.0)
    # zero is allowed: it models inter-tier vias as free
    free = Calibration(a_unit=1.0, a_miv_eff=0.0, c_dev=1.0, k_skew=1.0,
                       route_fraction=1.0, net_route_factor=1.0,
                       test_rate_mhz=1.0, p_leak_per_t=1.0)
    assert free.a_miv_eff == 0.0


def test_calibration_fallbacks(cal):
    known = cal.r_drive_for("TH22")
    assert known == cal.r_drive["TH22"]
    mean = sum(cal.r_drive.values()) / len(cal.r_drive)
    assert cal.r_drive_for("TH12") == pytest.approx(mean)
    bare = Calibration(a_unit=1.0, a_miv_eff=1.0, c_dev=1.0, k_skew=1.0,
                       route_fraction=1.0, net_route_factor=1.0,
                       test_rate_mhz=1.0, p_leak_per_t=1.0)
    with pytest.raises(PpaError):
        bare.r_drive_for("TH22")
    with pytest.raises(PpaError):
        bare.activity_for("TH22")


def test_calibration_round_trip(cal, tmp_path):
    path = tmp_path / "cal.json"
    path.write_text(dump_calibration(cal))
    back = load_calibration(path)
    assert back == cal
    assert back.digest() == cal.digest()


@pytest.mark.parametrize("text", [
    "not json",
    json.dumps({"version": 2, "calibration": {}}),
])
def test_calibration_parse_errors(text):
    with pytest.raises(PpaError):
        parse_calibration(text)


def test_bundled_calibration_matches_refit(cal):
    """The committed coefficients are exactly what calibrate() produces."""
    fresh = calibrate()
    for name in ("a_unit", "a_miv_eff", "c_dev", "k_skew", "route_fraction",
                 "net_route_factor", "test_rate_mhz", "p_leak_per_t"):
        assert getattr(fresh, name) == pytest.approx(getattr(cal, name),
                                                     rel=1e-9), name
    for kind in cal.r_drive:
        assert fresh.r_drive[kind] == pytest.approx(cal.r_drive[kind], rel=1e-9)
        assert fresh.activity_mhz[kind] == pytest.approx(
            cal.activity_mhz[kind], rel=1e-9)


# ------------------------------------------------------------- gate figures

def test_area_unit(cal, table):
    # every 2D area row is transistor count times one unit cell
    assert cal.a_unit == pytest.approx(0.0171, rel=1e-9)
    for name, row in table.gates_2d.items():
        n_t = sum(transistor_counts(spec_from_name(name)))
        assert row.area == pytest.approx(n_t * cal.a_unit, rel=1e-9)


def test_skew_fraction(cal, table):
    # minimax fit between the extreme skew/delay ratios
    lo = table.gates_2d["TH34"].t_s / table.gates_2d["TH34"].t_d
    hi = table.gates_2d["TH22"].t_s / table.gates_2d["TH22"].t_d
    assert cal.k_skew == pytest.approx(2 * lo * hi / (lo + hi), rel=1e-12)
    for name, row in table.gates_2d.items():
        assert cal.k_skew * row.t_d == pytest.approx(row.t_s, rel=0.10)


def test_flat_gate_rows_reproduced(tech, cal, table):
    """2D delay, power, and area match the reference rows exactly; skew
    stays within the documented single-fraction error."""
    for name in table.gate_names():
        ref = table.gates_2d[name]
        got = gate_ppa(name, tech, cal, "2D")
        assert got.t_d == pytest.approx(ref.t_d, rel=1e-9)
        assert got.power == pytest.approx(ref.power, rel=1e-9)
        assert got.area == pytest.approx(ref.area, rel=1e-9)
        assert got.t_s == pytest.approx(ref.t_s, rel=0.10)
        assert got.mode == "2D" and got.alpha == 1.0


def test_gate_delay_formula(tech, cal):
    # rebuild one delay from public pieces: ln2 * (Rdrive + worst wire R)
    # * (device + wires + pin load) in fF gives ps after the 1e-3 scale
    spec = spec_from_name("TH22")
    rf = cal.route_fraction
    wires = {s: wire_parasitics(s, tech, "2D", 1.0, rf) for s in Scenario}
    c = (cal.c_dev * spec.max_stack
         + wires[Scenario.VDD_TO_NODE].c + wires[Scenario.NODE_TO_GND].c
         + wires[Scenario.NODE_TO_NODE].c
         + spec.arity * wires[Scenario.INPUT_TO_NODE].c
         + tech.C_load)
    assert gate_capacitance("TH22", tech, cal) == pytest.approx(c, rel=1e-12)
    r = cal.r_drive["TH22"] + max(w.r for w in wires.values())
    t_d, t_s = gate_delay_skew("TH22", tech, cal)
    assert t_d == pytest.approx(math.log(2) * r * c * 1e-3, rel=1e-12)
    assert t_s == pytest.approx(cal.k_skew * t_d, rel=1e-12)


def test_gate_power_split(tech, cal):
    spec = spec_from_name("TH24")
    quiet = gate_power(spec, tech, cal, activity_mhz=1e-12)
    assert quiet == pytest.approx(26 * cal.p_leak_per_t, rel=1e-6)
    busy = gate_power(spec, tech, cal, activity_mhz=100.0)
    c = gate_capacitance(spec, tech, cal)
    assert busy - quiet == pytest.approx(100.0 * c * 1.21 * 1e-3, rel=1e-6)


def test_fold_area_improvements(tech, cal, table):
    errs = []
    for name in table.gate_names():
        got = gate_improvements(name, tech, cal, table.alpha)["area"]
        ref = table.improvements_pct[name]["area"]
        errs.append(got - ref)
        assert abs(got - ref) <= 5.0, name
    avg = sum(table.improvements_pct[n]["area"] for n in table.gate_names())
    got_avg = avg / 6 + sum(errs) / 6
    assert abs(got_avg - table.average_improvement_pct["area"]) <= 3.0


def test_fold_average_improvements(tech, cal, table):
    names = table.gate_names()
    per = {n: gate_improvements(n, tech, cal, table.alpha) for n in names}
    for metric in ("t_d", "t_s", "power"):
        avg = sum(per[n][metric] for n in names) / len(names)
        ref = table.average_improvement_pct[metric]
        assert abs(avg - ref) <= 4.0, metric


def test_fold_improvements_monotone_in_alpha(tech, cal, table):
    names = table.gate_names()

    def averages(alpha):
        per = [gate_improvements(n, tech, cal, alpha) for n in names]
        return {m: sum(p[m] for p in per) / len(per) for m in METRICS}

    shallow, ref, deep = averages(0.8), averages(0.7), averages(0.6)
    for metric in ("t_d", "t_s", "power"):
        assert shallow[metric] < ref[metric] < deep[metric], metric
    # area does not depend on the fold ratio
    assert shallow["area"] == ref["area"] == deep["area"]


def test_deep_fold_best_case_band(tech, cal, table):
    best_d = max(gate_improvements(n, tech, cal, 0.6)["t_d"]
                 for n in table.gate_names())
    best_s = max(gate_improvements(n, tech, cal, 0.6)["t_s"]
                 for n in table.gate_names())
    assert 12.0 <= best_d <= 18.0
    assert 12.0 <= best_s <= 18.0


def test_degenerate_fold_gate_identity(tech, cal, table):
    """alpha = 1 with free vias is bit-identical to 2D, not merely close."""
    ideal = tech.replaced(R_MIV=0.0, C_MIV=0.0)
    for name in table.gate_names():
        flat = gate_ppa(name, ideal, cal, "2D")
        fold = gate_ppa(name, ideal, cal, "M3D", 1.0)
        assert fold.t_d == flat.t_d
        assert fold.t_s == flat.t_s
        assert fold.power == flat.power


def test_fold_area_always_smaller(tech, cal):
    for name in ("TH12", "TH22", "TH24", "TH34", "TH54w322", "THand0",
                 "TH24comp", "TH44"):
        assert gate_area(name, tech, cal, "M3D") < gate_area(name, tech, cal, "2D")


def test_gate_mode_validation(tech, cal):
    with pytest.raises(PpaError):
        gate_ppa("TH22", tech, cal, "flat")
    with pytest.raises(PpaError):
        gate_ppa("TH22", tech, cal, "M3D", 0.0)
    with pytest.raises(PpaError):
        gate_ppa("TH22", tech, cal, "M3D", 1.5)


# ----------------------------------------------------------- circuit rollup

@pytest.fixture(scope="module")
def mult_eval(tech, cal):
    cl = build_array_multiplier(4)
    vectors = [operand_bits(4, x, y) for x in range(16) for y in range(16)]
    flat = evaluate_circuit(cl, vectors, tech, cal, "2D")
    fold = evaluate_circuit(cl, vectors, tech, cal, "M3D", 0.7)
    return cl, flat, fold


def test_circuit_power_anchors(mult_eval, table):
    _, flat, fold = mult_eval
    assert flat.ppa.power == pytest.approx(table.circuit["power_2d_uw"], rel=1e-6)
    assert fold.ppa.power == pytest.approx(table.circuit["power_m3d_uw"], rel=1e-6)


def test_circuit_improvement_bands(mult_eval, table):
    _, flat, fold = mult_eval
    ref = table.circuit["improvement_pct"]
    area = 100 * (1 - fold.ppa.area / flat.ppa.area)
    delay = 100 * (1 - fold.ppa.t_d / flat.ppa.t_d)
    power = 100 * (1 - fold.ppa.power / flat.ppa.power)
    assert abs(area - ref["area"]) <= 5.0
    assert abs(delay - ref["t_d"]) <= 8.0
    assert abs(power - ref["power"]) <= 6.0


def test_circuit_outputs_survive_modeled_delays(mult_eval):
    _, flat, fold = mult_eval
    expect = tuple((k // 16) * (k % 16) for k in range(256))
    assert flat.metrics.words == expect
    assert fold.metrics.words == expect


def test_circuit_skew_positive(mult_eval):
    _, flat, fold = mult_eval
    assert flat.ppa.t_s > 0
    assert fold.ppa.t_s < flat.ppa.t_s


def test_delay_assignment_shape(tech, cal):
    cl = build_array_multiplier(2)
    system = build_pipeline(cl)
    delays = circuit_delay_assignment(system, cl, tech, cal, "2D")
    names = {g.name for g in system.netlist.gates}
    assert set(delays.per_gate) == names
    assert all(isinstance(d, int) and d >= 1 for d in delays.per_gate.values())
    # loaded logic is slower than the register bank plumbing
    logic = min(d for n, d in delays.per_gate.items() if not n.startswith(("rg", "cdet")))
    plumbing = max(d for n, d in delays.per_gate.items() if n.startswith("rg"))
    assert logic > plumbing


def test_transition_counts_are_delay_independent():
    """The activity behind the power model does not depend on timing."""
    cl = build_array_multiplier(2)
    system = build_pipeline(cl)
    vectors = [operand_bits(2, x, y) for x in range(4) for y in range(4)]
    base = simulate(system, vectors).transition_counts()
    import random
    rng = random.Random(7)
    names = [g.name for g in system.netlist.gates]
    jittered = simulate(system, vectors,
                        DelayAssignment.uniform_random(names, rng))
    assert jittered.transition_counts() == base


def test_evaluate_circuit_needs_waves(tech, cal):
    cl = build_array_multiplier(2)
    with pytest.raises(PpaError):
        evaluate_circuit(cl, [], tech, cal)


# ------------------------------------------------------------------- sweeps

def test_sweep_gates(tech, cal, table):
    rows = sweep_alpha(table.gate_names(), [0.6, 0.8, 0.7, 0.7], tech, cal)
    assert [r.alpha for r in rows] == [0.8, 0.7, 0.6]
    mid = rows[1]
    per = {n: gate_improvements(n, tech, cal, 0.7) for n in table.gate_names()}
    for metric in METRICS:
        avg = sum(p[metric] for p in per.values()) / len(per)
        assert mid.improvements[metric] == pytest.approx(avg, rel=1e-12)
    assert set(mid.per_gate) == set(table.gate_names())


def test_sweep_circuit(tech, cal):
    cl = build_array_multiplier(2)
    vectors = [operand_bits(2, x, y) for x in range(4) for y in range(4)]
    rows = sweep_alpha(cl, [0.7], tech, cal, vectors=vectors)
    assert len(rows) == 1 and rows[0].per_gate == {}
    assert rows[0].improvements["area"] > 30.0


def test_sweep_validation(tech, cal):
    with pytest.raises(PpaError):
        sweep_alpha(["TH22"], [], tech, cal)
    with pytest.raises(PpaError):
        sweep_alpha(["TH22"], [1.5], tech, cal)
    with pytest.raises(PpaError):
        sweep_alpha([], [0.7], tech, cal)
    with pytest.raises(PpaError):
        sweep_alpha(build_array_multiplier(2), [0.7], tech, cal)
