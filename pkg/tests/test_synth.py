"""Dual-rail expansion and the array multiplier.

Fidelity is checked against the Boolean interpreter and against plain
integer arithmetic, both computed independently of the code under test.
"""
import itertools

import pytest

from ncl3d.boolnet import parse_boolean_netlist
from ncl3d.netlist import (
    DR,
    check_input_completeness,
    check_observability,
    encode_word,
    output_word,
    serialize_netlist,
    settle,
)
from ncl3d.synth import (
    SynthError,
    build_array_multiplier,
    build_boolean_multiplier,
    count_transistors,
    expand_dual_rail,
    operand_bits,
    product_value,
)


def settle_word(nl, bits):
    rails = encode_word(nl.inputs, bits)
    state = settle(nl, rails)
    return output_word(nl, state)


BINARY = {
    "AND2": lambda a, b: a & b,
    "OR2": lambda a, b: a | b,
    "XOR2": lambda a, b: a ^ b,
    "NAND2": lambda a, b: 1 - (a & b),
    "NOR2": lambda a, b: 1 - (a | b),
    "XNOR2": lambda a, b: 1 - (a ^ b),
}


@pytest.mark.parametrize("kind", sorted(BINARY))
def test_binary_template_truth_tables(kind):
    nl = expand_dual_rail(parse_boolean_netlist(f"{kind} a b -> z\n"))
    for a, b in itertools.product((0, 1), repeat=2):
        word = settle_word(nl, {"a": a, "b": b})
        assert word["z"] == DR.from_bit(BINARY[kind](a, b))
    # NULL in, NULL out
    assert settle_word(nl, {"a": None, "b": None})["z"] is DR.NULL


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_inverter_chains_cost_no_gates(depth):
    text = "".join(f"INV n{i} -> n{i + 1}\n" for i in range(depth)).replace("n0", "a", 1)
    nl = expand_dual_rail(parse_boolean_netlist(text))
    assert len(nl.gates) == 0
    for a in (0, 1):
        word = settle_word(nl, {"a": a})
        assert word[f"n{depth}"] == DR.from_bit(a ^ (depth & 1))


def test_buffer_is_an_alias():
    nl = expand_dual_rail(parse_boolean_netlist("BUF a -> z\n"))
    assert len(nl.gates) == 0
    assert nl.outputs[0].rails == ("a.1", "a.0")


@pytest.mark.parametrize("kind", sorted(BINARY))
def test_templates_are_input_complete_and_observable(kind):
    nl = expand_dual_rail(parse_boolean_netlist(f"{kind} a b -> z\n"))
    assert check_input_completeness(nl) == []
    assert check_observability(nl) == []


def test_small_circuit_fidelity_exhaustive():
    text = (
        "input a b c\n"
        "output y z\n"
        "XOR2 g1 a b -> t\n"
        "NAND2 g2 t c -> y\n"
        "NOR2 g3 a c -> w\n"
        "OR2 g4 w t -> z\n"
    )
    bnl = parse_boolean_netlist(text)
    nl = expand_dual_rail(bnl)
    assert nl.validate() == []
    for vec in itertools.product((0, 1), repeat=3):
        bits = dict(zip(("a", "b", "c"), vec))
        expect = bnl.evaluate_outputs(bits)
        word = settle_word(nl, bits)
        assert (word["y"].bit, word["z"].bit) == expect
    assert check_input_completeness(nl) == []
    assert check_observability(nl) == []


@pytest.mark.parametrize("width", [2, 3, 4, 5])
def test_boolean_multiplier_matches_integer_product(width):
    bnl = build_boolean_multiplier(width)
    assert bnl.validate() == []
    for x, y in itertools.product(range(1 << width), repeat=2):
        out = bnl.evaluate_outputs(operand_bits(width, x, y))
        value = sum(bit << k for k, bit in enumerate(out))
        assert value == x * y, (width, x, y)


def test_boolean_multiplier_gate_counts_grow_quadratically():
    # w*w products, w half adders, w*(w-2) full adders at 5 gates each
    for width in range(2, 7):
        bnl = build_boolean_multiplier(width)
        assert len(bnl.gates) == width * width + 1 + 2 * width + 5 * width * (width - 2)


@pytest.mark.parametrize("style", ["template", "compact"])
@pytest.mark.parametrize("width", [2, 3])
def test_dual_rail_multiplier_matches_integer_product(style, width):
    nl = build_array_multiplier(width, adder_style=style)
    assert nl.validate() == []
    for x, y in itertools.product(range(1 << width), repeat=2):
        word = settle_word(nl, operand_bits(width, x, y))
        assert product_value(word) == x * y, (style, x, y)


def test_dual_rail_multiplier_w4_spot_checks():
    nl = build_array_multiplier(4)
    for x, y in [(0, 0), (15, 15), (7, 9), (12, 5), (1, 14), (10, 10)]:
        assert product_value(settle_word(nl, operand_bits(4, x, y))) == x * y


def test_template_multiplier_is_delay_insensitive_w2():
    nl = build_array_multiplier(2)
    assert check_input_completeness(nl) == []
    assert check_observability(nl) == []


def test_template_gate_mix_w4():
    nl = build_array_multiplier(4)
    kinds = {}
    for g in nl.gates:
        kinds[g.kind] = kinds.get(g.kind, 0) + 1
    assert kinds == {"TH22": 44, "THand0": 44, "TH24comp": 40}
    assert len(nl.gates) == 12 * 4 * 4 - 16 * 4


def test_transistor_totals_are_stable():
    tc = count_transistors(build_array_multiplier(4))
    assert (tc.pmos, tc.nmos, tc.total) == (1064, 1064, 2128)
    tc = count_transistors(build_array_multiplier(4, adder_style="compact"))
    assert tc.total == 1520


def test_transistor_count_rejects_unpriced_gate():
    nl = build_array_multiplier(2)
    nl.add("TH33w22", ["a.1", "b.1", "a.0"], "dead")
    with pytest.raises(SynthError):
        count_transistors(nl)


def test_construction_is_deterministic():
    a = serialize_netlist(build_array_multiplier(3))
    b = serialize_netlist(build_array_multiplier(3))
    assert a == b


def test_operand_bits_round_trip():
    bits = operand_bits(3, 5, 6)
    assert bits == {"a0": 1, "a1": 0, "a2": 1, "b0": 0, "b1": 1, "b2": 1}
    with pytest.raises(ValueError):
        operand_bits(3, 8, 0)
    word = {f"p{k}": DR.from_bit((30 >> k) & 1) for k in range(6)}
    assert product_value(word) == 30
    word["p3"] = DR.NULL
    assert product_value(word) is None
