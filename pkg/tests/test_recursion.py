import json

import pytest
from hypothesis import given, settings, strategies as st

from noncomp_lab import machines
from noncomp_lab.errors import AlreadyHalted, MachineFormatError
from noncomp_lab.recursion import (
    Configuration,
    EnumerationPrefix,
    Halted,
    MachineSpec,
    Running,
    StandardFamily,
    ToyFamily,
    dovetail_enumerate,
    halts_within,
    initial_configuration,
    run,
    tm_step,
)


def test_unary_increment_full_run():
    m = machines.unary_increment()
    end, steps = run(m, initial_configuration(m, "1"), 100)
    assert end.state == m.halt
    assert end.left + end.right == ("1", "1")
    # hand simulation: move right over the 1, write on the blank, return, halt
    assert halts_within(m, initial_configuration(m, "1"), 100) == Halted(steps)
    assert steps == 4


def test_step_on_halted_configuration():
    m = machines.unary_increment()
    with pytest.raises(AlreadyHalted):
        tm_step(m, Configuration((), ("1",), m.halt))


def test_right_mover_keeps_canonical_form():
    m = machines.toy_family()[1]  # run_right
    c = tm_step(m, initial_configuration(m, ""))
    assert c.right == () and c.left == ("1",)
    c = Configuration.canonical((), ("_", "_"), "q1", "_")
    assert c.right == ()


def test_immediate_halt_at_zero_steps():
    m = machines.toy_family()[2]
    assert halts_within(m, Configuration((), (), m.halt), 0) == Halted(0)
    assert halts_within(m, initial_configuration(m, "11"), 1) == Halted(1)


def test_looper_runs_out_the_bound():
    m = machines.looper()
    assert halts_within(m, initial_configuration(m, ""), 10**5) == Running(10**5)


def test_toy_family_enumeration():
    fam = ToyFamily()
    oracle = [m for m in range(fam.size) if isinstance(halts_within(fam.program(m), fam.input(m), 10), Halted)]
    assert oracle == [2, 5]
    prefix = dovetail_enumerate(fam, 200)
    assert sorted(prefix.values) == [2, 5]
    assert prefix.values == dovetail_enumerate(fam, 200).values


def test_budget_zero_is_empty():
    assert dovetail_enumerate(StandardFamily(), 0).values == ()


@settings(max_examples=10)
@given(st.integers(0, 48), st.integers(0, 48))
def test_budget_monotone_injective_sound(b1, b2):
    lo, hi = sorted((b1, b2))
    fam = StandardFamily()
    p1, p2 = dovetail_enumerate(fam, lo), dovetail_enumerate(fam, hi)
    assert p2.values[: len(p1)] == p1.values
    assert len(set(p2.values)) == len(p2.values)
    for m in p2.values:
        assert isinstance(halts_within(fam.program(m), fam.input(m), hi), Halted)


def test_doubling_budget_extends():
    fam = StandardFamily()
    p = dovetail_enumerate(fam, 64)
    q = dovetail_enumerate(fam, 128)
    assert q.values[: len(p)] == p.values and len(q) > len(p)


def test_prefix_rejects_repeats():
    with pytest.raises(ValueError):
        EnumerationPrefix((1, 2, 1))


def test_machine_json_roundtrip(tmp_path):
    for name in ("unary_increment", "bb2_clear", "ternary_walker"):
        m = machines.get(name)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(m.to_json()))
        again = MachineSpec.load(path)
        assert again.transitions == m.transitions and again.start == m.start


def test_machine_format_errors():
    data = machines.unary_increment().to_json()
    broken = dict(data, start="nowhere")
    with pytest.raises(MachineFormatError):
        MachineSpec.from_json(broken)
    with pytest.raises(MachineFormatError):
        MachineSpec.from_json({"states": ["q1"]})
