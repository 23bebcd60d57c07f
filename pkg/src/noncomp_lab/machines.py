"""Small concrete machines with known halting behaviour."""

from __future__ import annotations

from .recursion import MachineSpec


def _spec(name, states, alphabet, table, start="q1", halt="halt", blank="_"):
    return MachineSpec(name, tuple(states), start, halt, blank, tuple(alphabet), dict(table))


def unary_increment() -> MachineSpec:
    """Append a 1 to a block of 1s and return to its left end (halts with the tape kept)."""
    return _spec(
        "unary_increment",
        ["q1", "q2", "halt"],
        ["1"],
        {
            ("q1", "1"): ("q1", "1", "R"),
            ("q1", "_"): ("q2", "1", "L"),
            ("q2", "1"): ("q2", "1", "L"),
            ("q2", "_"): ("halt", "_", "R"),
        },
    )


def increment_and_clear() -> MachineSpec:
    """Unary increment followed by erasing the whole block; halts on a blank tape."""
    return _spec(
        "increment_and_clear",
        ["q1", "q2", "q3", "halt"],
        ["1"],
        {
            ("q1", "1"): ("q1", "1", "R"),
            ("q1", "_"): ("q2", "1", "L"),
            ("q2", "1"): ("q2", "1", "L"),
            ("q2", "_"): ("q3", "_", "R"),
            ("q3", "1"): ("q3", "_", "R"),
            ("q3", "_"): ("halt", "_", "S"),
        },
    )


def looper() -> MachineSpec:
    """Steps right then left forever; on a blank tape it is a 2-cycle."""
    return _spec(
        "looper",
        ["q1", "q2", "halt"],
        ["1"],
        {
            ("q1", "_"): ("q2", "_", "R"),
            ("q1", "1"): ("q2", "1", "R"),
            ("q2", "_"): ("q1", "_", "L"),
            ("q2", "1"): ("q1", "1", "L"),
        },
    )


def bb2_clear() -> MachineSpec:
    """The 2-state busy beaver followed by a sweep that erases its four 1s (15 steps)."""
    return _spec(
        "bb2_clear",
        ["A", "B", "C", "D", "halt"],
        ["1"],
        {
            ("A", "_"): ("B", "1", "R"),
            ("A", "1"): ("B", "1", "L"),
            ("B", "_"): ("A", "1", "L"),
            ("B", "1"): ("C", "1", "R"),
            ("C", "1"): ("C", "1", "L"),
            ("C", "_"): ("D", "_", "R"),
            ("D", "1"): ("D", "_", "R"),
            ("D", "_"): ("halt", "_", "S"),
        },
        start="A",
    )


def ternary_walker() -> MachineSpec:
    """Three-symbol machine used for codec tests; rewrites 1->2->3 while walking right."""
    return _spec(
        "ternary_walker",
        ["q1", "q2", "halt"],
        ["1", "2", "3"],
        {
            ("q1", "_"): ("q2", "_", "L"),
            ("q1", "1"): ("q1", "2", "R"),
            ("q1", "2"): ("q1", "3", "R"),
            ("q1", "3"): ("q1", "1", "R"),
            ("q2", "_"): ("halt", "_", "S"),
            ("q2", "1"): ("q2", "_", "L"),
            ("q2", "2"): ("q2", "_", "L"),
            ("q2", "3"): ("q2", "_", "L"),
        },
    )


def _halt_now() -> MachineSpec:
    return _spec(
        "halt_now",
        ["q1", "halt"],
        ["1"],
        {("q1", "_"): ("halt", "_", "S"), ("q1", "1"): ("halt", "_", "S")},
    )


def _erase_right() -> MachineSpec:
    return _spec(
        "erase_right",
        ["q1", "halt"],
        ["1"],
        {("q1", "1"): ("q1", "_", "R"), ("q1", "_"): ("halt", "_", "S")},
    )


def _run_right() -> MachineSpec:
    return _spec(
        "run_right",
        ["q1", "halt"],
        ["1"],
        {("q1", "1"): ("q1", "1", "R"), ("q1", "_"): ("q1", "1", "R")},
    )


def _stay_forever() -> MachineSpec:
    return _spec(
        "stay_forever",
        ["q1", "halt"],
        ["1"],
        {("q1", "1"): ("q1", "1", "S"), ("q1", "_"): ("q1", "_", "S")},
    )


def _bounce_on_ones() -> MachineSpec:
    return _spec(
        "bounce",
        ["q1", "q2", "halt"],
        ["1"],
        {
            ("q1", "1"): ("q2", "1", "R"),
            ("q1", "_"): ("q2", "1", "R"),
            ("q2", "1"): ("q1", "1", "L"),
            ("q2", "_"): ("q1", "_", "L"),
        },
    )


def toy_family() -> list[MachineSpec]:
    """Programs 0..5; exactly 2 (1 step) and 5 (6 steps on input 1^5) halt."""
    return [_stay_forever(), _run_right(), _halt_now(), looper(), _bounce_on_ones(), _erase_right()]


BUILTIN = {
    "unary_increment": unary_increment,
    "increment_and_clear": increment_and_clear,
    "looper": looper,
    "bb2_clear": bb2_clear,
    "ternary_walker": ternary_walker,
}


def get(name: str) -> MachineSpec:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown builtin machine {name!r}; choose from {sorted(BUILTIN)}") from None
