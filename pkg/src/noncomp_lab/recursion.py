"""Turing machines, bounded halting checks and dovetailed enumeration.

The enumeration produces the injective function ``a`` (a finite prefix of
it) that every construction in the package consumes.  Only finite prefixes
are ever materialised; downstream guarantees are stated relative to them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

from .errors import AlreadyHalted, MachineFormatError

MOVES = ("L", "R", "S")


@dataclass(frozen=True)
class MachineSpec:
    """A deterministic one-tape machine.

    ``transitions`` maps ``(state, read)`` to ``(next_state, write, move)``.
    ``states[0]`` need not be the start state; state indices used by the
    embedding codec are 0 for ``halt`` and 1.. for the remaining states in
    listed order.
    """

    name: str
    states: tuple[str, ...]
    start: str
    halt: str
    blank: str
    alphabet: tuple[str, ...]  # non-blank symbols
    transitions: Mapping[tuple[str, str], tuple[str, str, str]] = field(hash=False)

    def __post_init__(self):
        symbols = (self.blank,) + self.alphabet
        if self.blank in self.alphabet:
            raise MachineFormatError("blank must not be listed in the alphabet")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise MachineFormatError("duplicate alphabet symbols")
        if self.start not in self.states or self.halt not in self.states:
            raise MachineFormatError("start and halt must be listed states")
        for (q, s), (q2, w, mv) in self.transitions.items():
            if q == self.halt:
                raise MachineFormatError("the halt state has no outgoing transitions")
            if q not in self.states or q2 not in self.states:
                raise MachineFormatError(f"unknown state in transition {(q, s)}")
            if s not in symbols or w not in symbols:
                raise MachineFormatError(f"unknown symbol in transition {(q, s)}")
            if mv not in MOVES:
                raise MachineFormatError(f"move must be one of {MOVES}, got {mv!r}")
        for q in self.states:
            if q == self.halt:
                continue
            for s in symbols:
                if (q, s) not in self.transitions:
                    raise MachineFormatError(f"transition table is not total: missing {(q, s)}")

    @property
    def symbols(self) -> tuple[str, ...]:
        return (self.blank,) + self.alphabet

    def state_index(self, q: str) -> int:
        if q == self.halt:
            return 0
        return 1 + [s for s in self.states if s != self.halt].index(q)

    def state_of(self, index: int) -> str:
        if index == 0:
            return self.halt
        others = [s for s in self.states if s != self.halt]
        return others[index - 1]

    @property
    def n_states(self) -> int:
        """Number of non-halting states."""
        return len(self.states) - 1

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "name": self.name,
            "states": list(self.states),
            "start": self.start,
            "halt": self.halt,
            "blank": self.blank,
            "alphabet": list(self.alphabet),
            "transitions": [
                [q, s, list(self.transitions[(q, s)])] for (q, s) in sorted(self.transitions)
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MachineSpec":
        try:
            trans = {}
            for q, s, action in data["transitions"]:
                if len(action) != 3:
                    raise MachineFormatError(f"action for {(q, s)} must be [state, write, move]")
                if (q, s) in trans:
                    raise MachineFormatError(f"duplicate transition {(q, s)}")
                trans[(q, s)] = tuple(action)
            return cls(
                name=data.get("name", "machine"),
                states=tuple(data["states"]),
                start=data["start"],
                halt=data["halt"],
                blank=data.get("blank", "_"),
                alphabet=tuple(data["alphabet"]),
                transitions=trans,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, MachineFormatError):
                raise
            raise MachineFormatError(f"malformed machine description: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "MachineSpec":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Configuration:
    """Tape and state snapshot.

    ``right`` starts with the cell under the head; ``left`` lists the cells
    to the left of the head read outward (nearest first).  Both words drop
    trailing blanks, so every configuration has one canonical form.
    """

    left: tuple[str, ...]
    right: tuple[str, ...]
    state: str

    @classmethod
    def canonical(cls, left: Sequence[str], right: Sequence[str], state: str, blank: str) -> "Configuration":
        return cls(_strip(tuple(left), blank), _strip(tuple(right), blank), state)

    def head_symbol(self, blank: str) -> str:
        return self.right[0] if self.right else blank

    def tape_string(self, blank: str) -> str:
        return "".join(reversed(self.left)) + "".join(self.right)


def _strip(word: tuple[str, ...], blank: str) -> tuple[str, ...]:
    end = len(word)
    while end and word[end - 1] == blank:
        end -= 1
    return word[:end]


def initial_configuration(machine: MachineSpec, tape: Sequence[str] | str = ()) -> Configuration:
    return Configuration.canonical((), tuple(tape), machine.start, machine.blank)


def tm_step(machine: MachineSpec, c: Configuration) -> Configuration:
    """One transition of ``machine`` from ``c``."""
    if c.state == machine.halt:
        raise AlreadyHalted(f"{machine.name}: configuration is already halted")
    blank = machine.blank
    read = c.head_symbol(blank)
    q2, write, move = machine.transitions[(c.state, read)]
    right = (write,) + c.right[1:]
    left = c.left
    if move == "R":
        left = (right[0],) + left
        right = right[1:]
    elif move == "L":
        head = left[0] if left else blank
        left = left[1:]
        right = (head,) + right
    return Configuration.canonical(left, right, q2, blank)


@dataclass(frozen=True)
class Halted:
    steps: int


@dataclass(frozen=True)
class Running:
    steps: int


def halts_within(machine: MachineSpec, c: Configuration, T: int) -> Halted | Running:
    """Run at most ``T`` steps; ``Halted(t)`` if the halt state is reached at step ``t``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    t = 0
    while c.state != machine.halt:
        if t >= T:
            return Running(t)
        c = tm_step(machine, c)
        t += 1
    return Halted(t)


def run(machine: MachineSpec, c: Configuration, max_steps: int) -> tuple[Configuration, int]:
    """Run until halting or ``max_steps``; returns the last configuration and steps taken."""
    t = 0
    while c.state != machine.halt and t < max_steps:
        c = tm_step(machine, c)
        t += 1
    return c, t


# ---------------------------------------------------------------------------
# Machine families and dovetailing
# ---------------------------------------------------------------------------

class MachineFamily:
    """An indexed family ``m -> (program m, input m)``.

    ``size`` is ``None`` for infinite families.
    """

    name = "family"
    size: int | None = None

    def program(self, m: int) -> MachineSpec:
        raise NotImplementedError

    def input(self, m: int) -> Configuration:
        raise NotImplementedError

    def describe(self) -> str:
        return self.name


class StandardFamily(MachineFamily):
    """All machines over ``{blank, 1}`` in a fixed numbering, run on input ``1^m``.

    Index ``m`` is decoded in blocks: first every 1-state table, then every
    2-state table, and so on.  Inside a block of ``n`` states the table is
    read as a mixed-radix number, one digit per ``(state, symbol)`` entry with
    radix ``(n + 1) * 2 * 3`` (next state incl. halt, symbol written, move).
    ``A = {m : program m halts on input m}`` is the diagonal halting set,
    which is recursively enumerable and not recursive.
    """

    name = "standard-2symbol"
    size = None

    def __init__(self):
        self._cache: dict[int, MachineSpec] = {}

    @staticmethod
    def block_size(n: int) -> int:
        return ((n + 1) * 6) ** (2 * n)

    def program(self, m: int) -> MachineSpec:
        if m in self._cache:
            return self._cache[m]
        n, offset = 1, m
        while offset >= self.block_size(n):
            offset -= self.block_size(n)
            n += 1
        radix = (n + 1) * 6
        states = tuple(f"q{i}" for i in range(1, n + 1)) + ("halt",)
        targets = states[:-1] + ("halt",)
        trans = {}
        for q in states[:-1]:
            for s in ("_", "1"):
                offset, digit = divmod(offset, radix)
                nxt, rest = divmod(digit, 6)
                write, mv = divmod(rest, 3)
                trans[(q, s)] = (targets[nxt], ("_", "1")[write], MOVES[mv])
        spec = MachineSpec(f"std#{m}", states, "q1", "halt", "_", ("1",), trans)
        if len(self._cache) < 4096:
            self._cache[m] = spec
        return spec

    def input(self, m: int) -> Configuration:
        return Configuration((), ("1",) * m, "q1")


@dataclass(frozen=True)
class EnumerationPrefix:
    """A finite injective prefix ``a(0), ..., a(M-1)``."""

    values: tuple[int, ...]
    source: str = "synthetic"
    budget: int = 0

    def __post_init__(self):
        if len(set(self.values)) != len(self.values):
            raise ValueError("enumeration prefix must be injective")
        if any(v < 0 for v in self.values):
            raise ValueError("enumeration values are natural numbers")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k: int) -> int:
        return self.values[k]

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def index_of(self, n: int) -> int | None:
        try:
            return self.values.index(n)
        except ValueError:
            return None

    def is_prefix_of(self, other: "EnumerationPrefix") -> bool:
        return other.values[: len(self.values)] == self.values

    def to_json(self) -> dict:
        return {"values": list(self.values), "source": self.source, "budget": self.budget}


def synthetic_prefix(values: Sequence[int]) -> EnumerationPrefix:
    return EnumerationPrefix(tuple(values), source="synthetic", budget=0)


def dovetail_enumerate(family: MachineFamily, budget: int) -> EnumerationPrefix:
    """Dovetail programs on their own index for ``budget`` stages.

    Stage ``s`` (1-based) runs programs ``0..s`` for ``s`` steps each and
    emits, in increasing ``m``, every program that halts within those steps
    and was not emitted before.  Each program is simulated once for
    ``budget`` steps and placed at stage ``max(m, t_m, 1)``, which yields
    exactly the same listing as rerunning every stage from scratch.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    hits: list[tuple[int, int]] = []
    top = budget if family.size is None else min(budget, family.size - 1)
    for m in range(top + 1):
        result = halts_within(family.program(m), family.input(m), budget)
        if isinstance(result, Halted):
            stage = max(m, result.steps, 1)
            if stage <= budget:
                hits.append((stage, m))
    hits.sort()
    return EnumerationPrefix(tuple(m for _, m in hits), source=family.describe(), budget=budget)


def enumerate_at_least(family: MachineFamily, length: int, max_budget: int = 4096) -> EnumerationPrefix:
    """Smallest power-of-two budget whose prefix has ``length`` values."""
    budget = 1
    while True:
        prefix = dovetail_enumerate(family, budget)
        if len(prefix) >= length:
            return prefix
        if budget >= max_budget:
            return prefix
        budget *= 2


class ToyFamily(MachineFamily):
    """Six hand-written machines; exactly programs 2 and 5 halt (in under 10 steps)."""

    name = "toy6"
    size = 6

    def __init__(self):
        from . import machines

        self._programs = machines.toy_family()

    def program(self, m: int) -> MachineSpec:
        return self._programs[m]

    def input(self, m: int) -> Configuration:
        return Configuration((), ("1",) * m, self._programs[m].start)


FAMILIES: dict[str, Callable[[], MachineFamily]] = {
    "standard": StandardFamily,
    "toy": ToyFamily,
}
