"""Labeled multitransition systems shared by both semantics."""
from __future__ import annotations

import json
import os
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Union

from .parser import format_rate, parse, print_term
from .semantics_it import PRODUCT, RateComposer, step_it
from .semantics_ot import step_ot_actions, step_ot_time
from .terms import TAU, Term

DEFAULT_MAX_STATES = 10_000


def default_max_states() -> int:
    return int(os.environ.get("MARKCALC_MAX_STATES", DEFAULT_MAX_STATES))


@dataclass(frozen=True)
class ItAct:
    name: str
    rate: Fraction


@dataclass(frozen=True)
class OtAct:
    name: str


@dataclass(frozen=True)
class OtTime:
    rate: Fraction


Label = Union[ItAct, OtAct, OtTime]


class Transition(NamedTuple):
    src: int
    label: Label
    dst: int
    mult: int


class Truncated(RuntimeError):
    """Exploration hit the state bound; ``mlts`` holds the partial system."""

    def __init__(self, mlts: "Mlts"):
        self.mlts = mlts
        super().__init__(f"state space exceeds the bound of {len(mlts.states)} states")


class NotMarkovian(ValueError):
    pass


@dataclass(frozen=True)
class Mlts:
    """States (index 0 initial), aggregated transitions and a calculus tag."""

    states: tuple
    transitions: tuple[Transition, ...]
    calculus: str
    truncated: bool = False
    roots: tuple[int, ...] = (0,)

    def __post_init__(self):
        n = len(self.states)
        for tr in self.transitions:
            if not (0 <= tr.src < n and 0 <= tr.dst < n):
                raise ValueError(f"transition endpoint out of range: {tr}")
            if tr.mult <= 0:
                raise ValueError(f"multiplicity must be positive: {tr}")

    @cached_property
    def out(self) -> list[list[Transition]]:
        adj: list[list[Transition]] = [[] for _ in self.states]
        for tr in self.transitions:
            adj[tr.src].append(tr)
        return adj

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    def __len__(self):
        return len(self.states)


Stepper = Callable[[Term], Iterable[tuple[Label, Term, int]]]


def it_stepper(otimes: RateComposer = PRODUCT) -> Stepper:
    def step(t):
        for (a, rate, tgt), k in step_it(t, otimes).items():
            yield ItAct(a, rate), tgt, k

    return step


def ot_stepper(q: Term):
    for a, tgt in sorted(step_ot_actions(q), key=lambda p: (p[0], print_term(p[1]))):
        yield OtAct(a), tgt, 1
    for (rate, tgt), k in step_ot_time(q).items():
        yield OtTime(rate), tgt, k


def build(
    roots: Union[Term, Sequence[Term]],
    stepper: Stepper,
    calculus: str,
    max_states: Optional[int] = None,
    strict: bool = False,
) -> Mlts:
    """Breadth-first closure of ``roots`` under ``stepper``.

    States are deduplicated by syntactic identity.  When the bound is reached
    the partial system comes back with ``truncated=True`` (or ``Truncated`` is
    raised when ``strict``).
    """
    if isinstance(roots, Term):
        roots = [roots]
    bound = max_states if max_states is not None else default_max_states()
    states: list = []
    index: dict = {}
    trans: Counter = Counter()
    truncated = False

    def intern(t) -> Optional[int]:
        if t in index:
            return index[t]
        if len(states) >= bound:
            return None
        index[t] = len(states)
        states.append(t)
        queue.append(index[t])
        return index[t]

    queue: deque[int] = deque()
    root_ids = []
    for r in roots:
        i = intern(r)
        if i is None:
            truncated = True
            break
        root_ids.append(i)
    while queue and not truncated:
        src = queue.popleft()
        for label, tgt, k in stepper(states[src]):
            dst = intern(tgt)
            if dst is None:
                truncated = True
                break
            trans[(src, label, dst)] += k
    transitions = tuple(Transition(s, lab, d, k) for (s, lab, d), k in trans.items())
    m = Mlts(tuple(states), transitions, calculus, truncated, tuple(root_ids) or (0,))
    if truncated and strict:
        raise Truncated(m)
    return m


def build_it(roots, otimes: RateComposer = PRODUCT, max_states=None, strict=False) -> Mlts:
    return build(roots, it_stepper(otimes), "it", max_states, strict)


def build_ot(roots, max_states=None, strict=False) -> Mlts:
    return build(roots, ot_stepper, "ot", max_states, strict)


# -- exports -----------------------------------------------------------------------


def _state_text(s) -> str:
    return print_term(s) if isinstance(s, Term) else str(s)


def label_text(label: Label) -> str:
    if isinstance(label, ItAct):
        return f"{label.name},{format_rate(label.rate)}"
    if isinstance(label, OtAct):
        return label.name
    return f"({format_rate(label.rate)})"


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(m: Mlts) -> str:
    lines = ["digraph mlts {"]
    for i, s in enumerate(m.states):
        shape = "doublecircle" if i in m.roots else "circle"
        lines.append(f"  s{i} [shape={shape}, tooltip={_dot_quote(_state_text(s))}, label=\"{i}\"];")
    for tr in m.transitions:
        text = label_text(tr.label)
        if tr.mult > 1:
            text += f" [x{tr.mult}]"
        lines.append(f"  s{tr.src} -> s{tr.dst} [label={_dot_quote(text)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _label_json(label: Label) -> dict:
    if isinstance(label, ItAct):
        return {"kind": "it_act", "name": label.name, "rate": format_rate(label.rate)}
    if isinstance(label, OtAct):
        return {"kind": "ot_act", "name": label.name}
    return {"kind": "ot_time", "rate": format_rate(label.rate)}


def _label_from_json(d: dict) -> Label:
    if d["kind"] == "it_act":
        return ItAct(d["name"], Fraction(d["rate"]))
    if d["kind"] == "ot_act":
        return OtAct(d["name"])
    if d["kind"] == "ot_time":
        return OtTime(Fraction(d["rate"]))
    raise ValueError(f"unknown label kind {d['kind']!r}")


def export_json(m: Mlts) -> str:
    doc = {
        "calculus": m.calculus,
        "states": [_state_text(s) for s in m.states],
        "initial": 0,
        "roots": list(m.roots),
        "transitions": [
            {"src": tr.src, "label": _label_json(tr.label), "dst": tr.dst, "mult": tr.mult}
            for tr in m.transitions
        ],
        "truncated": m.truncated,
    }
    return json.dumps(doc, indent=2)


def import_json(text: str, parse_states: bool = True) -> Mlts:
    """Inverse of :func:`export_json`; states are re-parsed as terms when possible."""
    doc = json.loads(text)
    calculus = doc.get("calculus", "it")
    states = []
    for s in doc["states"]:
        if parse_states:
            try:
                s = parse(s, calculus)
            except ValueError:
                pass
        states.append(s)
    transitions = tuple(
        Transition(t["src"], _label_from_json(t["label"]), t["dst"], t["mult"]) for t in doc["transitions"]
    )
    return Mlts(tuple(states), transitions, calculus, doc.get("truncated", False), tuple(doc.get("roots", [0])))


# -- Markov chain ----------------------------------------------------------------------


def extract_ctmc(m: Mlts) -> list[list[Fraction]]:
    """Rate matrix: entry (i, j) sums rate x multiplicity over i -> j; diagonal kept as-is."""
    n = len(m.states)
    matrix = [[Fraction(0)] * n for _ in range(n)]
    if m.calculus == "ot":
        for i, outs in enumerate(m.out):
            kinds = {type(tr.label) for tr in outs}
            if OtAct in kinds and OtTime in kinds:
                raise NotMarkovian(f"state {i} has both action and time transitions")
    for tr in m.transitions:
        if isinstance(tr.label, (ItAct, OtTime)):
            matrix[tr.src][tr.dst] += tr.label.rate * tr.mult
    return matrix


def embedded_jumps(matrix: Sequence[Sequence[Fraction]]) -> list[dict[int, Fraction]]:
    """Jump probabilities of the embedded chain, ignoring selfloops."""
    out = []
    for i, row in enumerate(matrix):
        total = sum((r for j, r in enumerate(row) if j != i), Fraction(0))
        out.append({j: r / total for j, r in enumerate(row) if j != i and r} if total else {})
    return out


def with_tau_selfloops(m: Mlts, rate: Fraction, only_active: bool = True) -> Mlts:
    """Add an invisible selfloop of ``rate`` to every state (that can move, by default).

    This is the lazy-delay augmentation of IT systems: it changes sojourn
    times but neither the jump targets nor any bisimilarity verdict.
    """
    if m.calculus != "it":
        raise ValueError("selfloop augmentation applies to integrated-time systems")
    trans: Counter = Counter({(t.src, t.label, t.dst): t.mult for t in m.transitions})
    for i in range(len(m.states)):
        if not only_active or m.out[i]:
            trans[(i, ItAct(TAU, rate), i)] += 1
    transitions = tuple(Transition(s, lab, d, k) for (s, lab, d), k in trans.items())
    return Mlts(m.states, transitions, m.calculus, m.truncated, m.roots)


def ctmc_json(matrix) -> str:
    return json.dumps([[format_rate(x) if x else "0" for x in row] for row in matrix])
