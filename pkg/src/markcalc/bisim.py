"""Partition refinement for IT Markovian bisimilarity and the three OT variants.

Every checker iterates signature refinement from the one-block partition:
each state gets a signature computed against the current blocks and blocks
are split by signature until nothing changes.  Rates are exact Fractions, so
signature equality is exact.
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .mlts import Mlts, OtAct, OtTime, Truncated, build_it, build_ot, default_max_states
from .parser import format_rate
from .semantics_it import PRODUCT, RateComposer
from .terms import TAU, Term


class OtVariant(str, enum.Enum):
    EAGER = "eager"
    LAZY = "lazy"
    MAX_PROGRESS = "mp"


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[int, ...], ...]
    block_of: tuple[int, ...]

    @classmethod
    def from_block_ids(cls, ids) -> "Partition":
        # renumber blocks by first occurrence so equal partitions compare equal
        renum: dict = {}
        block_of = tuple(renum.setdefault(b, len(renum)) for b in ids)
        blocks: list[list[int]] = [[] for _ in renum]
        for s, b in enumerate(block_of):
            blocks[b].append(s)
        return cls(tuple(tuple(b) for b in blocks), block_of)

    def same_block(self, s: int, t: int) -> bool:
        return self.block_of[s] == self.block_of[t]

    def refines(self, other: "Partition") -> bool:
        """Every block of ``self`` lies inside one block of ``other``."""
        return all(len({other.block_of[s] for s in block}) == 1 for block in self.blocks)

    def to_json(self, variant: Optional[str] = None) -> str:
        return json.dumps({"blocks": [list(b) for b in self.blocks], "variant": variant, "stable": True})


Signature = Callable[[int, tuple], object]


def _it_signature(m: Mlts) -> Signature:
    def sig(s, block_of):
        acc: dict = defaultdict(Fraction)
        for tr in m.out[s]:
            acc[(tr.label.name, block_of[tr.dst])] += tr.label.rate * tr.mult
        return frozenset(acc.items())

    return sig


def _ot_signature(m: Mlts, variant: OtVariant) -> Signature:
    def compare_rates(s) -> bool:
        if variant is OtVariant.LAZY:
            return True
        acts = [tr for tr in m.out[s] if isinstance(tr.label, OtAct)]
        if variant is OtVariant.EAGER:
            return not acts
        return not any(tr.label.name == TAU for tr in acts)

    conditional = [compare_rates(s) for s in range(len(m.states))]

    def sig(s, block_of):
        moves = frozenset(
            (tr.label.name, block_of[tr.dst]) for tr in m.out[s] if isinstance(tr.label, OtAct)
        )
        if not conditional[s]:
            return moves, None
        acc: dict = defaultdict(Fraction)
        for tr in m.out[s]:
            if isinstance(tr.label, OtTime):
                acc[block_of[tr.dst]] += tr.label.rate * tr.mult
        return moves, frozenset(acc.items())

    return sig


@dataclass
class Refinement:
    partition: Partition
    history: list[tuple[int, ...]]  # raw block ids at the start of every round
    signature: Signature


def refine(m: Mlts, signature: Signature) -> Refinement:
    """Split blocks by signature until stable.

    Block ids stay fixed once assigned, so a state's signature can only
    change when one of its successors moves; each round recomputes just the
    predecessors of the states that moved in the previous one.  After every
    round all members of a block share one signature, so only the
    recomputed states need regrouping.
    """
    if m.truncated:
        raise Truncated(m)
    n = len(m.states)
    preds: list[set] = [set() for _ in range(n)]
    for tr in m.transitions:
        preds[tr.dst].add(tr.src)
    block_of = [0] * n
    size = {0: n}
    block_sig: dict = {}  # signature shared by the members of each block
    history = [tuple(block_of)]
    dirty = sorted(range(n))
    while dirty:
        fresh = [(s, signature(s, block_of)) for s in dirty]
        by_block: dict = {}
        for s, sig in fresh:
            by_block.setdefault(block_of[s], {}).setdefault(sig, []).append(s)
        moved = []
        for b in sorted(by_block):
            groups = by_block[b]
            old = block_sig.get(b)
            staying = sum(len(g) for sig, g in groups.items() if sig == old)
            clean = size[b] - sum(len(g) for g in groups.values())
            leaving = [(sig, g) for sig, g in groups.items() if sig != old]
            if clean + staying == 0:
                # no member keeps the old signature: the first group keeps the id
                sig, g = leaving.pop(0)
                block_sig[b] = sig
                staying = len(g)
            for sig, g in leaving:
                new_id = len(size)
                size[new_id] = len(g)
                block_sig[new_id] = sig
                for s in g:
                    block_of[s] = new_id
                moved.extend(g)
            size[b] = clean + staying
        if not moved:
            break
        history.append(tuple(block_of))
        dirty = sorted(set().union(*(preds[s] for s in moved)))
    return Refinement(Partition.from_block_ids(block_of), history, signature)


def _check_calculus(m: Mlts, calculus: str):
    if m.calculus != calculus:
        raise ValueError(f"expected a {calculus.upper()} system, got {m.calculus.upper()}")


def bisim_it(m: Mlts) -> Partition:
    """Coarsest partition where equivalent states have equal rates per (name, block)."""
    _check_calculus(m, "it")
    return refine(m, _it_signature(m)).partition


def bisim_ot(m: Mlts, variant) -> Partition:
    """Coarsest partition satisfying action matching plus the variant's rate condition."""
    _check_calculus(m, "ot")
    return refine(m, _ot_signature(m, OtVariant(variant))).partition


# -- pairwise verdicts ---------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    status: str  # equivalent | inequivalent | inconclusive
    evidence: Optional[str] = None
    round: Optional[int] = None

    @property
    def equivalent(self) -> bool:
        return self.status == "equivalent"

    def __bool__(self):
        return self.equivalent


def _fmt_rates(entries, kind: str) -> str:
    parts = []
    for key, rate in sorted(entries, key=repr):
        if kind == "it":
            name, block = key
            parts.append(f"{name}->B{block}: {format_rate(rate)}")
        else:
            parts.append(f"B{key}: {format_rate(rate)}")
    return "{" + ", ".join(parts) + "}"


def _evidence(ref: Refinement, s: int, t: int, calculus: str) -> tuple[str, int]:
    rounds = ref.history + [ref.partition.block_of]
    for rnd, (part, nxt) in enumerate(zip(rounds, rounds[1:])):
        if part[s] == part[t] and nxt[s] != nxt[t]:
            sig_s = ref.signature(s, part)
            sig_t = ref.signature(t, part)
            if calculus == "it":
                only_s = sig_s - sig_t
                only_t = sig_t - sig_s
                return (
                    f"round {rnd + 1}: rates differ; first term {_fmt_rates(only_s, 'it')} "
                    f"vs second term {_fmt_rates(only_t, 'it')}",
                    rnd + 1,
                )
            (moves_s, rates_s), (moves_t, rates_t) = sig_s, sig_t
            if moves_s != moves_t:
                fmt = lambda ms: "{" + ", ".join(f"{a}->B{b}" for a, b in sorted(ms)) + "}"
                return (
                    f"round {rnd + 1}: action moves differ; first term {fmt(moves_s - moves_t)} "
                    f"vs second term {fmt(moves_t - moves_s)}",
                    rnd + 1,
                )
            return (
                f"round {rnd + 1}: time rates differ; first term {_fmt_rates(rates_s or (), 'ot')} "
                f"vs second term {_fmt_rates(rates_t or (), 'ot')}",
                rnd + 1,
            )
    return ("initial states in different blocks", 0)


def equivalent(
    t1: Term,
    t2: Term,
    calculus: str,
    variant=None,
    otimes: RateComposer = PRODUCT,
    max_states: Optional[int] = None,
) -> Verdict:
    """Build both terms into one system and compare the blocks of their initial states."""
    bound = max_states if max_states is not None else default_max_states()
    if calculus == "it":
        m = build_it([t1, t2], otimes, bound)
    elif calculus == "ot":
        if variant is None:
            raise ValueError("an OT check needs a variant: eager, lazy or mp")
        m = build_ot([t1, t2], bound)
    else:
        raise ValueError(f"unknown calculus {calculus!r}")
    if m.truncated:
        return Verdict("inconclusive", f"state space exceeds {bound} states")
    sig = _it_signature(m) if calculus == "it" else _ot_signature(m, OtVariant(variant))
    ref = refine(m, sig)
    s, t = m.roots[0], m.roots[-1]
    if ref.partition.same_block(s, t):
        return Verdict("equivalent")
    evidence, rnd = _evidence(ref, s, t, calculus)
    return Verdict("inequivalent", evidence, rnd)
