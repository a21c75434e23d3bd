"""Operational semantics of the integrated-time calculus.

``step_it`` returns the outgoing transitions of one closed, guarded term as a
Counter mapping ``(name, rate, target)`` to its multiplicity, i.e. the number
of distinct derivation proofs of that transition.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .terms import (
    TAU,
    Choice,
    Hide,
    Nil,
    Par,
    Prefix,
    Rec,
    Relab,
    Term,
    Var,
    unfold,
)


class UnguardedRecursion(RuntimeError):
    pass


@dataclass(frozen=True)
class RateComposer:
    """Associative, commutative operator giving the rate of a synchronization."""

    name: str
    compose: Callable[[Fraction, Fraction], Fraction]

    def __call__(self, r1: Fraction, r2: Fraction) -> Fraction:
        return self.compose(r1, r2)


PRODUCT = RateComposer("product", lambda a, b: a * b)
MIN = RateComposer("min", min)
SUM = RateComposer("sum", lambda a, b: a + b)
COMPOSERS = {c.name: c for c in (PRODUCT, MIN, SUM)}


def step_it(t: Term, otimes: RateComposer = PRODUCT) -> Counter:
    """Transitions of ``t`` derivable by the IT rules, with proof multiplicities."""
    return _step(t, otimes, t.rec_count, 0)


def _step(t: Term, otimes: RateComposer, budget: int, unfolds: int) -> Counter:
    if isinstance(t, Prefix):
        return Counter({(t.name, t.rate, t.body): 1})
    if isinstance(t, Nil):
        return Counter()
    if isinstance(t, Choice):
        out = _step(t.left, otimes, budget, unfolds)
        out.update(_step(t.right, otimes, budget, unfolds))
        return out
    if isinstance(t, Par):
        left = _step(t.left, otimes, budget, unfolds)
        right = _step(t.right, otimes, budget, unfolds)
        out = Counter()
        for (a, rate, tgt), k in left.items():
            if a not in t.sync:
                out[(a, rate, Par(tgt, t.right, t.sync))] += k
        for (a, rate, tgt), k in right.items():
            if a not in t.sync:
                out[(a, rate, Par(t.left, tgt, t.sync))] += k
        for (a, r1, tgt1), k1 in left.items():
            if a not in t.sync:
                continue
            for (b, r2, tgt2), k2 in right.items():
                if a == b:
                    out[(a, otimes(r1, r2), Par(tgt1, tgt2, t.sync))] += k1 * k2
        return out
    if isinstance(t, Hide):
        out = Counter()
        for (a, rate, tgt), k in _step(t.body, otimes, budget, unfolds).items():
            out[(TAU if a in t.names else a, rate, Hide(tgt, t.names))] += k
        return out
    if isinstance(t, Relab):
        out = Counter()
        for (a, rate, tgt), k in _step(t.body, otimes, budget, unfolds).items():
            out[(t.apply(a), rate, Relab(tgt, t.mapping))] += k
        return out
    if isinstance(t, Rec):
        # guarded terms need at most one unfolding per rec node before a prefix
        if unfolds >= budget:
            raise UnguardedRecursion(f"recursion on {t.var} does not reach a prefix")
        return _step(unfold(t), otimes, budget, unfolds + 1)
    if isinstance(t, Var):
        raise ValueError(f"free variable {t.name} in a term being stepped")
    raise TypeError(f"not an integrated-time term: {t!r}")


def rate_it(t: Term, name: str, dest: Callable[[Term], bool] = lambda _: True, otimes: RateComposer = PRODUCT) -> Fraction:
    """Exit rate of ``t`` through ``name`` into the terms accepted by ``dest``."""
    return sum(
        (rate * k for (a, rate, tgt), k in step_it(t, otimes).items() if a == name and dest(tgt)),
        Fraction(0),
    )


def total_rate_it(t: Term, otimes: RateComposer = PRODUCT) -> Fraction:
    return sum((rate * k for (_, rate, _), k in step_it(t, otimes).items()), Fraction(0))
