"""Operational semantics of the orthogonal-time calculus.

Action transitions form a plain set; time transitions form a multiset whose
multiplicities count derivation proofs.  Delays never synchronize.
"""
from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import Callable

from .semantics_it import UnguardedRecursion
from .terms import (
    TAU,
    ActPrefix,
    Choice,
    Hide,
    Nil,
    Par,
    Rec,
    Relab,
    Term,
    TimePrefix,
    Var,
    unfold,
)


def _budget(t: Term) -> int:
    return t.rec_count


def step_ot_actions(q: Term) -> frozenset:
    """Set of ``(name, target)`` action transitions of ``q``."""
    return frozenset(_actions(q, _budget(q), 0))


def _actions(q: Term, budget: int, unfolds: int) -> set:
    if isinstance(q, ActPrefix):
        return {(q.name, q.body)}
    if isinstance(q, (Nil, TimePrefix)):
        return set()
    if isinstance(q, Choice):
        return _actions(q.left, budget, unfolds) | _actions(q.right, budget, unfolds)
    if isinstance(q, Par):
        left = _actions(q.left, budget, unfolds)
        right = _actions(q.right, budget, unfolds)
        out = {(a, Par(tgt, q.right, q.sync)) for a, tgt in left if a not in q.sync}
        out |= {(a, Par(q.left, tgt, q.sync)) for a, tgt in right if a not in q.sync}
        out |= {
            (a, Par(t1, t2, q.sync))
            for a, t1 in left
            if a in q.sync
            for b, t2 in right
            if a == b
        }
        return out
    if isinstance(q, Hide):
        return {(TAU if a in q.names else a, Hide(tgt, q.names)) for a, tgt in _actions(q.body, budget, unfolds)}
    if isinstance(q, Relab):
        return {(q.apply(a), Relab(tgt, q.mapping)) for a, tgt in _actions(q.body, budget, unfolds)}
    if isinstance(q, Rec):
        if unfolds >= budget:
            raise UnguardedRecursion(f"recursion on {q.var} does not reach a prefix")
        return _actions(unfold(q), budget, unfolds + 1)
    if isinstance(q, Var):
        raise ValueError(f"free variable {q.name} in a term being stepped")
    raise TypeError(f"not an orthogonal-time term: {q!r}")


def step_ot_time(q: Term) -> Counter:
    """Multiset of ``(rate, target)`` time transitions of ``q``."""
    return _time(q, _budget(q), 0)


def _time(q: Term, budget: int, unfolds: int) -> Counter:
    if isinstance(q, TimePrefix):
        return Counter({(q.rate, q.body): 1})
    if isinstance(q, (Nil, ActPrefix)):
        return Counter()
    if isinstance(q, Choice):
        out = _time(q.left, budget, unfolds)
        out.update(_time(q.right, budget, unfolds))
        return out
    if isinstance(q, Par):
        out = Counter()
        for (rate, tgt), k in _time(q.left, budget, unfolds).items():
            out[(rate, Par(tgt, q.right, q.sync))] += k
        for (rate, tgt), k in _time(q.right, budget, unfolds).items():
            out[(rate, Par(q.left, tgt, q.sync))] += k
        return out
    if isinstance(q, Hide):
        out = Counter()
        for (rate, tgt), k in _time(q.body, budget, unfolds).items():
            out[(rate, Hide(tgt, q.names))] += k
        return out
    if isinstance(q, Relab):
        out = Counter()
        for (rate, tgt), k in _time(q.body, budget, unfolds).items():
            out[(rate, Relab(tgt, q.mapping))] += k
        return out
    if isinstance(q, Rec):
        if unfolds >= budget:
            raise UnguardedRecursion(f"recursion on {q.var} does not reach a prefix")
        return _time(unfold(q), budget, unfolds + 1)
    if isinstance(q, Var):
        raise ValueError(f"free variable {q.name} in a term being stepped")
    raise TypeError(f"not an orthogonal-time term: {q!r}")


def rate_ot(q: Term, dest: Callable[[Term], bool] = lambda _: True) -> Fraction:
    return sum((rate * k for (rate, tgt), k in step_ot_time(q).items() if dest(tgt)), Fraction(0))


def total_rate_ot(q: Term) -> Fraction:
    return rate_ot(q)
