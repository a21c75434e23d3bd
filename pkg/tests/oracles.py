"""Independent reference computations used to cross-check the library.

None of these share code paths with the implementations they check:
derivations are enumerated as explicit proof trees, and bisimilarity is
computed as a greatest fixed point over state pairs.
"""
from __future__ import annotations

from collections import Counter
from fractions import Fraction

from markcalc.mlts import Mlts, OtAct, OtTime
from markcalc.terms import (
    TAU,
    ActPrefix,
    Choice,
    Hide,
    Nil,
    Par,
    Prefix,
    Rec,
    Relab,
    TimePrefix,
    Var,
)


def _subst(t, x, r):
    # written independently of terms.substitute
    if isinstance(t, Var):
        return r if t.name == x else t
    if isinstance(t, Rec):
        return t if t.var == x else Rec(t.var, _subst(t.body, x, r))
    if isinstance(t, Nil):
        return t
    if isinstance(t, Prefix):
        return Prefix(t.name, t.rate, _subst(t.body, x, r))
    if isinstance(t, ActPrefix):
        return ActPrefix(t.name, _subst(t.body, x, r))
    if isinstance(t, TimePrefix):
        return TimePrefix(t.rate, _subst(t.body, x, r))
    if isinstance(t, Choice):
        return Choice(_subst(t.left, x, r), _subst(t.right, x, r))
    if isinstance(t, Par):
        return Par(_subst(t.left, x, r), _subst(t.right, x, r), t.sync)
    if isinstance(t, Hide):
        return Hide(_subst(t.body, x, r), t.names)
    return Relab(_subst(t.body, x, r), t.mapping)


def _relabel(mapping, a):
    return dict(mapping).get(a, a)


def it_proofs(t, otimes=lambda x, y: x * y):
    """Every derivation of an IT transition as (name, rate, target, proof-tree)."""
    if isinstance(t, Prefix):
        return [(t.name, t.rate, t.body, ("Pre",))]
    if isinstance(t, Choice):
        return [(a, r, d, ("Alt1", p)) for a, r, d, p in it_proofs(t.left, otimes)] + [
            (a, r, d, ("Alt2", p)) for a, r, d, p in it_proofs(t.right, otimes)
        ]
    if isinstance(t, Par):
        left, right = it_proofs(t.left, otimes), it_proofs(t.right, otimes)
        out = [(a, r, Par(d, t.right, t.sync), ("Par1", p)) for a, r, d, p in left if a not in t.sync]
        out += [(a, r, Par(t.left, d, t.sync), ("Par2", p)) for a, r, d, p in right if a not in t.sync]
        out += [
            (a, otimes(r1, r2), Par(d1, d2, t.sync), ("Syn", p1, p2))
            for a, r1, d1, p1 in left
            for b, r2, d2, p2 in right
            if a == b and a in t.sync
        ]
        return out
    if isinstance(t, Hide):
        return [
            (TAU if a in t.names else a, r, Hide(d, t.names), ("Hid1" if a in t.names else "Hid2", p))
            for a, r, d, p in it_proofs(t.body, otimes)
        ]
    if isinstance(t, Relab):
        return [(_relabel(t.mapping, a), r, Relab(d, t.mapping), ("Rel", p)) for a, r, d, p in it_proofs(t.body, otimes)]
    if isinstance(t, Rec):
        return [(a, r, d, ("Rec", p)) for a, r, d, p in it_proofs(_subst(t.body, t.var, t), otimes)]
    return []


def it_multiplicities(t, otimes=lambda x, y: x * y) -> Counter:
    proofs = it_proofs(t, otimes)
    assert len({(a, r, d, p) for a, r, d, p in proofs}) == len(proofs), "duplicate proof trees"
    return Counter((a, r, d) for a, r, d, _ in proofs)


def ot_time_proofs(t):
    if isinstance(t, TimePrefix):
        return [(t.rate, t.body, ("PreM",))]
    if isinstance(t, Choice):
        return [(r, d, ("AltM1", p)) for r, d, p in ot_time_proofs(t.left)] + [
            (r, d, ("AltM2", p)) for r, d, p in ot_time_proofs(t.right)
        ]
    if isinstance(t, Par):
        return [(r, Par(d, t.right, t.sync), ("ParM1", p)) for r, d, p in ot_time_proofs(t.left)] + [
            (r, Par(t.left, d, t.sync), ("ParM2", p)) for r, d, p in ot_time_proofs(t.right)
        ]
    if isinstance(t, Hide):
        return [(r, Hide(d, t.names), ("HidM", p)) for r, d, p in ot_time_proofs(t.body)]
    if isinstance(t, Relab):
        return [(r, Relab(d, t.mapping), ("RelM", p)) for r, d, p in ot_time_proofs(t.body)]
    if isinstance(t, Rec):
        return [(r, d, ("RecM", p)) for r, d, p in ot_time_proofs(_subst(t.body, t.var, t))]
    return []


def ot_time_multiplicities(t) -> Counter:
    return Counter((r, d) for r, d, _ in ot_time_proofs(t))


def ot_action_set(t) -> set:
    if isinstance(t, ActPrefix):
        return {(t.name, t.body)}
    if isinstance(t, Choice):
        return ot_action_set(t.left) | ot_action_set(t.right)
    if isinstance(t, Par):
        left, right = ot_action_set(t.left), ot_action_set(t.right)
        out = {(a, Par(d, t.right, t.sync)) for a, d in left if a not in t.sync}
        out |= {(a, Par(t.left, d, t.sync)) for a, d in right if a not in t.sync}
        out |= {(a, Par(d1, d2, t.sync)) for a, d1 in left for b, d2 in right if a == b and a in t.sync}
        return out
    if isinstance(t, Hide):
        return {(TAU if a in t.names else a, Hide(d, t.names)) for a, d in ot_action_set(t.body)}
    if isinstance(t, Relab):
        return {(_relabel(t.mapping, a), Relab(d, t.mapping)) for a, d in ot_action_set(t.body)}
    if isinstance(t, Rec):
        return ot_action_set(_subst(t.body, t.var, t))
    return set()


# -- greatest fixed point bisimilarity over state pairs


def _classes(n, rel):
    return [frozenset(t for t in range(n) if (s, t) in rel) for s in range(n)]


def _rate_into(m: Mlts, s, pred, cls) -> Fraction:
    return sum((tr.label.rate * tr.mult for tr in m.out[s] if pred(tr.label) and tr.dst in cls), Fraction(0))


def gfp_it(m: Mlts) -> set:
    n = len(m.states)
    names = {tr.label.name for tr in m.transitions}
    rel = {(s, t) for s in range(n) for t in range(n)}
    while True:
        classes = set(_classes(n, rel))
        keep = set()
        for s, t in rel:
            ok = all(
                _rate_into(m, s, lambda l, a=a: l.name == a, d) == _rate_into(m, t, lambda l, a=a: l.name == a, d)
                for a in names
                for d in classes
            )
            if ok:
                keep.add((s, t))
        if keep == rel:
            return rel
        rel = keep


def gfp_ot(m: Mlts, variant: str) -> set:
    n = len(m.states)
    acts = [[(tr.label.name, tr.dst) for tr in m.out[s] if isinstance(tr.label, OtAct)] for s in range(n)]
    is_time = lambda l: isinstance(l, OtTime)

    def rates_required(s, t):
        if variant == "lazy":
            return True
        if variant == "eager":
            return not acts[s] and not acts[t]
        return all(a != TAU for a, _ in acts[s]) and all(a != TAU for a, _ in acts[t])

    rel = {(s, t) for s in range(n) for t in range(n)}
    while True:
        classes = set(_classes(n, rel))
        keep = set()
        for s, t in rel:
            ok = all(any(b == a and (d1, d2) in rel for b, d2 in acts[t]) for a, d1 in acts[s])
            ok = ok and all(any(b == a and (d1, d2) in rel for b, d1 in acts[s]) for a, d2 in acts[t])
            if ok and rates_required(s, t):
                ok = all(_rate_into(m, s, is_time, d) == _rate_into(m, t, is_time, d) for d in classes)
            if ok:
                keep.add((s, t))
        if keep == rel:
            return rel
        rel = keep


def relation_blocks(n, rel) -> set:
    return set(_classes(n, rel))


def partition_blocks(partition) -> set:
    return {frozenset(b) for b in partition.blocks}
