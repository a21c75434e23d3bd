"""Translations from the integrated-time calculus into the orthogonal-time one.

Each exponentially timed action ``<a,l>.P`` becomes a delay followed by the
instantaneous action.  Three variants exist, one per interpretation of action
urgency:

* lazy: ``(l).a.Q``; defined on sequential terms only,
* eager: ``(l).a.Q``; defined on synchronization-free terms,
* maximal progress: ``(l).rec Z.(tau.Z + a.Q)``; synchronization-free terms.

Outside those classes the translations are known not to preserve
equivalence, so they are rejected rather than translated.
"""
from __future__ import annotations

import enum
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

from .semantics_it import PRODUCT, step_it, total_rate_it
from .semantics_ot import step_ot_actions, step_ot_time, total_rate_ot
from .terms import (
    TAU,
    ActPrefix,
    Choice,
    Hide,
    Nil,
    Par,
    Prefix,
    Rec,
    Relab,
    Term,
    TimePrefix,
    Var,
    alpha_key,
    calculus_of,
    fresh_variable,
    require_well_formed,
    substitute,
    subterms,
)


class Variant(str, enum.Enum):
    LAZY = "lazy"
    EAGER = "eager"
    MAX_PROGRESS = "mp"


class ClassViolation(ValueError):
    """The input lies outside the translation's domain; ``subterm`` is the culprit."""

    def __init__(self, message: str, subterm: Term):
        self.subterm = subterm
        super().__init__(message)


class NotSequential(ClassViolation):
    pass


class NotSyncFree(ClassViolation):
    pass


def _check_class(p: Term, variant: Variant):
    for node in subterms(p):
        if not isinstance(node, Par):
            continue
        if variant is Variant.LAZY:
            raise NotSequential(
                "the lazy translation is defined only for sequential terms "
                "(no parallel composition)",
                node,
            )
        if node.sync:
            raise NotSyncFree(
                "the eager and maximal-progress translations are defined only for "
                f"synchronization-free terms; this composition synchronizes on {{{','.join(sorted(node.sync))}}}",
                node,
            )


def _translate(p: Term, variant: Variant) -> Term:
    if isinstance(p, Nil):
        return p
    if isinstance(p, Prefix):
        cont = _translate(p.body, variant)
        if variant is Variant.MAX_PROGRESS:
            z = fresh_variable(cont, avoid_bound=False)
            return TimePrefix(p.rate, Rec(z, Choice(ActPrefix(TAU, Var(z)), ActPrefix(p.name, cont))))
        return TimePrefix(p.rate, ActPrefix(p.name, cont))
    if isinstance(p, Choice):
        return Choice(_translate(p.left, variant), _translate(p.right, variant))
    if isinstance(p, Par):
        return Par(_translate(p.left, variant), _translate(p.right, variant), p.sync)
    if isinstance(p, Hide):
        return Hide(_translate(p.body, variant), p.names)
    if isinstance(p, Relab):
        return Relab(_translate(p.body, variant), p.mapping)
    if isinstance(p, Var):
        return p
    if isinstance(p, Rec):
        return Rec(p.var, _translate(p.body, variant))
    raise TypeError(f"not an integrated-time term: {p!r}")


def encode(p: Term, variant, closed: bool = True) -> Term:
    """Translate ``p``; ``closed=False`` admits open terms (used by substitution checks)."""
    variant = Variant(variant)
    if calculus_of(p) == "ot":
        raise ValueError("expected an integrated-time term")
    if closed:
        require_well_formed(p)
    _check_class(p, variant)
    return _translate(p, variant)


def gamma_lazy(p: Term) -> Term:
    return encode(p, Variant.LAZY)


def gamma_eager(p: Term) -> Term:
    return encode(p, Variant.EAGER)


def gamma_mp(p: Term) -> Term:
    return encode(p, Variant.MAX_PROGRESS)


# -- lemma checks ----------------------------------------------------------------------


EXIT_RATE, CORRESPONDENCE, SUBSTITUTION = "exit-rate", "correspondence", "substitution"


@dataclass
class LemmaReport:
    variant: str
    states_checked: int = 0
    substitutions_checked: int = 0
    truncated: bool = False
    failures: list[tuple[str, str]] = field(default_factory=list)  # (lemma kind, message)

    @property
    def ok(self) -> bool:
        return not self.failures

    def failed(self, kind: str) -> list[str]:
        return [msg for k, msg in self.failures if k == kind]


def check_lemmas(
    p: Term,
    variant,
    max_states: int = 2000,
    substitution_samples: int = 20,
    rng: Optional[random.Random] = None,
) -> LemmaReport:
    """Check the translation lemmas on every IT state reachable from ``p``.

    (a) the translated state offers no action and has the same total exit rate;
    (b) each IT move ``(a, l, p')`` is matched, with multiplicity, by a delay of
        rate ``l`` into a state whose only action moves are ``a`` to the
        translation of ``p'`` (plus the tau selfloop for maximal progress);
    (c) translation commutes with substituting a closed recursion for a
        variable, on open subterms of ``p``.

    Target comparisons are up to renaming of bound variables, since the fresh
    selfloop variable may differ from one side to the other.
    """
    variant = Variant(variant)
    report = LemmaReport(variant.value)
    gamma = lambda t: encode(t, variant)

    seen = {p}
    queue = deque([p])
    while queue:
        if report.states_checked >= max_states:
            report.truncated = True
            break
        state = queue.popleft()
        report.states_checked += 1
        q = gamma(state)
        where = str(state)

        if step_ot_actions(q):
            report.failures.append((EXIT_RATE, f"translation of {where} can perform an action initially"))
        if total_rate_it(state, PRODUCT) != total_rate_ot(q):
            report.failures.append(
                (EXIT_RATE, f"total exit rates differ at {where}: {total_rate_it(state)} vs {total_rate_ot(q)}")
            )

        it_moves = Counter()
        for (a, rate, tgt), k in step_it(state, PRODUCT).items():
            it_moves[(a, rate, alpha_key(gamma(tgt)))] += k
            if tgt not in seen:
                seen.add(tgt)
                queue.append(tgt)
        ot_moves = Counter()
        for (rate, mid), k in step_ot_time(q).items():
            acts = set(step_ot_actions(mid))
            if variant is Variant.MAX_PROGRESS:
                if (TAU, mid) in acts:
                    acts.discard((TAU, mid))
                else:
                    acts = set()  # missing selfloop: report below
            if len(acts) != 1:
                report.failures.append(
                    (
                        CORRESPONDENCE,
                        f"delay ({rate}) from translation of {where} reaches {mid}, "
                        f"whose action moves are not of the expected shape",
                    )
                )
                continue
            ((a, tgt),) = acts
            ot_moves[(a, rate, alpha_key(tgt))] += k
        if it_moves != ot_moves:
            report.failures.append((CORRESPONDENCE, f"transition correspondence fails at {where}"))

    report.substitutions_checked = _check_substitutions(p, variant, substitution_samples, rng, report)
    return report


def _check_substitutions(p, variant, samples, rng, report) -> int:
    """Commutation of translation with ``{rec X: R <- Y}`` on open subterms of ``p``."""
    rng = rng or random.Random(0)
    closed_recs = [n for n in subterms(p) if isinstance(n, Rec) and not n.free_vars]
    open_terms = [n for n in subterms(p) if n.free_vars]
    cases = []
    # every unfolding of a closed recursion is an instance
    for r in closed_recs:
        cases.append((r.body, r.var, r))
    for _ in range(samples):
        if not closed_recs or not open_terms:
            break
        body = rng.choice(open_terms)
        cases.append((body, rng.choice(sorted(body.free_vars)), rng.choice(closed_recs)))
    for body, y, r in cases:
        left = encode(substitute(body, y, r), variant, closed=False)
        right = substitute(encode(body, variant, closed=False), y, encode(r, variant))
        same = left == right if variant is not Variant.MAX_PROGRESS else alpha_key(left) == alpha_key(right)
        if not same:
            report.failures.append((SUBSTITUTION, f"substitution does not commute for {body} with {y} := {r}"))
    return len(cases)
