import random
import sys
from fractions import Fraction

import pytest

from markcalc.bisim import equivalent
from markcalc.encode import (
    CORRESPONDENCE,
    EXIT_RATE,
    SUBSTITUTION,
    NotSequential,
    NotSyncFree,
    Variant,
    check_lemmas,
    encode,
    gamma_eager,
    gamma_lazy,
    gamma_mp,
)
from markcalc.parser import parse_it, parse_ot, print_term
from markcalc.terms import (
    NIL,
    ActPrefix,
    Choice,
    Hide,
    IllFormedTerm,
    Prefix,
    Rec,
    Relab,
    TimePrefix,
    Var,
    classify_it,
    classify_ot,
    subterms,
)

from .generators import gen_it

ENC = sys.modules["markcalc.encode"]

LM = {"l": 1, "m": 2}
KIND = {"lazy": "seq", "eager": "sf", "mp": "sf"}


def it(text):
    return parse_it(text, rates=LM)


def ot(text):
    return parse_ot(text, rates=LM)


def test_lazy_prefix_clause():
    assert gamma_lazy(it("<a,l>.nil")) == ot("(l).a.nil")
    assert gamma_lazy(NIL) == NIL
    assert gamma_lazy(it("<a,1>.<b,1>.nil + <c,2>.nil")) == ot("(1).a.(1).b.nil + (2).c.nil")


def test_lazy_homomorphic_clauses():
    p = it("rec X.(<a,1>.X + <b,2>.nil) / {a}[b->c]")
    assert gamma_lazy(p) == ot("rec X.((1).a.X + (2).b.nil) / {a}[b->c]")


def test_eager_translates_interleaving():
    assert gamma_eager(it("<a,l>.nil ||{} <b,m>.nil")) == ot("(l).a.nil ||{} (m).b.nil")
    assert gamma_eager(it("<a,l>.<b,m>.nil + <b,m>.<a,l>.nil")) == ot("(l).a.(m).b.nil + (m).b.(l).a.nil")
    assert gamma_eager(it("<a,l>.nil")) == ot("(l).a.nil")


def test_maximal_progress_clause():
    assert print_term(gamma_mp(it("<a,l>.nil"))) == "(1).rec Z.(tau.Z + a.nil)"
    assert gamma_mp(NIL) == NIL
    assert print_term(gamma_mp(it("<a,1>.<b,2>.nil"))) == "(1).rec Z.(tau.Z + a.(2).rec Z.(tau.Z + b.nil))"


def test_maximal_progress_selfloop_variable_avoids_free_names():
    # Z is free in the continuation, so the selfloop takes the next fresh name
    out = gamma_mp(it("rec Z.<a,1>.Z"))
    assert print_term(out) == "rec Z.(1).rec Z1.(tau.Z1 + a.Z)"


def test_lazy_rejects_parallel():
    with pytest.raises(NotSequential) as info:
        gamma_lazy(it("<a,1>.nil + (nil ||{} <b,1>.nil)"))
    assert isinstance(info.value.subterm, type(it("nil ||{} nil")))
    assert "sequential" in str(info.value)


@pytest.mark.parametrize("fn", [gamma_eager, gamma_mp])
def test_sync_sets_rejected(fn):
    with pytest.raises(NotSyncFree) as info:
        fn(it("(<a,l>.nil + <b,m>.nil) ||{b} nil"))
    assert info.value.subterm.sync == frozenset({"b"})


def test_ill_formed_input_rejected():
    with pytest.raises(IllFormedTerm):
        gamma_lazy(it("<a,1>.X"))
    with pytest.raises(ValueError):
        encode(ot("a.nil"), "lazy")


@pytest.mark.parametrize("variant", ["lazy", "eager", "mp"])
def test_class_preservation(variant):
    rng = random.Random(51)
    for _ in range(300):
        p = gen_it(rng, depth=5, kind=KIND[variant])
        cls = classify_ot(encode(p, variant))
        assert cls.sync_free
        if variant == "lazy":
            assert cls.sequential and cls.no_nondet
        elif variant == "eager":
            assert cls.no_nondet
        else:
            assert cls.controlled_nondet
        assert classify_it(p).sync_free


@pytest.mark.parametrize("variant", ["lazy", "eager", "mp"])
def test_homomorphism(variant):
    rng = random.Random(52)
    g = lambda t: encode(t, variant)
    for _ in range(150):
        p1 = gen_it(rng, depth=3, kind=KIND[variant])
        p2 = gen_it(rng, depth=3, kind=KIND[variant])
        assert g(Choice(p1, p2)) == Choice(g(p1), g(p2))
        assert g(Hide(p1, frozenset({"a"}))) == Hide(g(p1), frozenset({"a"}))
        assert g(Relab(p1, (("a", "b"),))) == Relab(g(p1), (("a", "b"),))
        body = Prefix("a", Fraction(1), p1)
        assert encode(Rec("W", body), variant) == Rec("W", encode(body, variant))


@pytest.mark.parametrize("variant", ["lazy", "eager", "mp"])
def test_lemmas_on_small_examples(variant):
    for text in ["<a,1>.nil", "rec X . <a,1>.X", "nil", "rec X.(<a,1>.X + <b,2>.rec Y.(<c,1>.X + <tau,3>.Y))"]:
        report = check_lemmas(it(text), variant)
        assert report.ok, report.failures
    assert check_lemmas(NIL, variant).states_checked == 1


def test_lemma_report_counts():
    report = check_lemmas(it("rec X.<a,1>.<b,2>.X"), "eager")
    assert report.ok and report.states_checked == 2 and report.substitutions_checked >= 1
    assert not report.truncated


def test_lemma_checker_detects_a_broken_translation(monkeypatch):
    real = ENC._translate

    def doubled(p, variant):
        # every delay twice as fast: exit rates and correspondence must both fail
        if isinstance(p, Prefix):
            return TimePrefix(p.rate * 2, ActPrefix(p.name, doubled(p.body, variant)))
        if isinstance(p, Choice):
            return Choice(doubled(p.left, variant), doubled(p.right, variant))
        return real(p, variant)

    monkeypatch.setattr(ENC, "_translate", doubled)
    report = check_lemmas(it("<a,1>.nil + <b,1>.nil"), "lazy")
    assert report.failed(EXIT_RATE) and report.failed(CORRESPONDENCE)


def test_lemma_checker_detects_missing_selfloop(monkeypatch):
    real = ENC._translate
    monkeypatch.setattr(ENC, "_translate", lambda p, variant: real(p, Variant.EAGER))
    report = check_lemmas(it("<a,1>.nil"), "mp")
    assert report.failed(CORRESPONDENCE) and not report.failed(EXIT_RATE)


def test_lemma_checker_detects_broken_substitution(monkeypatch):
    real = ENC._translate

    def renaming(p, variant):
        # rename variable occurrences: substitution no longer reaches them
        if isinstance(p, Var):
            return Var(p.name + "_")
        return real(p, variant)

    monkeypatch.setattr(ENC, "_translate", renaming)
    report = check_lemmas(it("rec X.<a,1>.X"), "eager")
    assert report.failed(SUBSTITUTION)


def test_starting_time_order_breaks_preservation():
    # observing the start of an action makes the race a nondeterministic choice
    def start_first(p):
        if isinstance(p, Prefix):
            return ActPrefix(p.name, TimePrefix(p.rate, start_first(p.body)))
        if isinstance(p, Choice):
            return Choice(start_first(p.left), start_first(p.right))
        return p

    p1, p2 = it("<a,1>.nil + <a,2>.nil"), it("<a,3>.nil")
    assert equivalent(p1, p2, "it")
    q1, q2 = start_first(p1), start_first(p2)
    assert not classify_ot(q1).no_nondet
    for variant in ("lazy", "eager", "mp"):
        assert not equivalent(q1, q2, "ot", variant)
        assert equivalent(encode(p1, variant), encode(p2, variant), "ot", variant)


def test_lazy_needs_sequential_terms():
    p1 = it("<a,l>.nil ||{} <b,m>.nil")
    p2 = it("<a,l>.<b,m>.nil + <b,m>.<a,l>.nil")
    assert equivalent(p1, p2, "it")
    # translating the parallel term anyway (eagerly) and judging it lazily breaks preservation
    assert not equivalent(gamma_eager(p1), gamma_eager(p2), "ot", "lazy")


def test_translations_are_total_on_their_classes():
    rng = random.Random(53)
    for _ in range(200):
        p = gen_it(rng, depth=5, kind="sf")
        for node in subterms(gamma_mp(p)):
            assert not isinstance(node, Prefix)
