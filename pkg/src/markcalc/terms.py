"""Abstract syntax for the integrated-time (IT) and orthogonal-time (OT) calculi.

Both calculi share the operators nil, choice, parallel composition, hiding,
relabeling, variables and recursion.  They differ only in their prefixes:

* IT terms use ``Prefix(name, rate, body)`` (an exponentially timed action),
* OT terms use ``ActPrefix(name, body)`` and ``TimePrefix(rate, body)``.

All nodes are immutable and hashable.  States of a transition system are
terms compared syntactically, so hashes are cached on first use.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterator, Optional, Union

TAU = "tau"
RESERVED = frozenset({"nil", "rec", "tau"})

_VISIBLE_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Rate = Fraction


class IllFormedTerm(ValueError):
    """Raised when an operation needs a closed and guarded term."""

    def __init__(self, term, report):
        self.term = term
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


def is_visible(name: str) -> bool:
    return name != TAU and bool(_VISIBLE_RE.match(name))


def is_identifier(name: str) -> bool:
    return name not in RESERVED and bool(_IDENT_RE.match(name))


def check_visible(name: str) -> str:
    if name == TAU:
        raise ValueError("action visibility violated: tau is not a visible name")
    if not is_visible(name):
        raise ValueError(f"invalid visible action name {name!r}")
    return name


def make_rate(value) -> Fraction:
    """Exact positive rate from an int, Fraction or decimal/fraction string."""
    if isinstance(value, float):
        raise TypeError("rates must be exact; pass a string or Fraction, not a float")
    rate = Fraction(value)
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    return rate


class Term:
    """Common base of every AST node.

    The hash, the free variables and the Rec count are computed once at construction from
    the (already built) children, so neither recurses over deep terms.
    """

    _field_names: tuple = ()
    _is_rec = False

    def __post_init__(self):
        values = tuple(getattr(self, n) for n in self._field_names)
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + values))
        object.__setattr__(self, "free_vars", self._free_vars())
        # number of Rec nodes; bounds the unfoldings needed to reach a prefix
        rec_count = sum(c.rec_count for c in self.children()) + self._is_rec
        object.__setattr__(self, "rec_count", rec_count)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self):
            return NotImplemented
        if self._hash != other._hash:
            return False
        return all(getattr(self, n) == getattr(other, n) for n in self._field_names)

    def children(self) -> tuple["Term", ...]:
        return ()

    def _free_vars(self) -> frozenset:
        kids = self.children()
        if not kids:
            return frozenset()
        if len(kids) == 1:
            return kids[0].free_vars
        return kids[0].free_vars | kids[1].free_vars

    def __str__(self) -> str:
        from .parser import print_term

        return print_term(self)


def _node(cls):
    cls = dataclass(frozen=True, eq=False)(cls)
    cls._field_names = tuple(f.name for f in fields(cls))
    return cls


@_node
class Nil(Term):
    pass


@_node
class Prefix(Term):
    name: str
    rate: Fraction
    body: Term

    def children(self):
        return (self.body,)


@_node
class ActPrefix(Term):
    name: str
    body: Term

    def children(self):
        return (self.body,)


@_node
class TimePrefix(Term):
    rate: Fraction
    body: Term

    def children(self):
        return (self.body,)


@_node
class Choice(Term):
    left: Term
    right: Term

    def children(self):
        return (self.left, self.right)


@_node
class Par(Term):
    left: Term
    right: Term
    sync: frozenset = field(default_factory=frozenset)

    def children(self):
        return (self.left, self.right)


@_node
class Hide(Term):
    body: Term
    names: frozenset

    def children(self):
        return (self.body,)


@_node
class Relab(Term):
    """Relabeling; ``mapping`` is a sorted tuple of (source, target) visible names."""

    body: Term
    mapping: tuple

    def children(self):
        return (self.body,)

    def apply(self, name: str) -> str:
        for src, dst in self.mapping:
            if src == name:
                return dst
        return name


@_node
class Var(Term):
    name: str

    def _free_vars(self):
        return frozenset({self.name})


@_node
class Rec(Term):
    var: str
    body: Term
    _is_rec = True

    def children(self):
        return (self.body,)

    def _free_vars(self):
        return self.body.free_vars - {self.var}


NIL = Nil()

ItTerm = Term
OtTerm = Term
Node = Union[Nil, Prefix, ActPrefix, TimePrefix, Choice, Par, Hide, Relab, Var, Rec]


def relabeling(pairs) -> tuple:
    """Normalize an iterable or dict of visible-to-visible pairs.

    Conflicting targets for one source are rejected, as is any mention of tau.
    """
    items = pairs.items() if isinstance(pairs, dict) else pairs
    seen: dict[str, str] = {}
    for src, dst in items:
        check_visible(src)
        check_visible(dst)
        if seen.get(src, dst) != dst:
            raise ValueError(f"relabeling maps {src!r} to both {seen[src]!r} and {dst!r}")
        seen[src] = dst
    return tuple(sorted(seen.items()))


def name_set(names) -> frozenset:
    return frozenset(check_visible(n) for n in names)


# -- traversal ---------------------------------------------------------------


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order walk over every node of ``t``."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def calculus_of(t: Term) -> Optional[str]:
    """'it' or 'ot' according to the prefixes present, None when there are none."""
    kinds = set()
    for node in subterms(t):
        if isinstance(node, Prefix):
            kinds.add("it")
        elif isinstance(node, (ActPrefix, TimePrefix)):
            kinds.add("ot")
    if len(kinds) > 1:
        raise ValueError("term mixes integrated-time and orthogonal-time prefixes")
    return kinds.pop() if kinds else None


def variables(t: Term) -> set[str]:
    """Every variable name occurring in ``t``, free or bound."""
    out = set()
    for node in subterms(t):
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Rec):
            out.add(node.var)
    return out


def substitute(t: Term, var: str, replacement: Term) -> Term:
    """Replace the free occurrences of ``var`` in ``t`` by ``replacement``.

    Binders are not renamed, so ``replacement`` should be closed (it always is
    when unfolding recursion in a closed term).
    """
    if var not in t.free_vars:
        return t
    if isinstance(t, Var):
        return replacement
    if isinstance(t, Rec):
        # var is free in t, so t.var != var
        return Rec(t.var, substitute(t.body, var, replacement))
    if isinstance(t, Prefix):
        return Prefix(t.name, t.rate, substitute(t.body, var, replacement))
    if isinstance(t, ActPrefix):
        return ActPrefix(t.name, substitute(t.body, var, replacement))
    if isinstance(t, TimePrefix):
        return TimePrefix(t.rate, substitute(t.body, var, replacement))
    if isinstance(t, Choice):
        return Choice(substitute(t.left, var, replacement), substitute(t.right, var, replacement))
    if isinstance(t, Par):
        return Par(substitute(t.left, var, replacement), substitute(t.right, var, replacement), t.sync)
    if isinstance(t, Hide):
        return Hide(substitute(t.body, var, replacement), t.names)
    if isinstance(t, Relab):
        return Relab(substitute(t.body, var, replacement), t.mapping)
    raise TypeError(f"not a term: {t!r}")


def unfold(t: Rec) -> Term:
    """One unfolding ``body{rec X: body <- X}`` as used by the recursion rules."""
    return substitute(t.body, t.var, t)


def alpha_key(t: Term, bound: tuple = ()):
    """Nameless (de Bruijn style) structure; equal keys mean alpha-equivalent terms."""
    if isinstance(t, Var):
        if t.name in bound:
            return ("bvar", bound.index(t.name))
        return ("fvar", t.name)
    if isinstance(t, Rec):
        return ("rec", alpha_key(t.body, (t.var,) + bound))
    if isinstance(t, Nil):
        return ("nil",)
    if isinstance(t, Prefix):
        return ("pre", t.name, t.rate, alpha_key(t.body, bound))
    if isinstance(t, ActPrefix):
        return ("act", t.name, alpha_key(t.body, bound))
    if isinstance(t, TimePrefix):
        return ("time", t.rate, alpha_key(t.body, bound))
    if isinstance(t, Choice):
        return ("+", alpha_key(t.left, bound), alpha_key(t.right, bound))
    if isinstance(t, Par):
        return ("||", t.sync, alpha_key(t.left, bound), alpha_key(t.right, bound))
    if isinstance(t, Hide):
        return ("/", t.names, alpha_key(t.body, bound))
    if isinstance(t, Relab):
        return ("[]", t.mapping, alpha_key(t.body, bound))
    raise TypeError(f"not a term: {t!r}")


def alpha_equivalent(t1: Term, t2: Term) -> bool:
    return t1 == t2 or alpha_key(t1) == alpha_key(t2)


# -- well-formedness -----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # "free" | "unguarded" | "mixed"
    var: Optional[str]
    path: tuple[str, ...]

    def __str__(self):
        where = "/".join(self.path) or "<root>"
        if self.kind == "mixed":
            return f"term mixes integrated-time and orthogonal-time prefixes (at {where})"
        return f"{self.var} {self.kind} (at {where})"


@dataclass(frozen=True)
class WellFormedReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


_CHILD_TAGS = {
    Prefix: ("prefix",),
    ActPrefix: ("act",),
    TimePrefix: ("time",),
    Choice: ("left", "right"),
    Par: ("left", "right"),
    Hide: ("hide",),
    Relab: ("relab",),
}


def check_well_formed(t: Term) -> WellFormedReport:
    """Report every free variable and every unguarded recursion variable.

    A variable is guarded when it lies beneath a prefix (action or time) inside
    the body of its binder.  Shadowing resolves to the innermost binder.
    """
    violations: list[Violation] = []

    def walk(node, bound: frozenset, unguarded: frozenset, path: tuple):
        if isinstance(node, Var):
            if node.name not in bound:
                violations.append(Violation("free", node.name, path))
            elif node.name in unguarded:
                violations.append(Violation("unguarded", node.name, path))
            return
        if isinstance(node, Rec):
            walk(node.body, bound | {node.var}, unguarded | {node.var}, path + (f"rec {node.var}",))
            return
        if isinstance(node, (Prefix, ActPrefix, TimePrefix)):
            unguarded = frozenset()
        for tag, child in zip(_CHILD_TAGS.get(type(node), ()), node.children()):
            walk(child, bound, unguarded, path + (tag,))

    walk(t, frozenset(), frozenset(), ())
    try:
        calculus_of(t)
    except ValueError:
        violations.append(Violation("mixed", None, ()))
    return WellFormedReport(tuple(violations))


def require_well_formed(t: Term) -> Term:
    report = check_well_formed(t)
    if not report.ok:
        raise IllFormedTerm(t, report)
    return t


# -- classification --------------------------------------------------------------


@dataclass(frozen=True)
class TermClass:
    sequential: bool
    sync_free: bool
    # only meaningful for OT terms
    no_nondet: Optional[bool] = None
    controlled_nondet: Optional[bool] = None

    def as_dict(self) -> dict:
        out = {"sequential": self.sequential, "sync_free": self.sync_free}
        if self.no_nondet is not None:
            out["no_nondet"] = self.no_nondet
            out["controlled_nondet"] = self.controlled_nondet
        return out


def _structural_flags(t: Term) -> tuple[bool, bool]:
    pars = [n for n in subterms(t) if isinstance(n, Par)]
    return not pars, all(not p.sync for p in pars)


def classify_it(t: Term) -> TermClass:
    require_well_formed(t)
    if calculus_of(t) == "ot":
        raise ValueError("classify_it expects an integrated-time term")
    sequential, sync_free = _structural_flags(t)
    return TermClass(sequential, sync_free)


def _initially_acts(t: Term, env: dict) -> bool:
    """Can ``t`` offer an action transition before any delay or action?"""
    if isinstance(t, ActPrefix):
        return True
    if isinstance(t, (Nil, TimePrefix)):
        return False
    if isinstance(t, Var):
        return env.get(t.name, False)
    if isinstance(t, Rec):
        # the bound variable is guarded, so its value cannot matter here
        return _initially_acts(t.body, {**env, t.var: False})
    if isinstance(t, (Choice, Par)):
        return _initially_acts(t.left, env) or _initially_acts(t.right, env)
    if isinstance(t, (Hide, Relab)):
        return _initially_acts(t.body, env)
    raise TypeError(f"not an OT term: {t!r}")


def is_selfloop_shape(t: Term) -> bool:
    """``rec Z: (tau.Z + a.Q)`` with Z not free in Q."""
    return (
        isinstance(t, Rec)
        and isinstance(t.body, Choice)
        and t.body.left == ActPrefix(TAU, Var(t.var))
        and isinstance(t.body.right, ActPrefix)
        and t.var not in t.body.right.body.free_vars
    )


def _choice_conflicts(t: Term) -> tuple[bool, bool]:
    """(any nondeterministic choice, any outside the selfloop shape)."""
    found_any = found_uncontrolled = False

    def walk(node, env, controlled):
        nonlocal found_any, found_uncontrolled
        if isinstance(node, Choice):
            if _initially_acts(node.left, env) and _initially_acts(node.right, env):
                found_any = True
                if not controlled:
                    found_uncontrolled = True
            walk(node.left, env, False)
            walk(node.right, env, False)
            return
        if isinstance(node, Rec):
            env = {**env, node.var: _initially_acts(node.body, {**env, node.var: False})}
            walk(node.body, env, is_selfloop_shape(node))
            return
        for child in node.children():
            walk(child, env, False)

    walk(t, {}, False)
    return found_any, found_uncontrolled


def classify_ot(t: Term) -> TermClass:
    """Structural flags plus the two nondeterminism classes.

    A choice is nondeterministic when both summands can initially perform an
    action.  Recursion variables take the initial capability of their binder,
    so the check covers every reachable unfolding of the choice.
    """
    require_well_formed(t)
    if calculus_of(t) == "it":
        raise ValueError("classify_ot expects an orthogonal-time term")
    sequential, sync_free = _structural_flags(t)
    any_nd, uncontrolled = _choice_conflicts(t)
    return TermClass(sequential, sync_free, no_nondet=not any_nd, controlled_nondet=not uncontrolled)


def fresh_variable(t: Term, avoid_bound: bool = True, base: str = "Z") -> str:
    """Smallest name in the scheme Z, Z1, Z2, ... not occurring in ``t``.

    With ``avoid_bound=False`` only free occurrences are avoided.
    """
    taken = variables(t) if avoid_bound else t.free_vars
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"
