"""Workbench for integrated-time and orthogonal-time Markovian process calculi."""
from .bisim import OtVariant, Partition, Verdict, bisim_it, bisim_ot, equivalent
from .encode import ClassViolation, NotSequential, NotSyncFree, check_lemmas, encode, gamma_eager, gamma_lazy, gamma_mp
from .mlts import Mlts, build_it, build_ot, export_dot, export_json, extract_ctmc, import_json
from .parser import ParseError, parse_it, parse_ot, print_term
from .semantics_it import MIN, PRODUCT, SUM, RateComposer, rate_it, step_it, total_rate_it
from .semantics_ot import rate_ot, step_ot_actions, step_ot_time, total_rate_ot
from .terms import (
    TAU,
    IllFormedTerm,
    TermClass,
    check_well_formed,
    classify_it,
    classify_ot,
    fresh_variable,
)

__version__ = "0.1.0"

__all__ = [
    "bisim_it",
    "bisim_ot",
    "build_it",
    "build_ot",
    "check_lemmas",
    "check_well_formed",
    "classify_it",
    "classify_ot",
    "ClassViolation",
    "encode",
    "equivalent",
    "export_dot",
    "export_json",
    "extract_ctmc",
    "fresh_variable",
    "gamma_eager",
    "gamma_lazy",
    "gamma_mp",
    "IllFormedTerm",
    "import_json",
    "MIN",
    "Mlts",
    "NotSequential",
    "NotSyncFree",
    "OtVariant",
    "parse_it",
    "parse_ot",
    "ParseError",
    "Partition",
    "print_term",
    "PRODUCT",
    "rate_it",
    "rate_ot",
    "RateComposer",
    "step_it",
    "step_ot_actions",
    "step_ot_time",
    "SUM",
    "TAU",
    "TermClass",
    "total_rate_it",
    "total_rate_ot",
    "Verdict",
]
