"""Exact transformer evaluation: rational, p-bit float and error-budgeted modes.

Rationals cross the boundary as fractions.Fraction.
"""

from ._core import (
    DomainError,
    FloatOverflowError,
    LoadError,
    Model,
    ModeError,
    PFloat,
    TieError,
    bit_growth,
    block_gap,
    builtin_model,
    builtin_model_names,
    eval_ahat,
    eval_budgeted,
    eval_smat,
    f_add,
    f_div,
    f_exp,
    f_mul,
    f_sqrt,
    f_sub,
    f_sum,
    f_sum_exact,
    load_model,
    margin_recognize,
    parse_model,
    plan_budget,
    recognize,
    round_p,
)

__all__ = [
    "DomainError",
    "FloatOverflowError",
    "LoadError",
    "Model",
    "ModeError",
    "PFloat",
    "TieError",
    "bit_growth",
    "block_gap",
    "builtin_model",
    "builtin_model_names",
    "eval_ahat",
    "eval_budgeted",
    "eval_smat",
    "f_add",
    "f_div",
    "f_exp",
    "f_mul",
    "f_sqrt",
    "f_sub",
    "f_sum",
    "f_sum_exact",
    "load_model",
    "margin_recognize",
    "parse_model",
    "plan_budget",
    "recognize",
    "round_p",
]
