"""eqalign: instruction-level equivalence alignments between C functions.

The main entry point is `align_functions`, which parses two functions,
proves which of their instructions must compute equal values on every
input, and derives a correctness verdict plus a variable-name map from the
result.
"""

from .align import (AlignResult, Alignment, Verdict, align_analyzed,
                    align_functions, audit_alignment, map_variables,
                    name_accuracy, result_to_json, result_to_text)
from .analyze import AnalyzedFn, analyze_source
from .cfront import ErrorKind, SubsetError
from .infer import AlignOptions

__all__ = [
    "AlignOptions",
    "AlignResult",
    "Alignment",
    "AnalyzedFn",
    "ErrorKind",
    "SubsetError",
    "Verdict",
    "align_analyzed",
    "align_functions",
    "analyze_source",
    "audit_alignment",
    "map_variables",
    "name_accuracy",
    "result_to_json",
    "result_to_text",
]
