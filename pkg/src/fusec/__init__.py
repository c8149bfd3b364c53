"""fusec: a typed accelerator-design language toolchain.

Pipeline: parse -> check -> elaborate (core calculus) -> interpret or emit
pragma-annotated HLS C++. A design-space sweep harness instantiates source
templates and reports acceptance statistics.
"""

from .diagnostics import CheckError, Diagnostic, FuseError, ParseError, Span
from .parser import parse_program
from .pretty import pretty_print
from .typecheck import check_program

__version__ = "0.1.0"

__all__ = [
    "CheckError",
    "Diagnostic",
    "FuseError",
    "ParseError",
    "Span",
    "check_program",
    "parse_program",
    "pretty_print",
    "__version__",
]
