"""Ground-truth function inventories for stripped-binary analysis tooling.

The package turns compiler-produced artifacts (symbol tables plus debug
info) into normalized, scorable ground truth: canonical function records,
byte classifications, and exact-arithmetic comparison against tool output.
"""

__version__ = "0.1.0"

from .model import (
    BinaryImage,
    Diagnostic,
    SectionRecord,
    SymbolRecord,
)

__all__ = [
    "BinaryImage",
    "Diagnostic",
    "SectionRecord",
    "SymbolRecord",
    "__version__",
]
