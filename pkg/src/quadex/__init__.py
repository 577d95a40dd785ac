"""Exact-arithmetic workbench for quadratic exchange algebras."""

from .scalars import QQi, qq
from .tensor import IndexSet, Leg, LegMatrix, embed, kron, permutation_operator

__all__ = [
    "QQi",
    "qq",
    "Leg",
    "IndexSet",
    "LegMatrix",
    "kron",
    "embed",
    "permutation_operator",
]
