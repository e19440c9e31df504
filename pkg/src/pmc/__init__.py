"""Private monomial computation: entropy formulas, a discrete-log retrieval scheme, and a Monte-Carlo harness."""

from .entropy import MonomialSet
from .ffield import FiniteField, make_field
from .scheme import SchemeConfig

__all__ = ["FiniteField", "MonomialSet", "SchemeConfig", "make_field"]
__version__ = "0.1.0"
