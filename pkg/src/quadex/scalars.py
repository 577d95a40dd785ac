"""Exact Gaussian-rational scalars.

Every matrix entry and every residual in the engine is a number a + b*i with
a, b arbitrary-precision rationals.  There is no floating point anywhere:
equality is decidable and a zero residual means an exactly zero residual.
"""

from __future__ import annotations

from gmpy2 import mpq

__all__ = ["QQi", "ZERO", "ONE", "I", "qq"]


class ExactDivisionError(ZeroDivisionError):
    """Division by an exactly-zero scalar."""


class QQi:
    """A Gaussian rational re + im*i with exact field arithmetic.

    Immutable.  `re` and `im` are gmpy2.mpq values.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", mpq(re))
        object.__setattr__(self, "im", mpq(im))

    def __setattr__(self, name, value):
        raise AttributeError("QQi is immutable")

    # -- predicates ---------------------------------------------------------

    def is_zero(self):
        return not self.re and not self.im

    def is_real(self):
        return not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    # -- field operations ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        return QQi(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, other):
        other = _coerce(other)
        return QQi(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        if not self.im and not other.im:
            return QQi(self.re * other.re, 0)
        return QQi(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ExactDivisionError("division by exact zero")
        if not self.im:
            return QQi(1 / self.re, 0)
        norm = self.re * self.re + self.im * self.im
        return QQi(self.re / norm, -self.im / norm)

    def __truediv__(self, other):
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def conj(self):
        return QQi(self.re, -self.im)

    # -- comparison / hashing ----------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, mpq)):
            return not self.im and self.re == other
        if not isinstance(other, QQi):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    # -- serialization ------------------------------------------------------

    def to_quad(self):
        """[re_num, re_den, im_num, im_den] with integer components."""
        return [
            int(self.re.numerator),
            int(self.re.denominator),
            int(self.im.numerator),
            int(self.im.denominator),
        ]

    @classmethod
    def from_quad(cls, quad):
        rn, rd, im_n, im_d = quad
        return cls(mpq(rn, rd), mpq(im_n, im_d))


def _coerce(x):
    if isinstance(x, QQi):
        return x
    if isinstance(x, (int, mpq)):
        return QQi(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to QQi")


def qq(re, den=None, im=0):
    """Shorthand constructor: qq(3, 4) == 3/4, qq(1, im=2) == 1 + 2i."""
    if den is not None:
        return QQi(mpq(re, den), im)
    return QQi(re, im)


ZERO = QQi(0)
ONE = QQi(1)
I = QQi(0, 1)
