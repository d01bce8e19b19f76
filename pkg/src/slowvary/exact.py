"""Exact scalars: complex numbers with arbitrary-precision rational parts.

Every coefficient in the symbolic layers is one of these; no floating
point enters until the verification module converts at its boundary.
"""

from __future__ import annotations

from fractions import Fraction


def rat(p, q=1) -> Fraction:
    """Reduced rational p/q."""
    return Fraction(p, q)


class ExactScalar:
    """A Gaussian rational re + im*i.

    Both parts are `fractions.Fraction`, so they are stored reduced with
    positive denominator and arithmetic is closed and exact.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    # -- constructors -------------------------------------------------
    @staticmethod
    def coerce(x) -> "ExactScalar":
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return ExactScalar(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to ExactScalar")

    @staticmethod
    def _try(x):
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return ExactScalar(x)
        return None

    # -- predicates ----------------------------------------------------
    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return not self.im

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        other = ExactScalar._try(other)
        if other is None:
            return NotImplemented
        return ExactScalar(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar(-self.re, -self.im)

    def __sub__(self, other):
        other = ExactScalar._try(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return ExactScalar.coerce(other) + (-self)

    def __mul__(self, other):
        other = ExactScalar._try(other)
        if other is None:
            return NotImplemented
        if not self.im and not other.im:
            return ExactScalar(self.re * other.re)
        return ExactScalar(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = ExactScalar.coerce(other)
        if not other:
            raise ZeroDivisionError("ExactScalar division by zero")
        if not other.im:
            return ExactScalar(self.re / other.re, self.im / other.re)
        d = other.re * other.re + other.im * other.im
        return ExactScalar(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def __pow__(self, n: int):
        if n < 0:
            return ONE / (self ** (-n))
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conj(self) -> "ExactScalar":
        return ExactScalar(self.re, -self.im)

    # -- comparisons / hashing -----------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.re == other and not self.im
        if isinstance(other, ExactScalar):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    # -- conversion ------------------------------------------------------
    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)

    def __repr__(self):
        if not self.im:
            return f"ExactScalar({self.re})"
        return f"ExactScalar({self.re}, {self.im})"


ZERO = ExactScalar(0)
ONE = ExactScalar(1)
I = ExactScalar(0, 1)
