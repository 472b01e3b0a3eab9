"""Exact Gaussian-rational scalars and elimination.

Floats convert exactly (every finite double is a dyadic rational), so any
coefficient entering the symbolic layer can be carried without rounding and
turned into a ``complex`` only when a matrix is finally evaluated.
"""

from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Sequence


class GaussRational:
    __slots__ = ("re", "im")

    def __init__(self, re: Fraction | int = 0, im: Fraction | int = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        o = exact(other)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = exact(other)
        return GaussRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return exact(other) - self

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __mul__(self, other):
        o = exact(other)
        return GaussRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = exact(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("GaussRational division by zero")
        return GaussRational(
            (self.re * o.re + self.im * o.im) / den,
            (self.im * o.re - self.re * o.im) / den,
        )

    def __rtruediv__(self, other):
        return exact(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = GaussRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        try:
            o = exact(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def conjugate(self):
        return GaussRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussRational({self.re!s}, {self.im!s})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


def exact(x) -> GaussRational:
    """Convert ``x`` to a :class:`GaussRational` without rounding."""
    if isinstance(x, GaussRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussRational(x)
    if isinstance(x, numbers.Complex):
        z = complex(x)
        if not (z.real == z.real and z.imag == z.imag) or abs(z) == float("inf"):
            raise ValueError(f"non-finite coefficient {x!r}")
        return GaussRational(Fraction(z.real), Fraction(z.imag))
    raise TypeError(f"cannot convert {type(x).__name__} to GaussRational")


def _row_reduce(rows: list[list[GaussRational]], ncols: int) -> list[int]:
    """In-place reduced row echelon form; returns pivot columns."""
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = GaussRational(1) / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def exact_rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    work = [[exact(v) for v in row] for row in rows]
    return len(_row_reduce(work, len(work[0])))


def exact_solve(columns: Sequence[Sequence], target: Sequence) -> list[GaussRational] | None:
    """One solution ``x`` of ``sum_j x_j * columns[j] == target``, or None."""
    nrows = len(target)
    ncols = len(columns)
    aug = [[exact(columns[j][i]) for j in range(ncols)] + [exact(target[i])] for i in range(nrows)]
    pivots = _row_reduce(aug, ncols + 1)
    if pivots and pivots[-1] == ncols:
        return None
    x = [GaussRational(0)] * ncols
    for r, c in enumerate(pivots):
        x[c] = aug[r][ncols]
    return x
