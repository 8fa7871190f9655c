"""Exact rational kernel: scalars, small dense matrices, linear forms and term sums.

Everything here is exact.  Matrices keep an integer numerator array plus a
single positive denominator, which makes products of the 20x20 operators
that show up for n=7, k=3 fast enough to verify identities entry by entry.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, ShapeError, SingularityError

Scalar = Fraction

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_scalar(value) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` (optionally signed) or an int into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"not a rational literal: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        m = _RATIONAL.match(value)
        if m is None:
            raise InputError(f"not a rational literal: {value!r}")
        den = int(m.group(2)) if m.group(2) is not None else 1
        if den == 0:
            raise InputError(f"zero denominator in {value!r}")
        return Fraction(int(m.group(1)), den)
    raise InputError(f"not a rational literal: {value!r}")


def format_scalar(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


def _bareiss(rows: list[list[int]]) -> tuple[int, int]:
    """Fraction-free elimination on an integer matrix (modified in place).

    Returns ``(rank, det)``; ``det`` is only meaningful for full-rank
    square input and already carries the row-swap sign.
    """
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    sign = 1
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
            sign = -sign
        p = rows[r][c]
        for i in range(r + 1, nrows):
            ri = rows[i]
            f = ri[c]
            rr = rows[r]
            for j in range(c + 1, ncols):
                ri[j] = (p * ri[j] - f * rr[j]) // prev
            ri[c] = 0
        prev = p
        r += 1
    det = sign * rows[nrows - 1][ncols - 1] if r == nrows == ncols and nrows else 0
    if nrows == ncols == 0:
        det = 1
    return r, det


class Matrix:
    """Immutable dense matrix of rationals."""

    __slots__ = ("_num", "_den")

    def __init__(self, rows: Iterable[Iterable]):
        rows = [[parse_scalar(x) for x in row] for row in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(row) != ncols for row in rows):
            raise ShapeError("ragged matrix rows")
        den = 1
        for row in rows:
            for x in row:
                den = _lcm(den, x.denominator)
        num = np.empty((len(rows), ncols), dtype=object)
        for i, row in enumerate(rows):
            for j, x in enumerate(row):
                num[i, j] = x.numerator * (den // x.denominator)
        self._set(num, den)

    def _set(self, num: np.ndarray, den: int) -> None:
        if den < 0:
            num, den = -num, -den
        g = math.gcd(den, *num.flat) if num.size else den
        if g == 0:
            g = den
        if g > 1:
            num = num // g
            den //= g
        if num.size and not any(num.flat):
            den = 1
        num.flags.writeable = False
        self._num = num
        self._den = den

    @classmethod
    def _raw(cls, num: np.ndarray, den: int) -> Matrix:
        m = object.__new__(cls)
        m._set(np.array(num, dtype=object), int(den))
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> Matrix:
        cols = rows if cols is None else cols
        return cls._raw(np.zeros((rows, cols), dtype=object) + 0, 1)

    @classmethod
    def identity(cls, size: int) -> Matrix:
        num = np.zeros((size, size), dtype=object) + 0
        for i in range(size):
            num[i, i] = 1
        return cls._raw(num, 1)

    @classmethod
    def diagonal(cls, values: Sequence) -> Matrix:
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence]) -> Matrix:
        columns = list(columns)
        if not columns:
            return cls([])
        return cls([[col[i] for col in columns] for i in range(len(columns[0]))])

    @property
    def shape(self) -> tuple[int, int]:
        return self._num.shape

    @property
    def numerator(self) -> np.ndarray:
        """Read-only integer array; the matrix is ``numerator / denominator``."""
        return self._num

    @property
    def denominator(self) -> int:
        return self._den

    @property
    def is_square(self) -> bool:
        r, c = self.shape
        return r == c

    def __getitem__(self, idx) -> Fraction:
        i, j = idx
        return Fraction(self._num[i, j], self._den)

    def rows(self) -> list[list[Fraction]]:
        return [[Fraction(x, self._den) for x in row] for row in self._num]

    def column(self, j: int) -> list[Fraction]:
        return [Fraction(x, self._den) for x in self._num[:, j]]

    def to_float(self) -> np.ndarray:
        return np.array([[x / self._den for x in row] for row in self._num], dtype=float)

    @property
    def T(self) -> Matrix:
        return Matrix._raw(self._num.T, self._den)

    def __neg__(self) -> Matrix:
        return Matrix._raw(-self._num, self._den)

    def _check_same(self, other: Matrix) -> None:
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: Matrix) -> Matrix:
        if not isinstance(other, Matrix):
            return NotImplemented
        self._check_same(other)
        den = _lcm(self._den, other._den)
        return Matrix._raw(self._num * (den // self._den) + other._num * (den // other._den), den)

    def __sub__(self, other: Matrix) -> Matrix:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar) -> Matrix:
        s = Fraction(scalar)
        return Matrix._raw(self._num * s.numerator, self._den * s.denominator)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.shape[1] != other.shape[0]:
                raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
            return Matrix._raw(self._num.dot(other._num), self._den * other._den)
        vec = [Fraction(x) for x in other]
        if len(vec) != self.shape[1]:
            raise ShapeError(f"cannot apply {self.shape} matrix to vector of length {len(vec)}")
        return tuple(
            sum((Fraction(a) * x for a, x in zip(row, vec) if a), Fraction(0)) / self._den
            for row in self._num
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self._den == other._den
            and bool(np.all(self._num == other._num))
        )

    def __hash__(self):
        return hash((self.shape, self._den, tuple(self._num.flat)))

    def is_zero(self) -> bool:
        return not any(self._num.flat)

    def is_symmetric(self) -> bool:
        return self.is_square and bool(np.all(self._num == self._num.T))

    def max_abs(self) -> Fraction:
        if not self._num.size:
            return Fraction(0)
        return Fraction(max(abs(x) for x in self._num.flat), self._den)

    def det(self) -> Fraction:
        return det(self)

    def rank(self) -> int:
        rows = [list(r) for r in self._num]
        if not rows or not rows[0]:
            return 0
        return _bareiss(rows)[0]

    def inverse(self) -> Matrix:
        if not self.is_square:
            raise ShapeError("inverse of a non-square matrix")
        n = self.shape[0]
        # Solve A X = den * I over Q with A the integer numerator.
        aug = [[Fraction(x) for x in row] + [Fraction(self._den if i == j else 0) for j in range(n)]
               for i, row in enumerate(self._num)]
        _gauss_jordan(aug, n)
        return Matrix([row[n:] for row in aug])

    def __repr__(self):
        body = "; ".join(", ".join(format_scalar(x) for x in row) for row in self.rows())
        return f"Matrix([{body}])"


def _gauss_jordan(aug: list[list[Fraction]], n: int) -> None:
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise SingularityError("singular matrix", witness={"det": "0"})
        aug[c], aug[piv] = aug[piv], aug[c]
        p = aug[c][c]
        aug[c] = [x / p for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]


def det(m: Matrix) -> Fraction:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    if not m.is_square:
        raise ShapeError(f"determinant of a non-square {m.shape} matrix")
    n = m.shape[0]
    if n == 0:
        return Fraction(1)
    rank, d = _bareiss([list(r) for r in m._num])
    if rank < n:
        return Fraction(0)
    return Fraction(d, m._den ** n)


def solve_linear(m: Matrix, rhs: Sequence) -> tuple[Fraction, ...]:
    """Solve ``m x = rhs`` exactly; raises SingularityError for singular ``m``."""
    if not m.is_square:
        raise ShapeError(f"solve_linear needs a square matrix, got {m.shape}")
    n = m.shape[0]
    rhs = [parse_scalar(x) if not isinstance(x, Fraction) else x for x in rhs]
    if len(rhs) != n:
        raise ShapeError("right-hand side length does not match matrix")
    aug = [row + [b] for row, b in zip(m.rows(), rhs)]
    _gauss_jordan(aug, n)
    return tuple(row[n] for row in aug)


@dataclass(frozen=True, order=True)
class LinearForm:
    """``x -> sum(coeffs[i] * x[i]) + const``."""

    coeffs: tuple
    const: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        object.__setattr__(self, "const", Fraction(self.const))

    @property
    def nvars(self) -> int:
        return len(self.coeffs)

    def __call__(self, point):
        total = self.const
        for c, x in zip(self.coeffs, point):
            if c:
                total = total + c * x
        return total

    evaluate = __call__

    def derivative(self, var: int) -> Fraction:
        return self.coeffs[var]

    @property
    def is_homogeneous(self) -> bool:
        return self.const == 0

    @property
    def is_constant(self) -> bool:
        return not any(self.coeffs)

    def scaled(self, lam) -> LinearForm:
        lam = Fraction(lam)
        return LinearForm(tuple(c * lam for c in self.coeffs), self.const * lam)

    def normalized(self) -> tuple[Fraction, LinearForm]:
        """Return ``(lam, G)`` with ``self == lam * G`` and G's leading entry 1."""
        lead = next((c for c in self.coeffs + (self.const,) if c), None)
        if lead is None:
            return Fraction(1), self
        return lead, self.scaled(1 / lead)

    def format(self, var: str = "z") -> str:
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            mag = abs(c)
            coef = "" if mag == 1 else f"{format_scalar(mag)}*"
            parts.append(("-" if c < 0 else "+", f"{coef}{var}{i}"))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", format_scalar(abs(self.const))))
        s = " ".join(f"{sgn} {body}" for sgn, body in parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class Term:
    """``coeff * form**exponent`` or ``coeff * form**exponent * log(form)``."""

    coeff: Fraction
    form: LinearForm
    exponent: int
    log: bool = False

    def key(self):
        return (self.log, self.exponent, self.form)


def _one(nvars: int) -> LinearForm:
    return LinearForm((0,) * nvars, 1)


class TermSum:
    """Finite sum of terms ``c * F**m`` and ``c * F**m * log F`` over linear forms F.

    Canonical form merges non-log terms whose forms agree up to a scalar
    multiple (the scale is folded into the coefficient) and log terms with
    identical forms.  Constants are stored as exponent-0 powers of the form 1.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, terms: Iterable[Term] = (), nvars: int | None = None):
        terms = list(terms)
        if nvars is None:
            if not terms:
                raise ValueError("empty TermSum needs an explicit nvars")
            nvars = terms[0].form.nvars
        acc: dict = {}
        for t in terms:
            if t.form.nvars != nvars:
                raise ShapeError("term forms have inconsistent variable counts")
            if t.coeff == 0:
                continue
            coeff, form, m = Fraction(t.coeff), t.form, int(t.exponent)
            if not t.log:
                if form.is_constant:
                    if form.const == 0:
                        if m < 0:
                            raise SingularityError("negative power of the zero form", witness=str(form))
                        if m > 0:
                            continue
                        coeff, form, m = coeff, _one(nvars), 0
                    else:
                        coeff, form, m = coeff * form.const ** m, _one(nvars), 0
                elif m == 0:
                    form = _one(nvars)
                else:
                    lam, form = form.normalized()
                    coeff = coeff * lam ** m
            key = (t.log, m, form)
            acc[key] = acc.get(key, Fraction(0)) + coeff
        self.nvars = nvars
        self.terms = tuple(
            Term(c, key[2], key[1], key[0]) for key, c in sorted(acc.items(), key=lambda kv: kv[0]) if c != 0
        )

    @classmethod
    def zero(cls, nvars: int) -> TermSum:
        return cls((), nvars)

    @classmethod
    def constant(cls, value, nvars: int) -> TermSum:
        return cls([Term(Fraction(value), _one(nvars), 0)], nvars)

    @classmethod
    def power(cls, form: LinearForm, exponent: int, coeff=1, log: bool = False) -> TermSum:
        return cls([Term(Fraction(coeff), form, exponent, log)], form.nvars)

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    @property
    def has_log(self) -> bool:
        return any(t.log for t in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, TermSum):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, self.terms))

    def __add__(self, other: TermSum) -> TermSum:
        return TermSum(self.terms + other.terms, self.nvars)

    def __neg__(self) -> TermSum:
        return self * -1

    def __sub__(self, other: TermSum) -> TermSum:
        return self + (-other)

    def __mul__(self, scalar) -> TermSum:
        s = Fraction(scalar)
        return TermSum((Term(t.coeff * s, t.form, t.exponent, t.log) for t in self.terms), self.nvars)

    __rmul__ = __mul__

    def derivative(self, var: int) -> TermSum:
        """Closed-form partial derivative with respect to variable ``var``."""
        out = []
        for t in self.terms:
            dF = t.form.derivative(var)
            if not dF:
                continue
            m = t.exponent
            if t.log:
                # d(c F^m log F) = c dF F^(m-1) (m log F + 1)
                if m:
                    out.append(Term(t.coeff * dF * m, t.form, m - 1, True))
                out.append(Term(t.coeff * dF, t.form, m - 1, False))
            elif m:
                out.append(Term(t.coeff * m * dF, t.form, m - 1, False))
        return TermSum(out, self.nvars)

    def derivative_multi(self, variables: Iterable[int]) -> TermSum:
        ts = self
        for v in variables:
            ts = ts.derivative(v)
        return ts

    def euler(self) -> TermSum:
        """Apply ``sum_j z_j d/dz_j``; every form must be homogeneous."""
        out = []
        for t in self.terms:
            if t.exponent == 0 and not t.log:
                continue
            if not t.form.is_homogeneous:
                raise InputError("Euler operator needs homogeneous forms")
            m = t.exponent
            if m:
                out.append(Term(t.coeff * m, t.form, m, t.log))
            if t.log:
                out.append(Term(t.coeff, t.form, m, False))
        return TermSum(out, self.nvars)

    def without_log(self) -> TermSum:
        return TermSum((t for t in self.terms if not t.log), self.nvars)

    def evaluate(self, point, cache: dict | None = None):
        """Evaluate a log-free sum.  Exact for rational points, generic otherwise."""
        if cache is None:
            cache = {}
        total = Fraction(0)
        for t in self.terms:
            if t.log:
                raise ValueError("TermSum with log terms has no exact value; use evaluate_complex")
            if t.exponent == 0:
                total = total + t.coeff
                continue
            v = cache.get(t.form)
            if v is None:
                v = t.form(point)
                cache[t.form] = v
            if t.exponent < 0 and v == 0:
                raise SingularityError(f"form {t.form} vanishes at the evaluation point", witness=t.form)
            total = total + t.coeff * v ** t.exponent
        return total

    def evaluate_complex(self, point, log=cmath.log) -> complex:
        """Floating-point value; ``log`` selects the branch (principal by default)."""
        total = 0j
        for t in self.terms:
            v = complex(t.form(point))
            term = float(t.coeff) * v ** t.exponent
            if t.log:
                term *= log(v)
            total += term
        return total

    def __repr__(self):
        if not self.terms:
            return "TermSum(0)"
        parts = []
        for t in self.terms:
            if t.exponent == 0 and not t.log:
                parts.append(format_scalar(t.coeff))
                continue
            s = f"{format_scalar(t.coeff)}*({t.form})^{t.exponent}"
            if t.log:
                s += f"*log({t.form})"
            parts.append(s)
        return "TermSum(" + " + ".join(parts) + ")"
