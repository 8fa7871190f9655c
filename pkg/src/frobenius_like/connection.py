"""Flatness of the connection d/dz_j - kappa p_j(z)*, and the e-operator for unit weights."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .algebra import CanonicalBasis, Matrix, Vector
from .arrangement import Arrangement
from .errors import UnsupportedModeError
from .exact import det, solve_linear
from .report import VerificationReport


def mult_derivative(basis: CanonicalBasis, z: Sequence, j: int, i: int) -> Matrix:
    """Exact value at z of ``d/dz_i`` of the matrix of ``p_j *``."""
    fib = basis.at(z)
    key = ("dM", j, i)
    m = fib._cache.get(key)
    if m is None:
        cache = fib._forms
        rows = []
        for row in basis.mult_terms(j):
            out = []
            for cell in row:
                total = Fraction(0)
                for t in cell:
                    slope = t.form.coeffs[i]
                    if slope:
                        v = cache.get(t.form)
                        if v is None:
                            v = cache[t.form] = t.form(fib.z)
                        # d/dz_i (c F^m) = c m F'_i F^(m-1)
                        total += t.coeff * t.exponent * slope * v ** (t.exponent - 1)
                out.append(total)
            rows.append(out)
        m = fib._cache[key] = Matrix(rows)
    return m


def flatness_check(basis: CanonicalBasis, z: Sequence, kappa=None, *,
                   sample: str | None = None) -> VerificationReport:
    """Both kappa-independent flatness conditions, exactly at z.

    ``[nabla_i, nabla_j] = -kappa (d_i M_j - d_j M_i) + kappa^2 [M_i, M_j]``,
    so vanishing of the two brackets gives flatness for every kappa.
    """
    report = VerificationReport()
    fib = basis.at(z)
    n = basis.arr.n
    with report.timed("flatness", sample=sample) as out:
        bad = None
        worst = Fraction(0)
        for i in range(n):
            for j in range(i + 1, n):
                comm = fib.M(i) @ fib.M(j) - fib.M(j) @ fib.M(i)
                curl = mult_derivative(basis, z, j, i) - mult_derivative(basis, z, i, j)
                for name, mat in (("commutator", comm), ("mixed_derivative", curl)):
                    if not mat.is_zero():
                        worst = max(worst, mat.max_abs())
                        bad = bad or {"i": i, "j": j, "part": name}
        out["ok"] = bad is None
        out["residual"] = worst
        out["witness"] = bad or {"kappa": "all" if kappa is None else kappa}
    return report


@dataclass(frozen=True)
class EOperator:
    """Coefficients ``e_I(z)`` of the shift operator, one per sorted k-subset."""

    arr: Arrangement
    z: tuple
    coefficients: dict

    def element(self, basis: CanonicalBasis) -> Vector:
        """Coordinates of ``sum_I e_I P_I`` in the w-basis."""
        acc = [Fraction(0)] * basis.dim
        for I, e in self.coefficients.items():
            d = self.arr.minor(I)
            for pos, x in enumerate(basis.reduce_index(I)):
                if x:
                    acc[pos] += e * x / d
        return tuple(acc)

    def operator(self, basis: CanonicalBasis) -> Matrix:
        """Multiplication by the element: ``sum_I e_I prod_{i in I} p_i *``."""
        fib = basis.at(self.z)
        total = Matrix.zeros(basis.dim)
        for I, e in self.coefficients.items():
            if e:
                total = total + fib.product_operator(I) * e
        return total


def _require_unit_weights(arr: Arrangement) -> None:
    if not arr.unit_weights:
        raise UnsupportedModeError("the e-operator is only available when every weight a_j is 1")


def e_coefficients(arr: Arrangement, z: Sequence) -> EOperator:
    """Iterated-residue coefficients: ``e_I = 1 / prod_{j not in I} f_j(t_I, z)``.

    ``t_I`` is the common zero of the hyperplanes in I.
    """
    _require_unit_weights(arr)
    z = tuple(Fraction(x) for x in z)
    arr.require_generic(z)
    coeffs = {}
    for I in arr.subsets():
        t = solve_linear(Matrix([arr.b[i] for i in I]), [-z[i] for i in I])
        prod = Fraction(1)
        for j in range(arr.n):
            if j not in I:
                prod *= arr.hyperplane_form(j, z)(t)
        coeffs[I] = 1 / prod
    return EOperator(arr, z, coeffs)


def check_partial_fractions(e: EOperator, *, points: int = 3, seed: int = 0,
                            sample: str | None = None) -> VerificationReport:
    """``1/prod_j f_j(t) = sum_I e_I / prod_{i in I} f_i(t)`` exactly at random rational t."""
    arr = e.arr
    report = VerificationReport()
    rng = random.Random(seed)
    forms = [arr.hyperplane_form(j, e.z) for j in range(arr.n)]
    with report.timed("e_partial_fractions", sample=sample) as out:
        bad = None
        tried = 0
        while tried < points:
            t = tuple(Fraction(rng.randint(-10**4, 10**4), rng.randint(1, 97)) for _ in range(arr.k))
            vals = [f(t) for f in forms]
            if any(v == 0 for v in vals):
                continue
            tried += 1
            lhs = 1 / math.prod(vals, start=Fraction(1))
            rhs = sum((c / math.prod((vals[i] for i in I), start=Fraction(1))
                       for I, c in e.coefficients.items()), Fraction(0))
            if lhs != rhs:
                bad = {"t": list(t), "lhs": lhs, "rhs": rhs}
                break
        out["ok"] = bad is None
        out["witness"] = bad or {"points": tried}
        out["residual"] = abs(bad["lhs"] - bad["rhs"]) if bad else Fraction(0)
    return report


def e_tilde_invertible(basis: CanonicalBasis, z: Sequence, e: EOperator, *,
                       sample: str | None = None) -> VerificationReport:
    """The element ``sum e_I P_I`` is invertible and equals ``prod_j [1/f_j]``."""
    report = VerificationReport()
    fib = basis.at(z)
    with report.timed("e_tilde_invertible", sample=sample) as out:
        op = e.operator(basis)
        d = det(op)
        out["ok"] = d != 0
        out["witness"] = {"det": d}
    with report.timed("e_tilde_product", sample=sample) as out:
        elem = e.element(basis)
        # [1/f_j] = p_j / a_j; with unit weights the product of all p_j applied to 1
        prod = fib.unit()
        for j in range(basis.arr.n):
            prod = fib.M(j) @ prod
        unit_ok = (op @ fib.unit()) == elem
        out["ok"] = prod == elem and unit_ok
        out["witness"] = None if out["ok"] else {"product_matches": prod == elem, "unit_matches": unit_ok}
    return report
