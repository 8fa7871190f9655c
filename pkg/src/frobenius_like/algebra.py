"""The algebra A_z in the constant w-basis.

Elements are coordinate tuples over the basis ``w_I``, I running over the
k-subsets avoiding an excluded index ``j0``.  Multiplication operators are
first built symbolically (entries are sums ``c / f_T(z)``) and then
evaluated, so the same data feed both the pointwise axiom checks and the
flatness check of the connection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import flint
import numpy as np

from .arrangement import Arrangement, sort_sign
from .errors import InputError
from .exact import Matrix, Term, TermSum, parse_scalar
from .report import VerificationReport

Vector = tuple  # tuple of Fractions (or floats in numeric mode)


def _axpy(alpha, x: Sequence, y: list) -> None:
    for i, v in enumerate(x):
        if v:
            y[i] += alpha * v


class CanonicalBasis:
    """Basis ``{w_I : I a k-subset, j0 not in I}`` of A_z, lexicographically ordered."""

    def __init__(self, arr: Arrangement, j0: int | None = None):
        j0 = arr.n - 1 if j0 is None else j0
        if not 0 <= j0 < arr.n:
            raise InputError(f"excluded index j0={j0} out of range")
        self.arr = arr
        self.j0 = j0
        self.subsets = tuple(arr.subsets(exclude=[j0]))
        self.index = {s: i for i, s in enumerate(self.subsets)}
        self.dim = len(self.subsets)
        self.minors = tuple(arr.minor(s) for s in self.subsets)
        self._reduced: dict = {}
        self._mult_terms: dict = {}
        self._fibers: dict = {}
        self._gram = None

    def __repr__(self):
        return f"CanonicalBasis(n={self.arr.n}, k={self.arr.k}, j0={self.j0}, dim={self.dim})"

    def zero(self) -> Vector:
        return (Fraction(0),) * self.dim

    def unit_vector(self, pos: int) -> Vector:
        v = [Fraction(0)] * self.dim
        v[pos] = Fraction(1)
        return tuple(v)

    def reduce_index(self, tup: Sequence[int]) -> Vector:
        """Coordinates of ``w_tup`` for an ordered k-tuple (zero on repeats)."""
        tup = tuple(tup)
        if len(tup) != self.arr.k:
            raise InputError(f"w needs {self.arr.k} indices, got {tup}")
        self.arr._check_indices(tup)
        sign, key = sort_sign(tup)
        if sign == 0:
            return self.zero()
        vec = self._reduce_sorted(key)
        return vec if sign == 1 else tuple(-x for x in vec)

    def _reduce_sorted(self, key: tuple[int, ...]) -> Vector:
        vec = self._reduced.get(key)
        if vec is not None:
            return vec
        if self.j0 not in key:
            vec = self.unit_vector(self.index[key])
        else:
            p = key.index(self.j0)
            rest = key[:p] + key[p + 1:]
            # w_key = (-1)^p w_{j0, rest} = -(-1)^p sum_{m} w_{m, rest}
            acc = [Fraction(0)] * self.dim
            for m in range(self.arr.n):
                if m == self.j0 or m in rest:
                    continue
                s, sub = sort_sign((m,) + rest)
                acc[self.index[sub]] += s
            sign = -((-1) ** p)
            vec = tuple(sign * x for x in acc)
        self._reduced[key] = vec
        return vec

    def from_w_subsets(self, coeffs: dict) -> Vector:
        """Reduce ``sum coeffs[I] w_I`` (arbitrary k-tuples I) to basis coordinates."""
        acc = [Fraction(0)] * self.dim
        for tup, c in coeffs.items():
            _axpy(c, self.reduce_index(tup), acc)
        return tuple(acc)

    # -- multiplication operators ------------------------------------------------

    def _p_times_w(self, j: int, tup: tuple[int, ...]):
        """``p_j * w_tup`` for j not in tup, as (coordinate vector, f_{j,tup})."""
        arr = self.arr
        full = (j,) + tup
        acc = [Fraction(0)] * self.dim
        for l, i in enumerate(full):
            _axpy((-1) ** l * arr.a[i], self.reduce_index(full[:l] + full[l + 1:]), acc)
        d = arr.minor(tup)
        return [d * x for x in acc], arr.discriminant_form(full)

    def mult_terms(self, j: int) -> list[list[TermSum]]:
        """Symbolic matrix of ``p_j *`` : entry [gamma][alpha] is a sum of c / f_T."""
        cached = self._mult_terms.get(j)
        if cached is not None:
            return cached
        arr = self.arr
        n = arr.n
        entries = [[[] for _ in range(self.dim)] for _ in range(self.dim)]
        for col, beta in enumerate(self.subsets):
            if j not in beta:
                contribs = [self._p_times_w(j, beta)]
                sign = 1
            else:
                p = beta.index(j)
                rest = beta[:p] + beta[p + 1:]
                sign = -((-1) ** p)
                contribs = [self._p_times_w(j, (m,) + rest)
                            for m in range(n) if m != j and m not in rest]
            for vec, form in contribs:
                for row, c in enumerate(vec):
                    if c:
                        entries[row][col].append(Term(sign * c, form, -1))
        out = [[TermSum(cell, n) for cell in row] for row in entries]
        self._mult_terms[j] = out
        return out

    def at(self, z: Sequence) -> Fiber:
        key = tuple(parse_scalar(x) if not isinstance(x, Fraction) else x for x in z)
        fib = self._fibers.get(key)
        if fib is None:
            if len(self._fibers) > 16:
                self._fibers.clear()
            fib = Fiber(self, key)
            self._fibers[key] = fib
        return fib


def grothendieck_pairing(arr: Arrangement, I: Sequence[int], J: Sequence[int]) -> Fraction:
    """Closed-form value of the form on ``w_I, w_J`` (sorted k-subsets), before calibration."""
    k = arr.k
    a = arr.a
    sI, sJ = set(I), set(J)
    shared = sI & sJ
    if len(shared) < k - 1:
        return Fraction(0)
    if sI == sJ:
        prod = math.prod((a[i] for i in I), start=Fraction(1))
        rest = sum((a[m] for m in range(arr.n) if m not in sI), Fraction(0))
        return (-1) ** k * prod * rest / arr.a_sum
    base = tuple(sorted(shared))
    (x,) = sI - shared
    (y,) = sJ - shared
    sign_i = sort_sign(base + (x,))[0]
    sign_j = sort_sign(base + (y,))[0]
    prod = math.prod((a[i] for i in base + (x, y)), start=Fraction(1))
    return sign_i * sign_j * (-1) ** (k + 1) * prod / arr.a_sum


@dataclass(frozen=True)
class GramMatrix:
    basis: CanonicalBasis
    raw: Matrix
    epsilon: int = 1

    @property
    def matrix(self) -> Matrix:
        return self.raw if self.epsilon == 1 else -self.raw

    def form(self, u: Sequence, v: Sequence):
        """Calibrated ``S(u, v)`` for coordinate vectors."""
        gv = self.matrix @ v
        return sum((x * y for x, y in zip(u, gv)), Fraction(0))

    def raw_form(self, u: Sequence, v: Sequence):
        gv = self.raw @ v
        return sum((x * y for x, y in zip(u, gv)), Fraction(0))


def gram(basis: CanonicalBasis, epsilon: int = 1) -> GramMatrix:
    if basis._gram is None:
        rows = [[grothendieck_pairing(basis.arr, I, J) for J in basis.subsets] for I in basis.subsets]
        basis._gram = Matrix(rows)
    if epsilon not in (1, -1):
        raise InputError("calibration sign must be +1 or -1")
    return GramMatrix(basis, basis._gram, epsilon)


class Fiber:
    """Exact data of A_z at one off-discriminant rational point z (cached per basis)."""

    def __init__(self, basis: CanonicalBasis, z: tuple):
        arr = basis.arr
        if len(z) != arr.n:
            raise InputError(f"z needs {arr.n} coordinates")
        arr.require_generic(z)
        self.basis = basis
        self.z = z
        self._M: dict[int, Matrix] = {}
        self._cache: dict = {}
        self._forms: dict = {}
        self._unit: dict = {}

    def M(self, j: int) -> Matrix:
        m = self._M.get(j)
        if m is None:
            terms = self.basis.mult_terms(j)
            m = Matrix([[cell.evaluate(self.z, self._forms) for cell in row] for row in terms])
            self._M[j] = m
        return m

    def unit(self, i0: int | None = None) -> Vector:
        """Unit element from the closed formula with base index ``i0``."""
        i0 = self.basis.arr.n - 1 if i0 is None else i0
        u = self._unit.get(i0)
        if u is None:
            u = unit_element(self.basis, self.z, i0)
            self._unit[i0] = u
        return u

    def product_operator(self, subset: Sequence[int]) -> Matrix:
        """``p_{i_1} * ... * p_{i_k} *`` as a matrix."""
        key = ("prod",) + tuple(sorted(subset))
        m = self._cache.get(key)
        if m is None:
            m = Matrix.identity(self.basis.dim)
            for i in subset:
                m = self.M(i) @ m
            self._cache[key] = m
        return m


@dataclass(frozen=True)
class MultOperator:
    basis: CanonicalBasis
    z: tuple
    j: int
    matrix: Matrix


def mult_operator(basis: CanonicalBasis, z: Sequence, j: int) -> MultOperator:
    """Matrix of ``p_j(z) *`` (column alpha holds the coordinates of ``p_j * w_alpha``)."""
    fib = basis.at(z)
    return MultOperator(basis, fib.z, j, fib.M(j))


def mult_matrix_numeric(basis: CanonicalBasis, z: Sequence[float], j: int) -> np.ndarray:
    """Floating-point ``p_j(z) *`` at a real point (no exactness, no caching)."""
    cache: dict = {}
    return np.array([[float(cell.evaluate(z, cache)) for cell in row] for row in basis.mult_terms(j)])


def unit_element(basis: CanonicalBasis, z: Sequence, i0: int | None = None) -> Vector:
    arr = basis.arr
    k = arr.k
    i0 = arr.n - 1 if i0 is None else i0
    z = tuple(parse_scalar(x) if not isinstance(x, Fraction) else x for x in z)
    arr.require_generic(z)
    acc = [Fraction(0)] * basis.dim
    for I in arr.subsets(exclude=[i0]):
        full = (i0,) + I
        denom = Fraction(1)
        for m in range(k + 1):
            denom *= (-1) ** m * arr.minor(full[:m] + full[m + 1:])
        f = arr.discriminant_form(full)(z)
        _axpy(f ** k / denom, basis.reduce_index(I), acc)
    scale = 1 / arr.a_sum ** k
    return tuple(scale * x for x in acc)


def p_coords(basis: CanonicalBasis, z: Sequence, j: int) -> Vector:
    fib = basis.at(z)
    return fib.M(j) @ fib.unit()


def element_in_p_basis(basis: CanonicalBasis, coords: Sequence) -> Vector:
    """Convert w-coordinates to coordinates over ``P_alpha = w_alpha / d_alpha``."""
    return tuple(c * d for c, d in zip(coords, basis.minors))


@dataclass(frozen=True)
class StructureConstants:
    """``N[alpha]`` is the matrix of ``P_alpha *`` in the P-basis: ``N[alpha][gamma, beta]``."""

    basis: CanonicalBasis
    z: tuple
    N: tuple

    def __call__(self, gamma: int, alpha: int, beta: int) -> Fraction:
        return self.N[alpha][gamma, beta]


def structure_constants(basis: CanonicalBasis, z: Sequence) -> StructureConstants:
    fib = basis.at(z)
    D = Matrix.diagonal(basis.minors)
    Dinv = Matrix.diagonal([1 / d for d in basis.minors])
    N = tuple(D @ fib.product_operator(alpha) @ Dinv for alpha in basis.subsets)
    return StructureConstants(basis, fib.z, N)


def _stack(mats: Sequence[Matrix]) -> tuple[np.ndarray, int]:
    den = 1
    for m in mats:
        den = den * m.denominator // math.gcd(den, m.denominator)
    arr = np.stack([m.numerator * (den // m.denominator) for m in mats])
    return arr, den


def _associativity_defect(T: np.ndarray) -> np.ndarray:
    """``(N_a1 N_a2)[b, a3] - sum_g N_a1[g, a2] N_g[b, a3]`` as an integer array
    indexed ``[a1, b, a2, a3]``, for an integer stack ``T[alpha][gamma, beta]``.

    Both sides are single big-integer matrix products handed to FLINT.
    """
    d = T.shape[0]

    def fm(x):
        return flint.fmpz_mat([[int(v) for v in row] for row in x])

    lhs = fm(T.reshape(d * d, d)) * fm(T.transpose(1, 0, 2).reshape(d, d * d))
    rhs = fm(T.transpose(0, 2, 1).reshape(d * d, d)) * fm(T.reshape(d, d * d))
    lhs = np.array(lhs.tolist(), dtype=object).reshape(d, d, d, d)
    rhs = np.array(rhs.tolist(), dtype=object).reshape(d, d, d, d).transpose(0, 2, 1, 3)
    return lhs - rhs


def check_basis_relations(basis: CanonicalBasis, full_limit: int = 6) -> VerificationReport:
    """Both families of linear relations among the w's reduce to zero."""
    import itertools

    arr = basis.arr
    report = VerificationReport()
    with report.timed("basis_relations") as out:
        bad = None
        count = 0
        for rest in itertools.permutations(range(arr.n), arr.k - 1) if arr.n <= full_limit \
                else arr.subsets(arr.k - 1):
            total = [Fraction(0)] * basis.dim
            for j in range(arr.n):
                _axpy(1, basis.reduce_index((j,) + rest), total)
            count += 1
            if any(total):
                bad = {"relation": "sum", "rest": list(rest)}
                break
        if bad is None:
            tuples = itertools.permutations(range(arr.n), arr.k) if arr.n <= full_limit \
                else ((s[::-1]) for s in arr.subsets())
            for tup in tuples:
                sign, key = sort_sign(tup)
                count += 1
                if basis.reduce_index(tup) != tuple(sign * x for x in basis.reduce_index(key)):
                    bad = {"relation": "antisymmetry", "tuple": list(tup)}
                    break
        if bad is None and basis.dim != math.comb(arr.n - 1, arr.k):
            bad = {"dimension": basis.dim, "expected": math.comb(arr.n - 1, arr.k)}
        out["ok"] = bad is None
        out["witness"] = bad or {"relations": count, "dimension": basis.dim}
    return report


def axiom_suite(basis: CanonicalBasis, z: Sequence, *, sample: str | None = None) -> VerificationReport:
    """Exact checks of the unit, commutativity, pP, associativity, Frobenius and spanning axioms."""
    arr = basis.arr
    n, k, dim = arr.n, arr.k, basis.dim
    report = VerificationReport()
    fib = basis.at(z)
    z = fib.z
    kw = {"sample": sample}
    Ms = [fib.M(j) for j in range(n)]

    with report.timed("p_relation", **kw) as out:
        bad = None
        for rest in arr.subsets(k - 1):
            total = Matrix.zeros(dim)
            for j in range(n):
                d = arr.minor((j,) + rest)
                if d:
                    total = total + Ms[j] * d
            if not total.is_zero():
                bad = {"rest": list(rest), "max_abs": total.max_abs()}
                break
        out["ok"] = bad is None
        out["witness"] = bad
        out["residual"] = bad["max_abs"] if bad else Fraction(0)

    with report.timed("unit", **kw) as out:
        total = Matrix.zeros(dim)
        for j in range(n):
            if z[j]:
                total = total + Ms[j] * z[j]
        diff = total - Matrix.identity(dim) * arr.a_sum
        out["ok"] = diff.is_zero()
        out["residual"] = diff.max_abs()

    with report.timed("unit_i0_independence", **kw) as out:
        ref = fib.unit(n - 1)
        bad = [i0 for i0 in range(n) if fib.unit(i0) != ref]
        out["ok"] = not bad
        out["witness"] = {"differing_i0": bad} if bad else None

    with report.timed("commutativity", **kw) as out:
        bad = None
        worst = Fraction(0)
        for i in range(n):
            for j in range(i + 1, n):
                c = Ms[i] @ Ms[j] - Ms[j] @ Ms[i]
                if not c.is_zero():
                    worst = max(worst, c.max_abs())
                    bad = bad or {"i": i, "j": j}
        out["ok"] = bad is None
        out["witness"] = bad
        out["residual"] = worst

    with report.timed("pp_relation", **kw) as out:
        one = fib.unit()
        bad = None
        for I in arr.subsets():
            lhs = fib.product_operator(I) @ one
            d = arr.minor(I)
            rhs = tuple(x / d for x in basis.reduce_index(I))
            if lhs != rhs:
                bad = {"subset": list(I),
                       "residual": max(abs(x - y) for x, y in zip(lhs, rhs))}
                break
        out["ok"] = bad is None
        out["witness"] = bad
        out["residual"] = bad["residual"] if bad else Fraction(0)

    with report.timed("associativity", **kw) as out:
        sc = structure_constants(basis, z)
        T, den = _stack(sc.N)
        diff = _associativity_defect(T)
        bad = None
        worst = 0
        if any(diff.flat):
            idx = next(i for i, x in np.ndenumerate(diff) if x != 0)
            worst = max(abs(int(x)) for x in diff.flat)
            bad = {"alpha1": int(idx[0]), "beta": int(idx[1]), "alpha2": int(idx[2]), "alpha3": int(idx[3])}
        out["ok"] = bad is None
        out["witness"] = bad
        out["residual"] = Fraction(worst, den * den)

    with report.timed("frobenius", **kw) as out:
        G = gram(basis).raw
        bad = [j for j in range(n) if not (G @ Ms[j]).is_symmetric()]
        out["ok"] = not bad
        out["witness"] = {"j": bad} if bad else None

    with report.timed("spanning", **kw) as out:
        r = _span_rank(Ms, fib.unit(), dim)
        out["ok"] = r == dim
        out["witness"] = {"rank": r, "dimension": dim}
    return report


def _span_rank(Ms: Sequence[Matrix], one: Vector, dim: int) -> int:
    """Rank of the span of all words in the ``p_j *`` applied to ``one``."""
    found = [one]
    frontier = [one]
    rank = Matrix([one]).rank()
    while frontier and rank < dim:
        nxt = []
        for v in frontier:
            for M in Ms:
                w = M @ v
                r = Matrix(found + [w]).rank()
                if r > rank:
                    found.append(w)
                    nxt.append(w)
                    rank = r
        frontier = nxt
    return rank
