"""Twisted periods, lifted flat sections and the shift by the e-operator (unit weights).

A cycle is a chain of oriented simplices in t-space.  Vertices are either
intersection points of k hyperplanes (they move with z) or fixed points.
On a simplex, ``f_j`` is affine in the barycentric coordinates, so
``log|f_j| = logsumexp_v(log lam_v + log|f_j(v)|)`` over the vertices where it
does not vanish; on a closed chamber all those values share one sign, and the
formula stays accurate on faces that lie in a hyperplane.

With every ``a_j = 1`` and ``g(z) = kappa^-k int prod_j f_j^kappa dt``, the
derivative over a multiset M of indices is
``kappa^-k prod_i (kappa)_{m_i} int prod_j f_j^kappa f_i^-m_i dt`` with falling
factorials ``(kappa)_m``, because ``f_i`` depends on ``z_i`` alone.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .algebra import CanonicalBasis, mult_matrix_numeric
from .arrangement import Arrangement
from .connection import EOperator, e_coefficients
from .errors import InputError, ParameterError, QuadratureError, SingularityError, UnsupportedModeError
from .exact import LinearForm, Matrix, parse_scalar
from .quadrature import integrate_simplex_log
from .report import VerificationReport

MAX_LEVEL = {1: 12, 2: 7, 3: 5}


# -- cycles --------------------------------------------------------------------

@dataclass(frozen=True)
class Meet:
    """The common point of the k hyperplanes listed in ``planes``."""
    planes: tuple[int, ...]


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]


Vertex = Union[Meet, Point]


@dataclass(frozen=True)
class Segment:
    """k = 1: the ``index``-th bounded interval between consecutive roots, left to right."""
    index: int


@dataclass(frozen=True)
class Simplices:
    """An oriented chain of k-simplices, each a tuple of k+1 vertices."""
    simplices: tuple[tuple[Vertex, ...], ...]


Cycle = Union[Segment, Simplices]


def parse_cycle(spec: dict, arr: Arrangement | None = None, z: Sequence | None = None) -> Cycle:
    """Build a cycle from its config form.

    ``{"type": "segment", "index": m}`` or ``{"type": "simplices", "simplices": [...]}``
    where a vertex is a coordinate list or ``{"meet": [i_1, ..., i_k]}``.
    Given ``arr`` and ``z``, coordinate vertices lying on k hyperplanes at z
    are converted to meet vertices so that they move with z.
    """
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("a cycle needs a 'type' field")
    kind = spec["type"]
    if kind == "segment":
        idx = spec.get("index")
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise InputError("segment cycle needs an integer 'index'")
        return Segment(idx)
    if kind != "simplices":
        raise InputError(f"unknown cycle type {kind!r}")
    raw = spec.get("simplices")
    if not isinstance(raw, list) or not raw:
        raise InputError("simplices cycle needs a non-empty 'simplices' list")
    out = []
    for simplex in raw:
        verts = []
        for v in simplex:
            if isinstance(v, dict):
                if "meet" not in v:
                    raise InputError("vertex objects need a 'meet' list")
                verts.append(Meet(tuple(sorted(int(i) for i in v["meet"]))))
            else:
                pt = tuple(float(parse_scalar(x)) if isinstance(x, str) else float(x) for x in v)
                verts.append(_track(arr, z, pt) if arr is not None and z is not None else Point(pt))
        out.append(tuple(verts))
    return Simplices(tuple(out))


def _track(arr: Arrangement, z: Sequence, pt: tuple[float, ...]) -> Vertex:
    if len(pt) != arr.k:
        raise InputError(f"vertex {list(pt)} needs {arr.k} coordinates")
    zf = [float(x) for x in z]
    on = []
    for j in range(arr.n):
        row = [float(x) for x in arr.b[j]]
        val = sum(c * t for c, t in zip(row, pt)) + zf[j]
        scale = max(1.0, abs(zf[j]), *(abs(c * t) for c, t in zip(row, pt)))
        if abs(val) <= 1e-12 * scale:
            on.append(j)
    if len(on) > arr.k:
        raise SingularityError(f"vertex {list(pt)} lies on {len(on)} > k hyperplanes", witness=on)
    return Meet(tuple(on)) if len(on) == arr.k else Point(pt)


def _roots(arr: Arrangement, z: Sequence) -> list[tuple[float, int]]:
    if arr.k != 1:
        raise UnsupportedModeError("segments exist only for k = 1; supply simplices for k >= 2")
    roots = sorted((-float(z[i]) / float(arr.b[i][0]), i) for i in range(arr.n))
    for (r1, i1), (r2, i2) in zip(roots, roots[1:]):
        if r1 == r2:
            raise SingularityError(f"hyperplanes {i1} and {i2} coincide at this z", witness=[i1, i2])
    return roots


def bounded_segments(arr: Arrangement, z: Sequence) -> list[Segment]:
    """All bounded intervals for k = 1: there are n - 1 of them."""
    return [Segment(m) for m in range(len(_roots(arr, z)) - 1)]


def resolve_cycle(arr: Arrangement, z: Sequence, cycle: Cycle) -> tuple[tuple[Vertex, ...], ...]:
    """Simplices of the cycle with segment indices replaced by the meet vertices at z."""
    if isinstance(cycle, Segment):
        roots = _roots(arr, z)
        if not 0 <= cycle.index < len(roots) - 1:
            raise InputError(f"segment index {cycle.index} out of range 0..{len(roots) - 2}")
        return ((Meet((roots[cycle.index][1],)), Meet((roots[cycle.index + 1][1],))),)
    for simplex in cycle.simplices:
        if len(simplex) != arr.k + 1:
            raise InputError(f"a simplex needs {arr.k + 1} vertices")
        for v in simplex:
            if isinstance(v, Meet):
                if len(set(v.planes)) != arr.k or not all(0 <= i < arr.n for i in v.planes):
                    raise InputError(f"meet vertex needs {arr.k} distinct hyperplanes, got {list(v.planes)}")
            elif len(v.coords) != arr.k:
                raise InputError(f"vertex {list(v.coords)} needs {arr.k} coordinates")
    return cycle.simplices


# -- the integrals ---------------------------------------------------------------

def check_kappa(arr: Arrangement, kappa) -> float:
    """Admissibility: real positive, and ``kappa |a|``, ``kappa a_j`` not in Z_{<=0}."""
    if isinstance(kappa, complex):
        if kappa.imag != 0:
            raise ParameterError("only real kappa is supported")
        kappa = kappa.real
    kappa = parse_scalar(kappa) if isinstance(kappa, str) else kappa
    value = float(kappa)
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(f"kappa must be real and positive, got {kappa}")
    for x in [arr.a_sum, *arr.a]:
        prod = Fraction(kappa) * x if isinstance(kappa, (int, Fraction)) else value * float(x)
        if prod <= 0 and prod == int(prod):
            raise ParameterError(f"kappa * {x} = {prod} is a non-positive integer")
    return value


def _vertex_data(arr: Arrangement, zf: np.ndarray, v: Vertex):
    b = np.array([[float(x) for x in row] for row in arr.b])
    if isinstance(v, Meet):
        P = list(v.planes)
        try:
            t = np.linalg.solve(b[P], -zf[P])
        except np.linalg.LinAlgError as exc:
            raise SingularityError(f"hyperplanes {P} do not meet in a point") from exc
        vals = b @ t + zf
        vals[P] = 0.0
    else:
        t = np.array(v.coords, dtype=float)
        vals = b @ t + zf
    return t, vals


def _simplex_integral(arr, zf, simplex, exps, tol, level):
    """``int prod_j f_j^{exps_j}`` over one oriented simplex, returning (value, level)."""
    k = arr.k
    data = [_vertex_data(arr, zf, v) for v in simplex]
    verts = np.array([t for t, _ in data])
    vals = np.array([f for _, f in data])  # (k+1, n)
    vol = np.linalg.det((verts[1:] - verts[0]).T) if k > 1 else verts[1, 0] - verts[0, 0]
    if vol == 0:
        return 0j, level or 0
    phase = 0.0
    alpha = 1.0
    pieces = []
    for j in range(arr.n):
        e = exps[j]
        col = vals[:, j]
        nz = np.nonzero(col)[0]
        signs = np.sign(col[nz])
        if len(nz) == 0:
            raise SingularityError(f"hyperplane {j} contains a whole simplex")
        if not (np.all(signs > 0) or np.all(signs < 0)):
            raise InputError(f"a simplex crosses hyperplane {j}")
        if signs[0] < 0:
            phase += e
        if e == 0:
            continue
        if len(nz) < k + 1:
            if e <= -1:
                raise QuadratureError(f"integrand diverges on hyperplane {j} (exponent {e})")
            alpha = min(alpha, e + 1)
        pieces.append((e, nz, np.log(np.abs(col[nz]))))

    def log_f(lam):
        total = np.zeros(lam.shape[1])
        for e, nz, logv in pieces:
            if len(nz) == 1:
                total += e * (lam[nz[0]] + logv[0])
            else:
                total += e * logsumexp(lam[nz] + logv[:, None], axis=0)
        return total

    res = integrate_simplex_log(log_f, k, alpha=alpha, tol=tol, level=level,
                                max_level=MAX_LEVEL.get(k, 4))
    value = res.value * abs(vol) * np.sign(vol) * cmath.exp(1j * math.pi * phase)
    return value, res.level


def _falling(kappa: float, m: int) -> float:
    return math.prod(kappa - r for r in range(m))


def _require_unit(arr: Arrangement) -> None:
    if not arr.unit_weights:
        raise UnsupportedModeError("twisted periods are implemented only when every weight a_j is 1")


def period_derivative(arr: Arrangement, z: Sequence, kappa, cycle: Cycle, multiset: Sequence[int] = (),
                      *, tol: float = 1e-10, level: int | None = None, detail: bool = False):
    """``d^M g(z, kappa)`` for a multiset M of indices, by integrating the differentiated integrand."""
    _require_unit(arr)
    kap = check_kappa(arr, kappa)
    zf = np.array([float(x) for x in z])
    counts = Counter(multiset)
    for i in counts:
        if not 0 <= i < arr.n:
            raise InputError(f"index {i} out of range")
    exps = [kap - counts.get(j, 0) for j in range(arr.n)]
    total = 0j
    used = 0
    for simplex in resolve_cycle(arr, z, cycle):
        v, lev = _simplex_integral(arr, zf, simplex, exps, tol, level)
        total += v
        used = max(used, lev)
    factor = math.prod(_falling(kap, m) for m in counts.values()) / kap ** arr.k
    value = factor * total
    return (value, used) if detail else value


def twisted_period(arr: Arrangement, z: Sequence, kappa, cycle: Cycle, subset: Sequence[int] | None = None,
                   *, tol: float = 1e-10, level: int | None = None) -> complex:
    """``g = kappa^-k int prod f_j^kappa``; with a k-subset I, ``d^k g / dz_I = int prod f^kappa / prod_I f``."""
    if subset is not None and len(set(subset)) != arr.k:
        raise InputError(f"derivative subset needs {arr.k} distinct indices")
    return period_derivative(arr, z, kappa, cycle, tuple(subset or ()), tol=tol, level=level)


# -- sections ----------------------------------------------------------------------

@dataclass(frozen=True)
class Section:
    """Coordinates in the w-basis of ``s = sum_I (d_I g) d_I^2 P_I`` over a grid of z."""
    basis: CanonicalBasis
    kappa: float
    cycle: Cycle
    grid: tuple
    values: np.ndarray = field(repr=False)
    level: int = 0


def _coords_from_derivatives(basis: CanonicalBasis, dg: dict) -> np.ndarray:
    """``sum_I dg[I] d_I w_I`` (as ``P_I = w_I / d_I``) in basis coordinates."""
    out = np.zeros(basis.dim, dtype=complex)
    for I, val in dg.items():
        vec = np.array([float(x) for x in basis.reduce_index(I)])
        out += val * float(basis.arr.minor(I)) * vec
    return out


def section_coordinates(basis: CanonicalBasis, z: Sequence, kappa, cycle: Cycle, *,
                        tol: float = 1e-10, level: int | None = None, detail: bool = False):
    arr = basis.arr
    dg = {}
    used = 0
    for I in arr.subsets():
        dg[I], lev = period_derivative(arr, z, kappa, cycle, I, tol=tol, level=level, detail=True)
        used = max(used, lev)
    s = _coords_from_derivatives(basis, dg)
    return (s, used) if detail else s


def lifted_section(basis: CanonicalBasis, grid: Sequence[Sequence], kappa, cycle: Cycle, *,
                   tol: float = 1e-10, level: int | None = None) -> Section:
    """The section lifted from g on every grid point, with one quadrature level for the whole grid."""
    grid = tuple(tuple(float(x) for x in z) for z in grid)
    if not grid:
        raise InputError("empty grid")
    if level is None:
        _, level = section_coordinates(basis, grid[0], kappa, cycle, tol=tol, detail=True)
    values = np.array([section_coordinates(basis, z, kappa, cycle, level=level) for z in grid])
    return Section(basis, check_kappa(basis.arr, kappa), cycle, grid, values, level)


def flat_residual(basis: CanonicalBasis, coords, z: Sequence[float], kappa: float, step: float = 1e-4,
                  order: int = 4) -> float:
    """``max_j |d_j s - kappa M_j s| / |s|`` with central differences of ``coords(z)``.

    ``order`` 2 is the three-point stencil; 4 (default) the five-point one,
    whose truncation error ``O(step^4)`` stays below the quadrature noise.
    """
    if order not in (2, 4):
        raise InputError("finite-difference order must be 2 or 4")
    zf = np.array([float(x) for x in z])
    s = coords(zf)
    norm = np.linalg.norm(s)
    worst = 0.0
    for j in range(basis.arr.n):
        h = np.zeros_like(zf)
        h[j] = step
        if order == 2:
            ds = (coords(zf + h) - coords(zf - h)) / (2 * step)
        else:
            ds = (8 * (coords(zf + h) - coords(zf - h)) - (coords(zf + 2 * h) - coords(zf - 2 * h))) / (12 * step)
        M = mult_matrix_numeric(basis, zf, j)
        worst = max(worst, float(np.linalg.norm(ds - kappa * (M @ s)) / norm))
    return worst


def section_residual(basis: CanonicalBasis, z: Sequence[float], kappa, cycle: Cycle, *,
                     step: float = 1e-4, tol: float = 1e-10, level: int | None = None, order: int = 4) -> float:
    """Flat-section residual of the lifted section at z, one quadrature level for the whole stencil."""
    kap = check_kappa(basis.arr, kappa)
    if level is None:
        _, level = section_coordinates(basis, z, kappa, cycle, tol=tol, detail=True)
    return flat_residual(basis, lambda zz: section_coordinates(basis, zz, kappa, cycle, level=level),
                         z, kap, step, order)


def independence_measure(columns: Sequence[np.ndarray]) -> float:
    """Hadamard ratio ``|det| / prod |col|`` for a square set, else the smallest
    singular value of the column-normalised matrix."""
    S = np.array(columns).T
    S = S / np.linalg.norm(S, axis=0)
    if S.shape[0] == S.shape[1]:
        return float(abs(np.linalg.det(S)))
    return float(np.linalg.svd(S, compute_uv=False).min())


def check_sections(basis: CanonicalBasis, z: Sequence[float], kappa, cycles: Sequence[Cycle], *,
                   tol: float = 1e-10, step: float = 1e-4, residual_tol: float = 1e-8,
                   independence_tol: float = 1e-3, sample: str | None = None) -> VerificationReport:
    """Residual of each lifted section, quadrature stability, and independence of the sections."""
    report = VerificationReport()
    sections = []
    for c, cycle in enumerate(cycles):
        with report.timed("period_convergence", sample=sample, mode="numeric", tolerance=10 * tol) as out:
            g1 = twisted_period(basis.arr, z, kappa, cycle, tol=tol)
            g2 = twisted_period(basis.arr, z, kappa, cycle, tol=tol / 2)
            rel = abs(g1 - g2) / abs(g2)
            out["ok"] = rel < 10 * tol
            out["residual"] = rel
            out["witness"] = {"cycle": c, "g": g2}
        with report.timed("section_residual", sample=sample, mode="numeric", tolerance=residual_tol) as out:
            s, level = section_coordinates(basis, z, kappa, cycle, tol=tol, detail=True)
            sections.append(s)
            r = section_residual(basis, z, kappa, cycle, step=step, level=level)
            out["ok"] = r < residual_tol
            out["residual"] = r
            out["witness"] = {"cycle": c, "level": level}
    if len(sections) > 1:
        with report.timed("section_independence", sample=sample, mode="numeric",
                          tolerance=independence_tol) as out:
            m = independence_measure(sections)
            out["ok"] = m > independence_tol
            out["residual"] = m
            out["witness"] = {"cycles": len(sections), "dimension": basis.dim}
    return report


# -- the shift -------------------------------------------------------------------

def _e_forms(arr: Arrangement) -> dict:
    """For each k-subset J the linear forms ``l_j(z) = f_j(t*_J(z), z)``, j not in J, with
    ``e_J = prod_j 1 / l_j``."""
    out = {}
    for J in arr.subsets():
        inv = Matrix([arr.b[i] for i in J]).inverse()
        forms = []
        for j in range(arr.n):
            if j in J:
                continue
            # t*_J = -inv z_J, so f_j = z_j - b_j inv z_J
            row = [sum((arr.b[j][r] * inv[r, c] for r in range(arr.k)), Fraction(0)) for c in range(arr.k)]
            coeffs = [Fraction(0)] * arr.n
            coeffs[j] = Fraction(1)
            for c, i in enumerate(J):
                coeffs[i] -= row[c]
            forms.append(LinearForm(tuple(coeffs)))
        out[J] = forms
    return out


def e_derivative(forms: Sequence[LinearForm], z: Sequence[Fraction], A: Sequence[int]) -> Fraction:
    """``d_A prod_j 1/l_j`` exactly at z, by distributing the derivatives over the factors."""
    vals = [F(z) for F in forms]
    total = Fraction(0)
    for assign in itertools.product(range(len(forms)), repeat=len(A)):
        term = Fraction(1)
        counts = Counter(assign)
        for f_idx, v in enumerate(vals):
            c = counts.get(f_idx, 0)
            term *= (-1) ** c * math.factorial(c) / v ** (1 + c)
        for a, f_idx in zip(A, assign):
            term *= forms[f_idx].coeffs[a]
        total += term
    return total


def shifted_section_coordinates(basis: CanonicalBasis, z: Sequence[float], kappa, cycle: Cycle, *,
                                tol: float = 1e-10, level: int | None = None, forms: dict | None = None):
    """Coordinates of the section lifted from ``h = sum_J e_J d_J g(., kappa)``.

    ``d_I h = sum_{A subset I} sum_J (d_A e_J)(d_{I-A} d_J g)``, with e and its
    derivatives exact at the rational value of z and the derivatives of g as
    integrals.
    """
    arr = basis.arr
    forms = forms or _e_forms(arr)
    zq = tuple(Fraction(float(x)) for x in z)
    cache: dict = {}

    def dg(ms):
        key = tuple(sorted(ms))
        if key not in cache:
            cache[key] = period_derivative(arr, z, kappa, cycle, key, tol=tol, level=level)
        return cache[key]

    dh = {}
    for I in arr.subsets():
        total = 0j
        for r in range(len(I) + 1):
            for A in itertools.combinations(I, r):
                rest = tuple(i for i in I if i not in A)
                for J, fs in forms.items():
                    total += float(e_derivative(fs, zq, A)) * dg(rest + J)
        dh[I] = total
    return _coords_from_derivatives(basis, dh)


def shift_check(arr: Arrangement, basis: CanonicalBasis, z: Sequence[float], kappa, cycle: Cycle,
                e: EOperator | None = None, *, tol: float = 1e-10, step: float = 1e-4,
                rel_tol: float = 1e-6, residual_tol: float = 1e-6,
                sample: str | None = None) -> VerificationReport:
    """``(e g)(z, kappa) = (kappa-1)^k g(z, kappa-1)`` on the cycle, and the section lifted
    from ``e g`` solves the system with parameter ``kappa - 1``."""
    _require_unit(arr)
    kap = check_kappa(arr, kappa)
    if kap <= 1:
        raise ParameterError("the shift needs kappa > 1")
    kappa_m1 = (parse_scalar(kappa) if isinstance(kappa, str) else kappa) - 1
    report = VerificationReport()
    if e is None:
        e = e_coefficients(arr, [Fraction(float(x)) for x in z])
    with report.timed("shift_identity", sample=sample, mode="numeric", tolerance=rel_tol) as out:
        lhs = sum(float(c) * twisted_period(arr, z, kappa, cycle, I, tol=tol) for I, c in e.coefficients.items())
        rhs = (kap - 1) ** arr.k * twisted_period(arr, z, kappa_m1, cycle, tol=tol)
        rel = abs(lhs - rhs) / abs(rhs)
        out["ok"] = rel < rel_tol
        out["residual"] = rel
        out["witness"] = {"lhs": lhs, "rhs": rhs}
    with report.timed("shift_section", sample=sample, mode="numeric", tolerance=residual_tol) as out:
        forms = _e_forms(arr)
        _, level = section_coordinates(basis, z, kappa, cycle, tol=tol, detail=True)
        r = flat_residual(basis, lambda zz: shifted_section_coordinates(basis, zz, kappa, cycle, level=level,
                                                                       forms=forms),
                          z, kap - 1, step)
        out["ok"] = r < residual_tol
        out["residual"] = r
        out["witness"] = {"kappa": kap - 1, "level": level}
    return report
