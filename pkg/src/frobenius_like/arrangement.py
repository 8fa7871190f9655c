"""Families of affine hyperplanes moving parallel to themselves.

Hyperplane ``i`` at parameter ``z`` is ``{t : sum_j b[i][j] t_j + z_i = 0}``.
Indices are 0-based throughout the package.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InputError, SingularityError
from .exact import LinearForm, Matrix, det, format_scalar, parse_scalar
from .report import VerificationReport


def sort_sign(tup: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on repeats."""
    tup = list(tup)
    if len(set(tup)) != len(tup):
        return 0, tuple(sorted(tup))
    sign = 1
    for i in range(len(tup)):
        for j in range(i + 1, len(tup)):
            if tup[i] > tup[j]:
                sign = -sign
    return sign, tuple(sorted(tup))


class Arrangement:
    """The data ``(n, k, b, a)`` plus the table of k-minors of ``b``.

    ``minor_overrides`` replaces entries of the minor table after the
    genericity check; it exists only so that the Pluecker self-test can be
    fed a corrupted table.
    """

    def __init__(self, b: Sequence[Sequence], a: Sequence | None = None, *, minor_overrides=None):
        rows = [tuple(parse_scalar(x) for x in row) for row in b]
        if not rows:
            raise InputError("b must have at least one row")
        k = len(rows[0])
        if any(len(r) != k for r in rows):
            raise InputError("b rows must all have length k")
        n = len(rows)
        if not n > k >= 1:
            raise InputError(f"need n > k >= 1, got n={n}, k={k}")
        weights = tuple(parse_scalar(x) for x in (a if a is not None else [1] * n))
        if len(weights) != n:
            raise InputError(f"expected {n} weights, got {len(weights)}")
        zero = [i for i, x in enumerate(weights) if x == 0]
        if zero:
            raise InputError(f"weights must be nonzero, a[{zero[0]}] = 0")
        if sum(weights) == 0:
            raise InputError("the weight sum |a| must be nonzero")

        self.n, self.k = n, k
        self.b = tuple(rows)
        self.a = weights
        self.a_sum = sum(weights, Fraction(0))
        self._minors: dict[tuple[int, ...], Fraction] = {}
        for subset in itertools.combinations(range(n), k):
            d = det(Matrix([rows[i] for i in subset]))
            if d == 0:
                raise SingularityError(f"vanishing minor d{subset}", witness=subset)
            self._minors[subset] = d
        self.corrupted = False
        for subset, value in (minor_overrides or {}).items():
            sign, key = sort_sign(subset)
            if sign == 0 or key not in self._minors:
                raise InputError(f"bad minor override index {subset}")
            self._minors[key] = sign * parse_scalar(value)
            self.corrupted = True

    def __repr__(self):
        return f"Arrangement(n={self.n}, k={self.k})"

    @property
    def unit_weights(self) -> bool:
        return all(x == 1 for x in self.a)

    def _check_indices(self, tup: Iterable[int]) -> tuple[int, ...]:
        tup = tuple(tup)
        for i in tup:
            if not (isinstance(i, int) and 0 <= i < self.n):
                raise InputError(f"index {i!r} out of range 0..{self.n - 1}")
        return tup

    def minor(self, tup: Sequence[int]) -> Fraction:
        """Signed minor of the rows listed in ``tup`` (0 on repeated indices)."""
        tup = self._check_indices(tup)
        if len(tup) != self.k:
            raise InputError(f"minor needs {self.k} indices, got {len(tup)}")
        sign, key = sort_sign(tup)
        if sign == 0:
            return Fraction(0)
        return sign * self._minors[key]

    def subsets(self, size: int | None = None, exclude: Iterable[int] = ()):
        size = self.k if size is None else size
        pool = [i for i in range(self.n) if i not in set(exclude)]
        return itertools.combinations(pool, size)

    def discriminant_form(self, tup: Sequence[int]) -> LinearForm:
        """``f_T(z) = sum_l (-1)^l d_{T - t_l} z_{t_l}`` for a (k+1)-tuple T.

        Alternating in the order of T, so ordered tuples are accepted.
        """
        tup = self._check_indices(tup)
        if len(tup) != self.k + 1:
            raise InputError(f"discriminant form needs {self.k + 1} indices")
        if len(set(tup)) != len(tup):
            raise InputError(f"repeated index in {tup}")
        coeffs = [Fraction(0)] * self.n
        for l, t in enumerate(tup):
            rest = tup[:l] + tup[l + 1:]
            coeffs[t] += (-1) ** l * self.minor(rest)
        return LinearForm(tuple(coeffs))

    def discriminant_forms(self) -> dict[tuple[int, ...], LinearForm]:
        cache = self.__dict__.setdefault("_dforms", {})
        if not cache:
            for T in self.subsets(self.k + 1):
                cache[T] = self.discriminant_form(T)
        return cache

    def on_discriminant(self, z: Sequence) -> tuple[bool, list[tuple[int, ...]]]:
        if len(z) != self.n:
            raise InputError(f"z needs {self.n} coordinates")
        witness = [T for T, f in self.discriminant_forms().items() if f(z) == 0]
        return bool(witness), witness

    def require_generic(self, z: Sequence) -> None:
        hit, witness = self.on_discriminant(z)
        if hit:
            raise SingularityError(
                f"z lies on the discriminant (f{witness[0]} = 0)", witness=[list(T) for T in witness]
            )

    def hyperplane_form(self, i: int, z: Sequence) -> LinearForm:
        """``t -> sum_j b[i][j] t_j + z_i`` as a form in the k coordinates t."""
        self._check_indices([i])
        return LinearForm(self.b[i], Fraction(z[i]))

    def random_point(self, rng: random.Random, lo: int = -20, hi: int = 20, attempts: int = 1000):
        """Integer point off the discriminant, by rejection sampling."""
        for _ in range(attempts):
            z = tuple(Fraction(rng.randint(lo, hi)) for _ in range(self.n))
            if not self.on_discriminant(z)[0]:
                return z
        raise SingularityError(f"no point off the discriminant after {attempts} attempts")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "b": [[format_scalar(x) for x in row] for row in self.b],
            "a": [format_scalar(x) for x in self.a],
        }


def plucker_check(arr: Arrangement, *, full_limit: int = 8, samples: int = 2000,
                  seed: int = 0) -> VerificationReport:
    """Verify the quadratic Pluecker relations on the stored minor table.

    For ``n <= full_limit`` all increasing (k+1)-tuples j and (k-1)-tuples i
    are enumerated (tuples with repeats satisfy the relation trivially);
    above that a seeded random sample is drawn.
    """
    report = VerificationReport()
    k, n = arr.k, arr.n

    def residual(js, is_):
        total = Fraction(0)
        for m in range(k + 1):
            rest = js[:m] + js[m + 1:]
            total += (-1) ** m * arr.minor(rest) * arr.minor((js[m],) + is_)
        return total

    if n <= full_limit:
        pairs = itertools.product(arr.subsets(k + 1), arr.subsets(k - 1))
    else:
        rng = random.Random(seed)
        pairs = ((tuple(sorted(rng.sample(range(n), k + 1))), tuple(sorted(rng.sample(range(n), k - 1))))
                 for _ in range(samples))
    with report.timed("plucker") as out:
        count = 0
        bad = None
        for js, is_ in pairs:
            count += 1
            r = residual(js, is_)
            if r != 0:
                bad = {"j": list(js), "i": list(is_), "residual": r}
                break
        out["ok"] = bad is None
        out["witness"] = bad if bad else {"relations": count}
        out["residual"] = bad["residual"] if bad else Fraction(0)
    return report
