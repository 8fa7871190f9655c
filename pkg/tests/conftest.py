import random
from fractions import Fraction

import pytest

from frobenius_like.algebra import CanonicalBasis
from frobenius_like.arrangement import Arrangement
from frobenius_like.errors import SingularityError

R1_B = [[1], [1], [1]]
R1_Z = (0, 1, 3)
R2_B = [[1, 0], [0, 1], [1, 1], [1, -1]]
R2_Z = (1, 2, 4, 8)


@pytest.fixture
def r1():
    return Arrangement(R1_B)


@pytest.fixture
def r2():
    return Arrangement(R2_B)


@pytest.fixture
def r1_basis(r1):
    return CanonicalBasis(r1)


@pytest.fixture
def r2_basis(r2):
    return CanonicalBasis(r2)


def random_arrangement(rng: random.Random, n: int, k: int, weights: str = "mixed") -> Arrangement:
    """Generic arrangement with small integer coefficients (rejection on vanishing minors)."""
    while True:
        b = [[rng.randint(-3, 3) for _ in range(k)] for _ in range(n)]
        if weights == "unit":
            a = [1] * n
        else:
            a = [Fraction(rng.choice([1, 2, 3, -1, -2]), rng.choice([1, 1, 2])) for _ in range(n)]
            if sum(a) == 0:
                continue
        try:
            return Arrangement(b, a)
        except SingularityError:
            continue


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[num])
