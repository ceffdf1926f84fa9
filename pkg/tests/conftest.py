import numpy as np
import pytest

from kcoop.sign_pattern import SignMatrix, parse_sign_matrix

# Worked examples used across the test modules.
WORKED = """
* 0 0 +
+ * + 0
0 0 * -
+ 0 - *
"""
SIGNED = """
* 0 0 +
- * - 0
0 0 * -
+ 0 - *
"""
A42 = """
* + 0 -
+ * + 0
0 + * +
- 0 + *
"""

ACCEPTANCE_LINES: list[str] = []


def sym(rows):
    return SignMatrix.from_rows(rows)


def empty_pattern(n):
    return SignMatrix.from_rows(
        [["*" if i == j else "0" for j in range(n)] for i in range(n)]
    )


def pattern_from_pairs(n, pairs):
    """Symmetric pattern from ``{(i, j): '+'|'-'}``, both directions set."""
    rows = [["*" if i == j else "0" for j in range(n)] for i in range(n)]
    for (i, j), s in pairs.items():
        rows[i][j] = rows[j][i] = s
    return SignMatrix.from_rows(rows)


def cycle_pattern(n, minus=()):
    pairs = {(i, (i + 1) % n): "+" for i in range(n)}
    for p in minus:
        pairs[p] = "-"
    return pattern_from_pairs(n, pairs)


def chain_pattern(n, minus=()):
    pairs = {(i, i + 1): "+" for i in range(n - 1)}
    for p in minus:
        pairs[p] = "-"
    return pattern_from_pairs(n, pairs)


@pytest.fixture
def worked():
    return parse_sign_matrix(WORKED)


@pytest.fixture
def signed():
    return parse_sign_matrix(SIGNED)


@pytest.fixture
def a42():
    return parse_sign_matrix(A42)


@pytest.fixture
def rng():
    return np.random.default_rng(20200320)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def numeric_instance(pattern, rng, low=0.5, high=2.0):
    """Random real matrix with the given off-diagonal sign pattern."""
    n = pattern.n
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                a[i, j] = rng.uniform(-2.0, 1.0)
                continue
            tok = pattern[i, j].token
            if tok in "+-":
                a[i, j] = (1.0 if tok == "+" else -1.0) * rng.uniform(low, high)
    return a


def populate_forced_zero(a, rng, magnitude=(1.0, 5.0)):
    """Copy of ``a`` with one entry at distance 2..n-2 from the diagonal set."""
    n = a.shape[0]
    spots = [(i, j) for i in range(n) for j in range(n) if 1 < abs(i - j) < n - 1]
    i, j = spots[rng.integers(len(spots))]
    out = a.copy()
    out[i, j] = rng.choice([-1.0, 1.0]) * rng.uniform(*magnitude)
    return out


# Lotka-Volterra system whose interaction matrix carries the WORKED pattern.
WORKED_LV = {
    "r": [1.0, 0.8, 1.2, 0.9],
    "A": [
        [-2.0, 0.0, 0.0, 0.4],
        [0.3, -1.5, 0.5, 0.0],
        [0.0, 0.0, -2.0, -0.4],
        [0.5, 0.0, -0.3, -1.8],
    ],
}
