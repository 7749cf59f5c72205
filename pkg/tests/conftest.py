import numpy as np
import pytest

from amplituder.harness import prepare
from amplituder.symbols import MatrixPolynomial, PolynomialNonlinearity

D_PARAM = 0.25
K_PARAM = 0.75


def swift_hohenberg_symbol(k=1.0):
    # -(z^2 + k^2)^2 in z = i xi, which is -(xi^2 - k^2)^2
    return MatrixPolynomial.scalar(1, {(4,): -1.0, (2,): -2.0 * k**2, (0,): -(k**4)})


def cel_symbol(d=D_PARAM, kp=K_PARAM):
    return MatrixPolynomial.from_entries(
        2,
        2,
        [
            ((2, 0), 0, 0, d, 0),
            ((0, 2), 0, 0, d, 0),
            ((0, 0), 0, 0, kp, 0),
            ((0, 0), 0, 1, -1, 0),
            ((0, 0), 1, 0, 1, 0),
            ((2, 0), 1, 1, 1, 0),
            ((0, 2), 1, 1, 1, 0),
            ((0, 0), 1, 1, -1, 0),
        ],
    )


def oscillatory_symbol(D=1.0):
    return MatrixPolynomial.from_entries(
        1, 2, [((2,), 0, 0, D, 0), ((0,), 0, 1, 1, 0), ((0,), 1, 0, -1, 0), ((2,), 1, 1, D, 0)]
    )


def cubic_scalar():
    return PolynomialNonlinearity(1, {(1,): 1.0, (3,): -1.0})


def cubic_first_component():
    return PolynomialNonlinearity.from_entries(2, [((1, 0), 0, 1.0), ((3, 0), 0, -1.0)])


@pytest.fixture(scope="session")
def sh_model():
    return prepare(swift_hohenberg_symbol(), cubic_scalar(), [1.0], 0.0)


@pytest.fixture(scope="session")
def cel_model():
    return prepare(cel_symbol(), cubic_first_component(), [0.0, 1.0], 0.0)


@pytest.fixture(scope="session")
def osc_model():
    return prepare(oscillatory_symbol(), cubic_first_component(), [0.0], 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_nonlinearity(rng, m, degree=5, terms=5):
    entries = []
    for _ in range(terms):
        e = tuple(int(x) for x in rng.multinomial(int(rng.integers(1, degree + 1)), [1 / m] * m))
        entries.append((e, int(rng.integers(0, m)), float(rng.standard_normal())))
    return PolynomialNonlinearity.from_entries(m, entries)


def random_carriers(rng, m, n_pos=None):
    n_pos = n_pos or int(rng.integers(1, 3))
    js = rng.choice(np.arange(1, 4), size=n_pos, replace=False)
    carriers = []
    for j in js:
        w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        carriers.append((int(j), w))
    return carriers + [(-j, np.conj(w)) for j, w in carriers]


ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
