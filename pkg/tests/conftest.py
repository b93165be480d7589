import mpmath as mp
import numpy as np
import pytest

from berwald import metric as mt

MP_LIB = {"sqrt": mp.sqrt, "exp": mp.exp, "log": mp.log, "sin": mp.sin, "cos": mp.cos}

CATALOG_CASES = [
    ("euclidean", {}), ("sphere", {}), ("hyperbolic", {}),
    ("randers-flat", {"b": 0.25}), ("randers-flat", {"b": 0.5}), ("funk", {}),
]


def case_id(case):
    name, params = case
    return name + "".join(f"-{k}{v}" for k, v in params.items())


def fd_partial(fn, point, multi_index, dps=30):
    """High-precision central finite-difference partial of a scalar function."""
    with mp.workdps(dps):
        return float(mp.diff(fn, [mp.mpf(float(v)) for v in point], tuple(multi_index)))


def mp_F2(spec):
    return lambda *q: spec.evaluate(list(q), MP_LIB) ** 2


def mp_scalar(text, params=None):
    """An mpmath callable of (x1, x2, y1, y2) from DSL text."""
    from berwald import dsl

    tree = dsl.parse_expression(text, params or {})

    def f(*q):
        env = dict(zip(dsl.COORDINATES, q))
        env.update(params or {})
        return dsl.evaluate(tree, env, MP_LIB)
    return f


@pytest.fixture(scope="session")
def funk():
    return mt.catalog_entry("funk")


@pytest.fixture(scope="session")
def sphere():
    return mt.catalog_entry("sphere")


@pytest.fixture(scope="session")
def euclid():
    return mt.catalog_entry("euclidean")


@pytest.fixture(scope="session")
def randers():
    return mt.catalog_entry("randers-flat", b=0.5)


@pytest.fixture(scope="session")
def hyperbolic():
    return mt.catalog_entry("hyperbolic")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
