import numpy as np
import pytest

from berwald import flow as fl
from berwald import metric as mt


def test_euclidean_straight_line(euclid):
    tr = fl.integrate_geodesic(euclid, [0, 0, 1.0, 0], 1.0, 0.1)
    np.testing.assert_allclose(tr.endpoint, [1.0, 0, 1.0, 0], atol=1e-14)
    assert not tr.exited and len(tr.t) == 11


@pytest.fixture(scope="module")
def sphere_run():
    return fl.integrate_geodesic(mt.catalog_entry("sphere"), [0.1, 0, 1.0, 0], 1.0, 1e-3, record_every=10)


def test_sphere_F_conserved(sphere_run):
    rep = fl.first_integral_report(sphere_run, "F")
    assert rep["relative_drift"] < 1e-8
    assert not sphere_run.exited and sphere_run.t[-1] == pytest.approx(1.0)


def test_sphere_monitors(sphere_run):
    assert fl.first_integral_report(sphere_run, "K")["max_drift"] < 1e-10
    assert np.max(np.abs(sphere_run.monitors["Fscal"])) < 1e-12
    rep = fl.first_integral_report(sphere_run, "F")
    assert rep["chain_rule_residual"] < 1e-6


def test_funk_fourth_order(funk):
    r = fl.convergence_ratio(funk, [0.1, 0, 0.3, 0.2], 1.0, 0.1)
    assert r["ratio"] > 8


def test_funk_truncation_estimate(funk):
    tr = fl.integrate_geodesic(funk, [0.1, 0, 0.3, 0.2], 1.0, 0.05)
    rep = fl.first_integral_report(tr, "F", spec=funk)
    assert rep["truncation_estimate"] > 0
    assert rep["max_drift"] < 1e-5


def test_leaving_the_domain(sphere):
    tr = fl.integrate_geodesic(sphere, [0.1, 0, 1.0, 0], 2.0, 0.01, monitors=False)
    assert tr.exited
    assert 0.9 < tr.t[-1] < 2.0
    assert sphere.domain.contains(tr.states).all()


def test_csv_layout(euclid):
    tr = fl.integrate_geodesic(euclid, [0, 0, 0.6, 0.8], 0.2, 0.1)
    lines = tr.to_csv().splitlines()
    assert lines[0] == ",".join(fl.CSV_COLUMNS)
    assert len(lines) == 1 + 3
    assert [float(v) for v in lines[-1].split(",")][:5] == pytest.approx([0.2, 0.12, 0.16, 0.6, 0.8])


@pytest.mark.parametrize("kwargs", [
    {"dt": 0.0}, {"dt": -0.1}, {"dt": 0.3}, {"t_end": -1.0}, {"record_every": 0},
])
def test_invalid_arguments(euclid, kwargs):
    args = {"t_end": 1.0, "dt": 0.1, "record_every": 1, **kwargs}
    with pytest.raises(fl.FlowError):
        fl.integrate_geodesic(euclid, [0, 0, 1.0, 0], **args)


def test_bad_start_point(funk):
    with pytest.raises(mt.OutsideDomainError):
        fl.integrate_geodesic(funk, [0.9, 0, 1.0, 0], 1.0, 0.1)
    with pytest.raises(KeyError):
        fl.first_integral_report(fl.integrate_geodesic(funk, [0, 0, 1.0, 0], 0.2, 0.1), "nope")
