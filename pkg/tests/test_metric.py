import numpy as np
import pytest

from berwald import dsl
from berwald import metric as mt
from berwald.jets import TangentPoint

from conftest import CATALOG_CASES, case_id, fd_partial, mp_F2


def P(x, y):
    return TangentPoint(tuple(x), tuple(y))


def test_parse_metric_trees():
    e = mt.parse_metric("sqrt(y1^2 + y2^2)")
    assert e.evaluate(np.array([0, 0, 3.0, 4.0])) == pytest.approx(5.0)
    r = mt.parse_metric("sqrt(y1^2+y2^2) + 0.5*y1")
    assert r.evaluate(np.array([0, 0, 1.0, 0])) == pytest.approx(1.5)
    with pytest.raises(dsl.DSLSyntaxError) as err:
        mt.parse_metric("sqrt(y1^2 +")
    assert "end of input" in str(err.value)


def test_eval_F2_examples(euclid, randers, funk):
    assert mt.eval_F2(euclid, P((0, 0), (3, 4)), 2).value == pytest.approx(25.0)
    F2 = mt.eval_F2(randers, P((0, 0), (1, 0)), 2)
    assert F2.value == pytest.approx(2.25)
    assert mt.eval_F(randers, np.array([[0, 0, 1.0, 0]]), 1).value[0] == pytest.approx(1.5)
    assert mt.eval_F2(funk, P((0, 0), (1, 0)), 2).value == pytest.approx(1.0)


def test_euclidean_tensors(euclid):
    p = P((0.3, -1.2), (0.4, 2.0))
    ft = mt.fundamental_tensor(euclid, p)
    np.testing.assert_allclose(ft.g, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(mt.cartan_tensor(euclid, p).C, 0, atol=1e-14)


def test_riemannian_cartan_vanishes(rng):
    spec = mt.parse_metric("sqrt((2 + sin(x1)) * y1^2 + exp(x2) * y2^2)")
    pts = np.column_stack([rng.uniform(-0.9, 0.9, (20, 2)), rng.normal(size=(20, 2))])
    assert np.max(np.abs(mt.cartan_tensor(spec, pts).C)) < 1e-12


def test_randers_tensors_vs_finite_differences(randers):
    p = np.array([0.0, 0.0, 1.0, 0.0])
    f = mp_F2(randers)
    ft = mt.fundamental_tensor(randers, p)
    C = mt.cartan_tensor(randers, p).C
    for i in range(2):
        for j in range(2):
            mi = [0, 0, 0, 0]
            mi[2 + i] += 1
            mi[2 + j] += 1
            assert ft.g[i, j] == pytest.approx(0.5 * fd_partial(f, p, mi), abs=1e-6)
            for k in range(2):
                mk = list(mi)
                mk[2 + k] += 1
                assert C[i, j, k] == pytest.approx(0.25 * fd_partial(f, p, mk), abs=1e-6)
    np.testing.assert_allclose(ft.g @ ft.g_inv, np.eye(2), atol=1e-12)


def test_funk_second_partial_vs_finite_differences(funk):
    p = np.array([0.2, -0.1, 0.8, 0.3])
    ref = fd_partial(mp_F2(funk), p, (0, 0, 2, 0))
    assert mt.eval_F2(funk, p, 3).partial_value((0, 0, 2, 0)) == pytest.approx(ref, rel=1e-6)


def test_homogeneity_euclidean(euclid):
    res = mt.homogeneity_check(euclid, P((0.1, 0.2), (0.3, 1.0)))
    assert max(res.values()) < 1e-14


def test_homogeneity_funk(funk):
    res = mt.homogeneity_check(funk, P((0.3, 0.1), (0.7, -0.2)))
    assert set(res) == {"F", "K", "I", "J"}
    assert max(res.values()) < 1e-8


@pytest.mark.parametrize("case", CATALOG_CASES, ids=case_id)
def test_scaling(case, rng):
    spec = mt.catalog_entry(case[0], **case[1])
    x = rng.uniform(-0.45, 0.45, (30, 2))
    y = rng.normal(size=(30, 2))
    F1 = spec.evaluate(np.column_stack([x, y]))
    F2 = spec.evaluate(np.column_stack([x, 2 * y]))
    np.testing.assert_allclose(F2, 2 * F1, rtol=1e-12)


def test_catalog():
    rows = mt.catalog_listing()
    assert [r["name"] for r in rows] == ["euclidean", "sphere", "hyperbolic", "randers-flat", "funk"]
    assert all(r["domain"] for r in rows)
    assert rows[3]["params"] == {"b": {"default": 0.5}}
    with pytest.raises(KeyError):
        mt.catalog_entry("nope")
    with pytest.raises(KeyError):
        mt.catalog_entry("sphere", b=1.0)


def test_domain_errors(funk, euclid):
    with pytest.raises(mt.OutsideDomainError):
        mt.eval_F(funk, np.array([0.69, 0.69, 1.0, 0.0]), 2)
    with pytest.raises(mt.OutsideDomainError):
        mt.eval_F(euclid, np.array([0.0, 0.0, 0.0, 0.0]), 2)


def test_degenerate_metric_detected():
    spec = mt.parse_metric("sqrt(y1^2 - y2^2)", name="indef")
    with pytest.raises(mt.DegenerateMetricError, match="degenerate metric"):
        mt.fundamental_tensor(spec, P((0, 0), (1.0, 0.5)))
    with pytest.raises(mt.InvalidFinslerFunctionError):
        mt.fundamental_tensor(spec, P((0, 0), (0.5, 1.0)))


def test_metric_file_parsing():
    text = "# a comment\nname = tilted\nb = 0.2\nF = sqrt(y1^2 + y2^2) + b*y2  # Randers\ndomain = box(-1,1,-0.5,0.5) disk(0.9)\n"
    spec = mt.parse_metric_file(text)
    assert spec.name == "tilted"
    assert dict(spec.params) == {"b": 0.2}
    assert spec.domain == mt.Domain((-1, 1, -0.5, 0.5), 0.9)
    assert spec.evaluate(np.array([0, 0, 0, 1.0])) == pytest.approx(1.2)


@pytest.mark.parametrize("text,line,col", [
    ("F = sqrt(y1^2 +\n", 1, None),
    ("name = x\nF = y1 + * y2\n", 2, 10),
    ("name = x\nthis is wrong\n", 2, 1),
    ("b = abc\nF = y1\n", 1, 5),
    ("F = y1\ndomain = circle(1)\n", 2, None),
])
def test_metric_file_errors(text, line, col):
    with pytest.raises((mt.MetricFileError, dsl.DSLSyntaxError)) as e:
        mt.parse_metric_file(text)
    assert e.value.line == line
    if col is not None:
        assert e.value.column == col


def test_missing_F_line():
    with pytest.raises(mt.MetricFileError, match="F = "):
        mt.parse_metric_file("name = x\n")
