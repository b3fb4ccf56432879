import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracstefan.gridfield import (Bump, Constant, DatumError, FarField, Field, Grid1D, Riemann, Tabulated,
                                  excess_mass, l1_local_distance, read_field_csv, sample_initial,
                                  write_field_csv)
from fracstefan.nonlinearity import StefanGraph


def test_cell_centred_window():
    g = Grid1D.from_window(-1.0, 1.0, 0.25)
    assert g.n == 8
    assert g.x_min == pytest.approx(-0.875)
    assert g.window == pytest.approx((-1.0, 1.0))
    assert g.is_symmetric()
    assert g.index_of(0.125) == 4


@pytest.mark.parametrize("args", [(-1.0, 1.0, 0.3), (0.0, 0.2, 0.1), (0.0, 1.0, -0.1)])
def test_bad_windows(args):
    with pytest.raises(ValueError):
        Grid1D.from_window(*args)


def test_riemann_cell_averages():
    g = Grid1D.from_window(-1.0, 1.0, 0.5)
    f = sample_initial(g, Riemann(2.0, -1.0))
    np.testing.assert_array_equal(f.values, [2.0, 2.0, -1.0, -1.0])
    # jump in the middle of a cell gives the average of the two states there
    f = sample_initial(g, Riemann(2.0, -1.0, 0.25), FarField(2.0, -1.0, 0.25))
    np.testing.assert_allclose(f.values, [2.0, 2.0, 0.5, -1.0])
    assert f.meta["rule"] == "cell_average"


def test_smooth_cell_averages_are_exact_for_polynomials():
    g = Grid1D.from_window(0.0, 1.0, 0.25)
    f = sample_initial(g, Bump(lambda x: x**3, (0.0, 1.0), 0.0))
    edges = np.linspace(0, 1, 5)
    exact = (edges[1:] ** 4 - edges[:-1] ** 4) / 4 / 0.25
    np.testing.assert_allclose(f.values, exact, rtol=1e-13)


def test_pointwise_rule():
    g = Grid1D.from_window(-2.0, 2.0, 0.5)
    d = Bump(lambda x: np.cos(np.pi * x / 2) ** 2, (-1.0, 1.0), 0.0, continuous=True)
    f = sample_initial(g, d, rule="pointwise")
    np.testing.assert_allclose(f.values, d(g.nodes))
    assert f.meta["rule"] == "pointwise"
    with pytest.raises(DatumError):
        sample_initial(g, Riemann(1.0, 0.0), rule="pointwise")


@pytest.mark.parametrize("datum, ff", [
    (Riemann(1.0, 0.0), FarField(0.0, 1.0)),
    (Riemann(1.0, 0.0, 5.0), FarField(1.0, 0.0, 5.0)),
    (Bump(np.sin, (-3.0, 3.0)), None),
    (Bump(np.sin, (-1.0, 1.0), 0.5), FarField(0.0, 0.0)),
    (Constant(1.0), FarField(1.0, 2.0)),
    (Tabulated((1.0, 2.0)), FarField(0.0, 0.0)),
])
def test_datum_errors(datum, ff):
    g = Grid1D.from_window(-2.0, 2.0, 0.5)
    with pytest.raises(DatumError):
        sample_initial(g, datum, ff)


def test_constant_and_tabulated():
    g = Grid1D.from_window(-1.0, 1.0, 0.5)
    np.testing.assert_array_equal(sample_initial(g, Constant(0.7)).values, 0.7)
    f = sample_initial(g, Tabulated((1.0, 2.0, 3.0, 4.0)), FarField(0.0, 0.0))
    np.testing.assert_array_equal(f.values, [1, 2, 3, 4])


def test_field_is_read_only():
    g = Grid1D.from_window(-1.0, 1.0, 0.5)
    f = Field(g, np.zeros(4), FarField.constant(0.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        Field(g, np.zeros(3), FarField.constant(0.0))


def test_excess_mass():
    g = Grid1D.from_window(-2.0, 2.0, 0.1)
    assert excess_mass(sample_initial(g, Riemann(2.0, -1.0))) == pytest.approx(0.0, abs=1e-12)
    d = Bump(lambda x: 1.0 - np.abs(x), (-1.0, 1.0), 0.0)
    assert excess_mass(sample_initial(g, d)) == pytest.approx(1.0, rel=1e-12)
    # the background splits at the far-field jump
    f = sample_initial(g, Riemann(1.0, 0.0, 0.05), FarField(1.0, 0.0, 0.05))
    assert excess_mass(f) == pytest.approx(0.0, abs=1e-12)


grid8 = Grid1D.from_window(-1.0, 1.0, 0.25)
fields = arrays(np.float64, 8, elements=st.floats(-5, 5, allow_nan=False)).map(
    lambda v: Field(grid8, v, FarField.constant(0.0)))


@given(fields, fields, fields)
def test_l1_distance_is_a_metric(a, b, c):
    K = (-1.0, 1.0)
    assert l1_local_distance(a, a, K) == 0.0
    assert l1_local_distance(a, b, K) == l1_local_distance(b, a, K)
    assert l1_local_distance(a, c, K) <= l1_local_distance(a, b, K) + l1_local_distance(b, c, K) + 1e-12


def test_l1_distance_errors():
    a = Field(grid8, np.zeros(8), FarField.constant(0.0))
    with pytest.raises(ValueError):
        l1_local_distance(a, a, (5.0, 6.0))
    other = Field(Grid1D.from_window(-1.0, 1.0, 0.5), np.zeros(4), FarField.constant(0.0))
    with pytest.raises(ValueError):
        l1_local_distance(a, other, (-1.0, 1.0))


@given(arrays(np.float64, 8, elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_csv_round_trip(tmp_path_factory, v):
    path = tmp_path_factory.mktemp("csv") / "f.csv"
    graph = StefanGraph.two_phase()
    write_field_csv(path, Field(grid8, v, FarField.constant(0.0)), graph)
    x, h, u = read_field_csv(path)
    np.testing.assert_array_equal(x, grid8.nodes)
    np.testing.assert_array_equal(h, v)
    np.testing.assert_array_equal(u, graph(v))
    assert path.read_text().splitlines()[0] == "x,h,u"
