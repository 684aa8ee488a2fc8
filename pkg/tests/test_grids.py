import numpy as np
import pytest

from whlab.grids import Circle, HalfLine, Line, grid_from_dict


def test_half_line_cells():
    g = HalfLine(4.0, 8)
    assert g.h == 0.5
    assert np.allclose(g.midpoints(), 0.25 + 0.5 * np.arange(8))


def test_line_midpoints_symmetric():
    g = Line(3.0, 12)
    x = g.midpoints()
    assert np.allclose(x, -x[::-1])
    assert np.all(x[g.positive_slice()] > 0)


def test_line_frequencies_match_exponential_convention():
    g = Line(2.0, 16)
    x = g.midpoints()
    xi = g.frequencies()
    # the DFT of exp(-i xi_k x) picks out bin k under the e^{+i xi x} convention
    for k in (0, 1, 5, 15):
        f = np.exp(-1j * xi[k] * x)
        spec = np.fft.fft(f)
        assert np.argmax(np.abs(spec)) == k


@pytest.mark.parametrize("bad", [(1.0, 1), (0.0, 4), (-1.0, 4)])
def test_half_line_validation(bad):
    with pytest.raises(ValueError):
        HalfLine(*bad)


def test_line_needs_even_count():
    with pytest.raises(ValueError):
        Line(1.0, 7)


def test_grid_dict_roundtrip():
    for g in (HalfLine(40.0, 1024), Line(5.0, 64)):
        assert grid_from_dict(g.describe()) == g
    with pytest.raises(ValueError):
        grid_from_dict({"type": "torus"})


def test_circle_points():
    c = Circle(8)
    assert np.allclose(np.abs(c.points()), 1)
    assert c.points()[2] == pytest.approx(1j)
