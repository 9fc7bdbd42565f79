import pytest
from hypothesis import given
from hypothesis import strategies as st

from thz_iscap.harvest import (
    DomainError,
    LinearHarvester,
    NonlinearHarvester,
    conversion_efficiency,
    dc_output,
)

NL = NonlinearHarvester()


def rational_form(x, a0=0.3929, b0=0.01675, c0=0.04401):
    return (a0 * x + b0) / (x + c0) - b0 / c0


def test_nonlinear_constants():
    assert NL.saturation == pytest.approx(0.01230, abs=1e-5)
    assert NL.small_signal_efficiency == pytest.approx(0.2796, abs=1e-4)


@pytest.mark.parametrize("x", [1e-4, 1e-2, 0.05, 1.0, 10.0])
def test_matches_rational_form(x):
    assert dc_output(x, NL) == pytest.approx(rational_form(x), rel=1e-12)


def test_zero_and_tiny_inputs():
    assert dc_output(0.0, NL) == 0.0
    # The rearranged form keeps full precision where the textbook one cancels.
    assert dc_output(1e-20, NL) == pytest.approx(NL.small_signal_efficiency * 1e-20, rel=1e-12)


def test_saturation_limit():
    assert dc_output(1e6, NL) == pytest.approx(NL.saturation, rel=1e-3)


def test_linear_model():
    lin = LinearHarvester(0.5)
    assert dc_output(2.0, lin) == 1.0
    assert conversion_efficiency(3.0, lin) == 0.5
    with pytest.raises(DomainError):
        LinearHarvester(0.0)
    with pytest.raises(DomainError):
        LinearHarvester(1.5)


def test_validation():
    with pytest.raises(DomainError):
        dc_output(-1.0, NL)
    with pytest.raises(DomainError):
        conversion_efficiency(0.0, NL)
    with pytest.raises(DomainError):
        NonlinearHarvester(c0=0.0)
    with pytest.raises(DomainError):
        NonlinearHarvester(a0=0.1)


def test_vectorised():
    import numpy as np

    x = np.array([0.0, 0.01, 1.0])
    out = dc_output(x, NL)
    assert out.shape == (3,)
    assert out[0] == 0.0


powers = st.floats(0.0, 1e3)


@given(powers, powers)
def test_monotone(x, y):
    lo, hi = sorted((x, y))
    assert dc_output(lo, NL) <= dc_output(hi, NL)


@given(powers, powers)
def test_concave(x, y):
    mid = 0.5 * (x + y)
    assert dc_output(mid, NL) >= 0.5 * (dc_output(x, NL) + dc_output(y, NL)) - 1e-15


@given(powers)
def test_bounded(x):
    assert 0.0 <= dc_output(x, NL) < NL.saturation


@given(st.floats(1e-6, 10.0))
def test_derivative_matches_finite_difference(x):
    h = 1e-6 * max(x, 1e-3)
    fd = (NL.dc_output(x + h) - NL.dc_output(x - h)) / (2 * h)
    assert NL.derivative(x) == pytest.approx(fd, rel=1e-5)


@given(st.floats(1e-9, 1e3))
def test_efficiency_decreasing(x):
    assert conversion_efficiency(2 * x, NL) <= conversion_efficiency(x, NL)
