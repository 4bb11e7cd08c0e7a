"""Heat kernels, resolvents and kernel comparison."""

import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralindex import heat, specfun
from spectralindex.transforms import IndexWhittaker, KontorovichLebedev, MehlerFock

KL = KontorovichLebedev()
IW = IndexWhittaker(-0.5)
MF = MehlerFock(0.3)

# frozen from 30-digit mpmath tau integrals
HEAT_REF = [
    (KL, 1.0, 1.0, 2.0, 0.030603604011651839),
    (IW, 1.0, 1.0, 2.0, 0.0085604509986748613),
    (MF, 1.0, 1.5, 2.5, 0.11426815563542775),
]


@pytest.mark.parametrize("fam,t,x,y,ref", HEAT_REF)
def test_heat_kernel_reference(fam, t, x, y, ref):
    assert abs(heat.heat_kernel(fam, t, x, y) / ref - 1) < 1e-9


def test_symmetry_is_exact():
    assert heat.heat_kernel(KL, 1.0, 1.0, 2.0) == heat.heat_kernel(KL, 1.0, 2.0, 1.0)


def test_symmetry_under_independent_ordering():
    grid = heat.heat_kernel_matrix(IW, 0.7, np.array([0.8, 2.5]), np.array([0.8, 2.5]))
    assert abs(grid[0, 0, 1] - grid[0, 1, 0]) <= 1e-12 * grid[0, 0, 1]


def test_lebesgue_measure_flag():
    pr = heat.heat_kernel(KL, 1.0, 1.0, 2.0)
    assert abs(heat.heat_kernel(KL, 1.0, 1.0, 2.0, measure="lebesgue") - pr / 2.0) < 1e-15


def test_mf_half_closed_form():
    t, xi, chi = 0.5, 1.0, 1.5
    x, y = math.cosh(xi), math.cosh(chi)
    ref = (math.exp(-t / 4 - (xi * xi + chi * chi) / (4 * t)) * math.sinh(xi * chi / (2 * t))
           / (math.sqrt(math.pi * t) * math.sqrt(math.sinh(xi) * math.sinh(chi))))
    assert abs(float(heat.mf_half_closed_form(t, x, y)) / ref - 1) < 1e-13
    assert abs(heat.heat_kernel(MehlerFock(0.5), t, x, y) / ref - 1) < 1e-6


def test_kl_total_mass_below_one():
    m = heat.total_mass(KL, 1.0, 1.0)
    assert 0.0 < m < 1.0


def test_mf_zero_is_conservative():
    assert abs(heat.total_mass(MehlerFock(0.0), 1.0, 2.0) - 1.0) < 1e-4


@pytest.mark.parametrize("fam,x", [(KL, 1.0), (MehlerFock(0.5), math.cosh(1.0))])
def test_chapman_kolmogorov(fam, x):
    assert heat.chapman_kolmogorov_residual(fam, 0.4, 0.6, x, x) < 1e-4


def test_chapman_kolmogorov_swap_symmetry():
    a = heat.chapman_kolmogorov_residual(KL, 0.3, 0.7, 1.0, 2.0)
    b = heat.chapman_kolmogorov_residual(KL, 0.7, 0.3, 2.0, 1.0)
    assert abs(a - b) < 1e-10


@pytest.mark.parametrize("fam,x,y", [(KL, 1.0, 2.0), (IW, 1.0, 1.0), (MF, 2.0, 3.0)])
def test_pde_residual(fam, x, y):
    assert heat.pde_residual(fam, 1.0, x, y) < 1e-3


def test_pde_residual_requires_time_margin():
    with pytest.raises(ValueError):
        heat.pde_residual(KL, 1e-3, 1.0, 1.0)


def test_resolvent_kl_product():
    ref = specfun.bessel_i(1.0, 1.0) * specfun.bessel_k(1.0, 2.0)
    assert abs(heat.resolvent_kernel(KL, -1.0, 1.0, 2.0) / ref - 1) < 1e-12


@pytest.mark.parametrize("fam,x,y", [(KL, 1.0, 2.0), (IW, 0.7, 1.9), (MF, 1.5, 2.5)])
def test_resolvent_symmetric(fam, x, y):
    a = heat.resolvent_kernel(fam, -0.8, x, y)
    b = heat.resolvent_kernel(fam, -0.8, y, x)
    assert abs(a - b) <= 1e-12 * abs(a)


def test_resolvent_equals_laplace_transform():
    a = heat.laplace_transform_heat(KL, -1.0, 1.0, 2.0)
    b = heat.resolvent_kernel(KL, -1.0, 1.0, 2.0)
    assert abs(a / b - 1) < 1e-4


def test_resolvent_rejects_spectrum():
    with pytest.raises(ValueError):
        heat.resolvent_kernel(KL, 0.5, 1.0, 2.0)


def test_monotonicity_mf():
    assert heat.monotonicity_gap((MehlerFock(0.2), MehlerFock(0.6)), 1.0, 2.0, 3.0) >= -1e-8
    assert abs(heat.monotonicity_gap((MF, MF), 1.0, 2.0, 3.0)) < 1e-12


def test_monotonicity_order_violation():
    with pytest.raises(ValueError):
        heat.monotonicity_gap((MehlerFock(0.6), MehlerFock(0.2)), 1.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        heat.monotonicity_gap((IndexWhittaker(-1.0), IndexWhittaker(-0.5)), 1.0, 1.0, 2.0)


def test_small_time_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        heat.heat_kernel_matrix(KL, 5e-4, np.array([1.0]), np.array([1.0]))
    assert any(issubclass(w.category, specfun.AccuracyWarning) for w in caught)


def test_invalid_time_rejected():
    with pytest.raises(ValueError):
        heat.heat_kernel(KL, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        heat.heat_kernel(KL, 1.0, 1.0, 1.0, measure="counting")


def test_operator_coefficients():
    op = heat.operator_for(IW)
    x = np.array([0.5, 2.0])
    assert np.allclose(op.killing_rate(x), (x + 0.5) ** 2)
    op.check(x)
    with pytest.raises(ValueError):
        heat.operator_for(MF).check([0.5])


@settings(max_examples=15, deadline=None)
@given(t=st.floats(0.2, 3.0), lx=st.floats(-1.0, 1.5), ly=st.floats(-1.0, 1.5))
def test_kl_kernel_positive_and_symmetric(t, lx, ly):
    x, y = math.exp(lx), math.exp(ly)
    a = heat.heat_kernel(KL, t, x, y)
    assert a > 0
    assert a == heat.heat_kernel(KL, t, y, x)


def test_csv_dump():
    buf = io.StringIO()
    heat.write_heat_csv(buf, KL, [1.0], [1.0], [1.0, 2.0])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x,y,value"
    assert len(lines) == 3
    assert abs(float(lines[2].split(",")[3]) / 0.030603604011651839 - 1) < 1e-9
