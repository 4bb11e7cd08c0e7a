"""Classical and generalized Yor integrals, Hartman-Watson density."""

import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralindex import specfun, yor
from spectralindex.transforms import IndexWhittaker, KontorovichLebedev, MehlerFock

KL = KontorovichLebedev()
MF = MehlerFock(0.3)

# 30-digit mpmath evaluations of the elementary integral
THETA_REF = [(1.0, 1.0, 0.73907653130323192), (0.5, 2.0, 4.0453290901483014), (2.0, 0.5, 0.22126643512441946)]


@pytest.mark.parametrize("t,x,ref", THETA_REF)
@pytest.mark.parametrize("rep", ["elementary", "spectral"])
def test_theta_reference(t, x, ref, rep):
    assert abs(yor.yor_theta(t, x, rep) / ref - 1) < 1e-7


def test_theta_representations_agree():
    a = yor.yor_theta(1.0, 1.0, "elementary")
    b = yor.yor_theta(1.0, 1.0, "spectral")
    assert abs(a - b) <= 1e-6 * b


def test_theta_is_half_kl_vartheta_at_half_time():
    # inverse KL transform of exp(-tau^2 t / 2) / 2
    for t, x in [(2.0, 1.0), (1.0, 0.5), (0.6, 3.0)]:
        assert abs(yor.yor_theta(t, x) / (0.5 * yor.yor_generalized(KL, 0.5 * t, x)) - 1) < 1e-10


def test_theta_decays_in_time():
    assert yor.yor_theta(10.0, 1.0) < yor.yor_theta(1.0, 1.0)


def test_vartheta_mf_reference():
    assert abs(yor.yor_generalized(MF, 1.0, 2.0) / 0.18613033651860272 - 1) < 1e-9
    assert abs(yor.yor_generalized(MF, 1.0, 2.0, "elementary") / 0.18613033651860272 - 1) < 1e-6


def test_vartheta_iw_reference():
    assert abs(yor.yor_generalized(IndexWhittaker(-0.5), 1.0, 1.0) / 0.29099962858394597 - 1) < 1e-9


def test_iw_zero_matches_kl():
    a = yor.yor_generalized(IndexWhittaker(0.0), 1.0, 1.0)
    b = yor.yor_generalized(KL, 1.0, 1.0)
    assert abs(a / b - 1) < 1e-6


def test_mf_long_time_damping():
    assert 0.0 < yor.yor_generalized(MF, 50.0, 2.0) < 1e-8


def test_iw_has_no_elementary_form():
    with pytest.raises(yor.UnsupportedRepresentationError):
        yor.yor_generalized(IndexWhittaker(-0.5), 1.0, 1.0, "elementary")


def test_invalid_requests():
    with pytest.raises(ValueError):
        yor.yor_theta(0.0, 1.0)
    with pytest.raises(ValueError):
        yor.yor_theta(1.0, 1.0, "series")
    with pytest.raises(ValueError):
        yor.yor_generalized(MF, 1.0, 0.9)


# mpmath, 120 digits, real-axis integral
THETA_SMALL_T_REF = {
    (0.2, 1.0): 1.3424255550756085e-06,
    (0.1, 1.0): 1.4437466110179508e-24,
    (0.1, 2.0): 2.0423056859080887e-12,
}


def test_small_time_theta_uses_deformed_path():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vals = {key: yor.yor_theta(*key, "elementary") for key in THETA_SMALL_T_REF}
        tiny = yor.yor_theta(0.03, 1.0, "elementary")
    for key, ref in THETA_SMALL_T_REF.items():
        assert abs(vals[key] - ref) <= 1e-12 * ref
    assert 0.0 < tiny < 1e-150


def test_small_time_mf_elementary_falls_back():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        val = yor.yor_generalized(MF, 0.03, 2.0, "elementary")
        ref = yor.yor_generalized(MF, 0.03, 2.0, "spectral")
    assert any("falls back" in str(w.message) or "oscillates" in str(w.message) for w in caught)
    assert val == ref


@settings(max_examples=12, deadline=None)
@given(t=st.floats(0.3, 3.0), x=st.floats(1.1, 4.0))
def test_mf_representations_agree(t, x):
    a = yor.yor_generalized(MF, t, x, "spectral")
    b = yor.yor_generalized(MF, t, x, "elementary")
    assert abs(a - b) <= 1e-6 * abs(a)


def test_hartman_watson_positive_on_grid():
    for t in np.linspace(0.2, 5.0, 9):
        for x in (0.5, 1.0, 2.0):
            assert yor.hartman_watson_density(float(t), x) > 0


def test_hartman_watson_large_argument_finite():
    v = yor.hartman_watson_density(1.0, 10.0)
    assert math.isfinite(v) and v > 0
    near = yor.hartman_watson_density(1.0, 10.0 + 1e-6)
    assert abs(near - v) < 1e-5 * v


def test_hartman_watson_reference():
    assert abs(yor.hartman_watson_density(1.0, 1.0) / 0.58375835277664684 - 1) < 1e-8


def test_hartman_watson_normalized():
    assert abs(yor.hartman_watson_mass(1.0) - 1.0) < 1e-3


@pytest.mark.parametrize("fam,x", [(KL, 1.0), (MF, 2.0), (IndexWhittaker(-0.5), 1.0)])
def test_yor_pde_residual(fam, x):
    assert yor.yor_pde_residual(fam, 1.0, x) < 1e-3


def test_evolution_equation():
    assert yor.evolution_residual(KL, 0.5, 0.5, 1.0) < 1e-4


def test_yor_eval_dispatch():
    req = yor.YorEval(yor.CLASSICAL_THETA, 1.0, 1.0, "elementary")
    assert abs(req.value() / 0.73907653130323192 - 1) < 1e-7


def test_csv_rows():
    buf = io.StringIO()
    yor.write_yor_csv(buf, MF, [1.0], [2.0], ["spectral", "elementary"])
    lines = buf.getvalue().splitlines()
    assert len(lines) == 3
    assert "spectral" in lines[1] and "elementary" in lines[2]
