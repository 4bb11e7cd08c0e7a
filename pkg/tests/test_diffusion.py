"""Path simulation and Monte Carlo estimators."""

import io
import math
import warnings

import numpy as np
import pytest
from scipy.stats import norm

from spectralindex import diffusion, heat
from spectralindex.transforms import KontorovichLebedev, MehlerFock

KL = KontorovichLebedev()


@pytest.fixture(scope="module")
def gbm_bundle():
    return diffusion.simulate_gbm_paths(1.0, 1.0, 4, 100_000)


def test_gbm_log_moments(gbm_bundle):
    logs = np.log(gbm_bundle.values[:, -1])
    se = logs.std(ddof=1) / math.sqrt(logs.size)
    assert abs(logs.mean()) < 3 * se
    var = logs.var(ddof=1)
    # standard error of a sample variance of normals: var sqrt(2/(n-1))
    assert abs(var - 2.0) < 3 * var * math.sqrt(2.0 / (logs.size - 1))


def test_gbm_marginal_histogram(gbm_bundle):
    logs = np.log(gbm_bundle.values[:, -1])
    edges = np.linspace(-4.0, 4.0, 17)
    counts, _ = np.histogram(logs, bins=edges)
    probs = np.diff(norm.cdf(edges, scale=math.sqrt(2.0)))
    n = logs.size
    se = np.sqrt(probs * (1 - probs) / n)
    assert np.all(np.abs(counts / n - probs) <= 4 * se)


def test_gbm_bundle_shape_and_start(gbm_bundle):
    assert gbm_bundle.n_paths == 100_000 and gbm_bundle.n_steps == 4
    assert np.all(gbm_bundle.values[:, 0] == 1.0)
    assert np.allclose(gbm_bundle.times, [0, 0.25, 0.5, 0.75, 1.0])


def test_same_seed_same_paths():
    a = diffusion.simulate_gbm_paths(2.0, 0.5, 10, 5000, seed=7)
    b = diffusion.simulate_gbm_paths(2.0, 0.5, 10, 5000, seed=7)
    c = diffusion.simulate_gbm_paths(2.0, 0.5, 10, 5000, seed=8)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_paths_do_not_depend_on_request_size():
    # block-keyed streams: the first paths are the same whatever the total count
    small = diffusion.simulate_gbm_paths(1.0, 1.0, 8, 10)
    large = diffusion.simulate_gbm_paths(1.0, 1.0, 8, 9000)
    assert np.array_equal(small.values, large.values[:10])


def test_legendre_paths_stay_above_one():
    b = diffusion.simulate_legendre_paths(1.05, 1.0, 400, 10_000)
    assert float(b.values.min()) > 1.0
    assert np.all(b.values[:, 0] == 1.05)


def test_legendre_large_step_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        diffusion.simulate_legendre_paths(1.01, 1.0, 2, 50)
    assert any(issubclass(w.category, diffusion.StepSizeWarning) for w in caught)


def test_invalid_starting_points():
    with pytest.raises(ValueError):
        diffusion.simulate_legendre_paths(1.0, 1.0, 10, 10)
    with pytest.raises(ValueError):
        diffusion.simulate_gbm_paths(-1.0, 1.0, 10, 10)
    with pytest.raises(ValueError):
        diffusion.simulate_gbm_paths(1.0, 0.0, 10, 10)


def test_additive_functional_constants():
    b = diffusion.simulate_gbm_paths(1.0, 0.7, 50, 20)
    assert np.all(diffusion.additive_functional(b, lambda x: np.zeros_like(x)) == 0.0)
    assert np.allclose(diffusion.additive_functional(b, lambda x: 3.0 * np.ones_like(x)), 2.1, rtol=0, atol=1e-14)


def test_additive_functional_against_fine_steps():
    b = diffusion.simulate_gbm_paths(1.0, 1.0, 2000, 1)
    fine = diffusion.additive_functional(b, lambda x: x * x)[0]
    coarse_bundle = diffusion.PathBundle(b.times[::10], b.values[:, ::10], b.seed, b.coordinate)
    coarse = diffusion.additive_functional(coarse_bundle, lambda x: x * x)[0]
    assert abs(fine - 0.5183367347964155) < 1e-12
    assert abs(coarse - fine) < 5e-3 * fine


@pytest.mark.filterwarnings("ignore::spectralindex.diffusion.StepSizeWarning")
def test_mass_conservation_without_killing():
    est = diffusion.mc_feynman_kac(MehlerFock(0.0), lambda y: np.ones_like(y), 0.5, 2.0, n_paths=1000, n_steps=20)
    assert est.mean == 1.0 and est.std_error == 0.0


def test_mf_zero_transition_against_spectral_kernel():
    psi = lambda y: np.exp(-y)
    fam = MehlerFock(0.0)
    est = diffusion.mc_feynman_kac(fam, psi, 0.5, 2.0, n_paths=100_000, n_steps=200)
    assert abs(est.z_score(diffusion.spectral_expectation(fam, psi, 0.5, 2.0))) < 3


def test_kl_feynman_kac_small_run():
    psi = lambda y: np.exp(-y)
    est = diffusion.mc_feynman_kac(KL, psi, 0.5, 1.0, n_paths=20_000)
    assert est.n_steps == 200
    assert abs(est.z_score(diffusion.spectral_expectation(KL, psi, 0.5, 1.0))) < 3


def test_mf_half_expectation_matches_spectral():
    psi = lambda y: np.exp(-y)
    x0 = math.cosh(1.0)
    a = diffusion.mf_half_expectation(psi, 0.5, x0)
    b = diffusion.spectral_expectation(MehlerFock(0.5), psi, 0.5, x0)
    assert abs(a - b) < 1e-7 * a


def test_weak_order_of_legendre_scheme():
    psi = lambda y: np.exp(-y)
    vals = diffusion.coupled_legendre_expectations(psi, 0.5, 2.0, [16, 32, 64, 128, 1024], n_paths=20_000)
    errs = np.abs(vals[:4] - vals[4])
    assert np.all(np.diff(errs) < 0)


def test_bougerol_limits():
    assert abs(diffusion.bougerol_rhs(1.0, 1e-6) - 1.0) < 1e-5
    assert diffusion.bougerol_rhs(1.0, 2.0) < diffusion.bougerol_rhs(1.0, 1.0)
    assert abs(diffusion.bougerol_rhs(1.0, 1.0) - 0.31533596053971642) < 1e-12


def test_bougerol_quadrature_sides():
    rhs = diffusion.bougerol_rhs(1.0, 1.0)
    assert abs(rhs - heat.total_mass(KL, 1.0, 1.0)) < 1e-4


def test_conditional_laplace_closed_form_bounds():
    for x, y in [(0.5, 0.5), (1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (0.3, 3.0)]:
        v = diffusion.conditional_laplace_closed(1.0, x, y)
        assert 0.0 < v <= 1.0
    assert abs(diffusion.conditional_laplace_closed(1.0, 1e-4, 1e-4) - 1.0) < 1e-2


def test_conditional_laplace_small_run():
    mc, closed = diffusion.conditional_laplace_check(1.0, 1.0, 1.0, n_paths=20_000)
    assert abs(mc.z_score(closed)) < 3


def test_z_score_with_zero_error():
    est = diffusion.MCEstimate(1.0, 0.0, 10, 0, 1)
    assert est.z_score(1.0) == 0.0
    assert est.z_score(2.0) == math.inf


def test_paths_csv_limit():
    b = diffusion.simulate_gbm_paths(1.0, 1.0, 3, 10)
    buf = io.StringIO()
    diffusion.write_paths_csv(buf, b, max_paths=2)
    rows = buf.getvalue().splitlines()
    assert rows[0].split(",")[0] == "path_id"
    assert len(rows) == 1 + 2 * 4
