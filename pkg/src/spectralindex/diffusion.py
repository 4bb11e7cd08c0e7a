"""Monte Carlo for the diffusions generated by the index operators.

The operator ``(1/r)[-(p u')' + q u]`` generates the diffusion
``dX = (p'/r) dt + sqrt(2 p / r) dW`` killed at rate ``k = q / r``.

* KL and IW: geometric Brownian motion ``X = x exp(sqrt(2) W)``, sampled exactly.
* MF: ``dX = 2X dt + sqrt(2 (X^2 - 1)) dW``, simulated in ``xi = arccosh X``
  where ``d xi = coth(xi) dt + sqrt(2) dW`` (Euler scheme with the ``1/xi``
  part of the drift taken implicitly, so paths never leave ``xi > 0``).

Random numbers come from Philox streams keyed by ``(seed, block index)``
with a fixed block size, so estimates depend only on ``(seed, n_paths,
n_steps)`` and never on how the work is split.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Tuple

import numpy as np

from . import heat
from ._io import text_output
from .quad import gauss_legendre
from .transforms import KontorovichLebedev, TransformFamily

__all__ = [
    "DiffusionSpec",
    "MCEstimate",
    "PathBundle",
    "diffusion_for",
    "simulate_gbm_paths",
    "simulate_legendre_paths",
    "coupled_legendre_expectations",
    "additive_functional",
    "mc_feynman_kac",
    "spectral_expectation",
    "mf_half_expectation",
    "bougerol_rhs",
    "bougerol_check",
    "conditional_laplace_closed",
    "conditional_laplace_check",
    "write_paths_csv",
    "StepSizeWarning",
]

BLOCK = 4096
DEFAULT_SEED = 20170417
STEPS_PER_UNIT_TIME = 400
# the MF killing rate mu^2/sinh^2(xi) is singular at the entrance boundary and
# the trapezoid misses excursions towards it; the bias only decays like sqrt(dt)
STEPS_PER_UNIT_TIME_SINGULAR = 3200
_XI_FLOOR = 1e-8


class StepSizeWarning(UserWarning):
    """Emitted when the Euler step is large compared with the drift scale."""


@dataclass(frozen=True)
class DiffusionSpec:
    """Coefficients of a killed diffusion on ``domain``."""

    drift: Callable[[np.ndarray], np.ndarray]
    vol: Callable[[np.ndarray], np.ndarray]
    kill_rate: Callable[[np.ndarray], np.ndarray]
    domain: Tuple[float, float]
    coordinate: str  # "log-gbm" or "arccosh"


def diffusion_for(family: TransformFamily) -> DiffusionSpec:
    """Diffusion with generator ``-L`` for a transform family."""
    if family.tag in ("kl", "iw"):
        al = 0.0 if family.tag == "kl" else family.alpha
        return DiffusionSpec(lambda x: x, lambda x: math.sqrt(2.0) * x,
                             lambda x: (x - al) ** 2, (0.0, math.inf), "log-gbm")
    mu = family.mu

    def kill(x):
        x = np.asarray(x, dtype=float)
        if mu == 0.0:
            return np.zeros_like(x)
        with np.errstate(divide="ignore"):
            return mu * mu / (x * x - 1.0)

    return DiffusionSpec(lambda x: 2.0 * x, lambda x: np.sqrt(2.0 * (x * x - 1.0)), kill, (1.0, math.inf), "arccosh")


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_error: float
    n_paths: int
    seed: int
    n_steps: int

    def z_score(self, reference: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == reference else math.inf
        return (self.mean - reference) / self.std_error


@dataclass
class PathBundle:
    """Simulated paths on a uniform time grid.

    ``values`` has shape ``(n_paths, n_steps + 1)`` and holds ``X``.
    """

    times: np.ndarray
    values: np.ndarray
    seed: int
    coordinate: str

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1] - 1


def _check_counts(t: float, n_steps: int, n_paths: int) -> None:
    if not t > 0:
        raise ValueError("t must be positive")
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be positive")


def _block_normals(seed: int, block: int, rows: int, n_steps: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**63 - 1), block])))
    return gen.standard_normal((BLOCK, n_steps))[:rows]


def _blocks(seed: int, n_paths: int, n_steps: int) -> Iterator[np.ndarray]:
    for b, start in enumerate(range(0, n_paths, BLOCK)):
        yield _block_normals(seed, b, min(BLOCK, n_paths - start), n_steps)


def _brownian(z: np.ndarray, dt: float) -> np.ndarray:
    w = np.zeros((z.shape[0], z.shape[1] + 1))
    np.cumsum(z * math.sqrt(dt), axis=1, out=w[:, 1:])
    return w


def _legendre_block(xi0: float, z: np.ndarray, dt: float) -> Tuple[np.ndarray, bool]:
    """Paths of ``d xi = coth(xi) dt + sqrt(2) dW``.

    The singular part ``1/xi`` of the drift is taken implicitly, which keeps
    every step positive; ``coth(xi) - 1/xi`` stays explicit.
    """
    xi = np.empty((z.shape[0], z.shape[1] + 1))
    xi[:, 0] = xi0
    big_step = False
    sq = math.sqrt(2.0 * dt)
    for j in range(z.shape[1]):
        cur = xi[:, j]
        coth = 1.0 / np.tanh(cur)
        if not big_step and float(np.max(coth)) * dt > 0.5:
            big_step = True
        y = cur + (coth - 1.0 / cur) * dt + sq * z[:, j]
        xi[:, j + 1] = np.maximum(0.5 * (y + np.sqrt(y * y + 4.0 * dt)), _XI_FLOOR)
    return xi, big_step


def simulate_gbm_paths(x0: float, t: float, n_steps: int, n_paths: int, seed: int = DEFAULT_SEED) -> PathBundle:
    """Exact samples of ``x0 exp(sqrt(2) W)`` on a uniform grid of ``[0, t]``."""
    _check_counts(t, n_steps, n_paths)
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    dt = t / n_steps
    parts = [x0 * np.exp(math.sqrt(2.0) * _brownian(z, dt)) for z in _blocks(seed, n_paths, n_steps)]
    return PathBundle(np.linspace(0.0, t, n_steps + 1), np.vstack(parts), seed, "log-gbm")


def simulate_legendre_paths(x0: float, t: float, n_steps: int, n_paths: int, seed: int = DEFAULT_SEED) -> PathBundle:
    """Paths of ``dX = 2X dt + sqrt(2(X^2-1)) dW`` by a drift-implicit Euler step in ``xi = arccosh X``."""
    _check_counts(t, n_steps, n_paths)
    if not x0 > 1:
        raise ValueError("x0 must exceed 1")
    dt = t / n_steps
    parts, warn = [], False
    for z in _blocks(seed, n_paths, n_steps):
        xi, big = _legendre_block(math.acosh(x0), z, dt)
        warn |= big
        x = np.cosh(xi)
        x[:, 0] = x0  # cosh(arccosh(x0)) may differ from x0 in the last bit
        parts.append(x)
    if warn:
        warnings.warn("coth(xi) dt exceeded 0.5 on some path; refine the time step", StepSizeWarning, stacklevel=2)
    return PathBundle(np.linspace(0.0, t, n_steps + 1), np.vstack(parts), seed, "arccosh")


def coupled_legendre_expectations(psi: Callable, t: float, x0: float, step_counts, n_paths: int = 100_000,
                                  seed: int = DEFAULT_SEED) -> np.ndarray:
    """``E[psi(X_t)]`` for the MF diffusion at several step counts on shared noise.

    Every count must divide the largest one; coarse increments are sums of
    fine ones, so the estimates differ mainly through discretization error.
    """
    counts = [int(c) for c in step_counts]
    fine = max(counts)
    if any(fine % c for c in counts):
        raise ValueError("step counts must divide the largest one")
    _check_counts(t, fine, n_paths)
    sums = np.zeros(len(counts))
    for z in _blocks(seed, n_paths, fine):
        for i, c in enumerate(counts):
            agg = z.reshape(z.shape[0], c, fine // c).sum(axis=2) / math.sqrt(fine // c)
            xi, _ = _legendre_block(math.acosh(x0), agg, t / c)
            sums[i] += float(np.sum(np.asarray(psi(np.cosh(xi[:, -1])), dtype=float)))
    return sums / n_paths


def additive_functional(bundle: PathBundle, kill_rate: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Trapezoidal ``A_t = int_0^t k(X_s) ds`` for every path."""
    return _trapezoid(np.asarray(kill_rate(bundle.values), dtype=float), float(bundle.times[1] - bundle.times[0]))


def _trapezoid(vals: np.ndarray, dt: float) -> np.ndarray:
    return dt * (np.sum(vals, axis=1) - 0.5 * (vals[:, 0] + vals[:, -1]))


def _estimate(samples: np.ndarray, seed: int, n_steps: int) -> MCEstimate:
    n = samples.size
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(mean, se, n, seed, n_steps)


def _fk_samples(family: TransformFamily, psi: Callable, t: float, x0: float, n_paths: int,
                n_steps: int, seed: int) -> np.ndarray:
    """Per-path ``exp(-A_t) psi(X_t)``, streamed block by block."""
    spec = diffusion_for(family)
    dt = t / n_steps
    out = np.empty(n_paths)
    pos, warn = 0, False
    for z in _blocks(seed, n_paths, n_steps):
        if spec.coordinate == "log-gbm":
            xs = x0 * np.exp(math.sqrt(2.0) * _brownian(z, dt))
            kill = spec.kill_rate(xs)
        else:
            xi, big = _legendre_block(math.acosh(x0), z, dt)
            warn |= big
            xs = np.cosh(xi)
            # mu^2 / sinh^2(xi) avoids cancellation in x^2 - 1
            kill = (family.mu ** 2 / np.sinh(xi) ** 2) if family.mu > 0 else np.zeros_like(xi)
        a_t = _trapezoid(kill, dt)
        out[pos:pos + z.shape[0]] = np.exp(-a_t) * np.asarray(psi(xs[:, -1]), dtype=float)
        pos += z.shape[0]
    if warn:
        warnings.warn("coth(xi) dt exceeded 0.5 on some path; refine the time step", StepSizeWarning, stacklevel=3)
    return out


def mc_feynman_kac(family: TransformFamily, psi: Callable, t: float, x0: float, n_paths: int = 100_000,
                   n_steps: Optional[int] = None, seed: int = DEFAULT_SEED) -> MCEstimate:
    """Monte Carlo estimate of ``E[exp(-A_t) psi(X_t)]`` for the family's diffusion.

    Examples
    --------
    >>> from spectralindex.transforms import MehlerFock
    >>> est = mc_feynman_kac(MehlerFock(0.0), lambda y: np.ones_like(y), 0.5, 2.0, n_paths=100, n_steps=10)
    >>> est.mean, est.std_error
    (1.0, 0.0)
    """
    if n_steps is None:
        rate = STEPS_PER_UNIT_TIME_SINGULAR if (family.tag == "mf" and family.mu > 0) else STEPS_PER_UNIT_TIME
        n_steps = max(1, int(round(rate * t)))
    _check_counts(t, n_steps, n_paths)
    family.check_point([x0])
    return _estimate(_fk_samples(family, psi, t, x0, n_paths, n_steps, seed), seed, n_steps)


def spectral_expectation(family: TransformFamily, psi: Callable, t: float, x0: float) -> float:
    """``int psi(y) p_r(t, x0, y) r(y) dy`` with the spectral heat kernel."""
    centre = 0.0 if family.tag == "mf" else round(math.log(x0))
    ys, wr = heat._state_rule(family.tag, centre)
    kern = heat.heat_kernel_matrix(family, t, np.array([x0]), ys)[0, 0]
    return float(np.dot(kern * np.asarray(psi(ys), dtype=float), wr))


def mf_half_expectation(psi: Callable, t: float, x0: float) -> float:
    """``int psi(y) p(t, x0, y) dy`` with the closed-form kernel for ``mu = 1/2``."""
    ys, wr = heat._state_rule("mf", 0.0)
    return float(np.dot(heat.mf_half_closed_form(t, x0, ys) * np.asarray(psi(ys), dtype=float), wr))


# ---------------------------------------------------------------------------
# Exponential functional of Brownian motion


def bougerol_rhs(t: float, x: float) -> float:
    """``(1/(2 sqrt(pi t))) int cos(x sinh y) exp(-y^2/4t) dy`` over the real line.

    Panels end at the zeros of the phase ``x sinh y`` (one per half period)
    and are at most ``sqrt(t)/4`` wide.
    """
    if not (t > 0 and x > 0):
        raise ValueError("t and x must be positive")
    y_max = math.sqrt(4.0 * t * 40.0)
    uniform = np.arange(0.0, y_max, 0.25 * math.sqrt(t))
    k_max = int(math.ceil(x * math.sinh(y_max) / math.pi))
    zeros = np.arcsinh(np.arange(1, k_max + 1) * math.pi / x)
    edges = np.unique(np.concatenate([uniform, zeros[zeros < y_max], [y_max]]))
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    h = np.diff(edges)
    y = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
    w = (h[:, None] * gw[None, :]).ravel()
    total = math.fsum(w * np.cos(x * np.sinh(y)) * np.exp(-y * y / (4.0 * t)))
    return total / math.sqrt(math.pi * t)


def bougerol_check(t: float, x: float, n_paths: int = 100_000, n_steps: Optional[int] = None,
                   seed: int = DEFAULT_SEED) -> Tuple[MCEstimate, float, float]:
    """Three evaluations of ``E[exp(-x^2 int_0^t exp(2 sqrt(2) W_s) ds)]``.

    Returns
    -------
    lhs_mc : MCEstimate
        Monte Carlo on exact Brownian paths.
    rhs_quad : float
        The elementary Fourier-type integral.
    spectral_double : float
        Total mass of the KL heat kernel, a double spectral integral.
    """
    one = lambda y: np.ones_like(y)
    lhs = mc_feynman_kac(KontorovichLebedev(), one, t, x, n_paths, n_steps, seed)
    return lhs, bougerol_rhs(t, x), heat.total_mass(KontorovichLebedev(), t, x)


def conditional_laplace_closed(t: float, x: float, y: float) -> float:
    """``E[exp(-x^2 int_0^t exp(2 sqrt(2) W_s) ds) | X_t = y]`` as ``p_r / p_r^0``.

    ``p_r^0 = exp(-(log y - log x)^2 / 4t) / (2 sqrt(pi t))`` is the GBM density
    with respect to ``dy / y``.
    """
    p_r = heat.heat_kernel(KontorovichLebedev(), t, x, y)
    log_p0 = -(math.log(y / x)) ** 2 / (4.0 * t) - math.log(2.0 * math.sqrt(math.pi * t))
    return p_r * math.exp(-log_p0)


def conditional_laplace_check(t: float, x: float, y: float, n_paths: int = 100_000,
                              seed: int = DEFAULT_SEED, n_steps: Optional[int] = None) -> Tuple[MCEstimate, float]:
    """Brownian-bridge Monte Carlo against :func:`conditional_laplace_closed`."""
    n_steps = n_steps or max(1, int(round(STEPS_PER_UNIT_TIME * t)))
    _check_counts(t, n_steps, n_paths)
    if not (x > 0 and y > 0):
        raise ValueError("x and y must be positive")
    dt = t / n_steps
    end = math.log(y / x) / math.sqrt(2.0)
    frac = np.linspace(0.0, 1.0, n_steps + 1)
    out = np.empty(n_paths)
    pos = 0
    for z in _blocks(seed, n_paths, n_steps):
        w = _brownian(z, dt)
        bridge = w - frac[None, :] * (w[:, -1:] - end)
        a_t = x * x * _trapezoid(np.exp(2.0 * math.sqrt(2.0) * bridge), dt)
        out[pos:pos + z.shape[0]] = np.exp(-a_t)
        pos += z.shape[0]
    return _estimate(out, seed, n_steps), conditional_laplace_closed(t, x, y)


def write_paths_csv(path, bundle: PathBundle, max_paths: int = 100) -> None:
    """Write ``path_id, t, X`` rows for at most ``max_paths`` paths."""
    with text_output(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["path_id", "t", "X"])
        for i in range(min(max_paths, bundle.n_paths)):
            for tj, xv in zip(bundle.times, bundle.values[i]):
                wr.writerow([i, f"{tj:.17g}", f"{xv:.17g}"])
