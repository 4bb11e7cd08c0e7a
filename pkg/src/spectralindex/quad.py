"""One-dimensional quadrature used throughout the package.

Three rule families are provided:

* tanh-sinh on finite intervals (endpoint singularities are harmless),
* exp-sinh on half lines,
* composite Gauss-Legendre panels for oscillatory integrands.

All integrands are called with numpy arrays and must return arrays of the
same shape.  Error estimates come from the difference of two successive
refinement levels, so ``converged`` is conservative rather than optimistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .logscale import LogScaledValue

__all__ = [
    "Gaussian",
    "Exponential",
    "QuadSpec",
    "QuadResult",
    "integrate",
    "integrate_logspace",
    "gauss_legendre",
    "panel_nodes",
    "truncation_point",
    "spectral_cutoff",
]


@dataclass(frozen=True)
class Gaussian:
    """Decay hint: integrand bounded by ``A * exp(-(u - lower)**2 / (2 scale**2))``."""

    scale: float


@dataclass(frozen=True)
class Exponential:
    """Decay hint: integrand bounded by ``A * exp(-(u - lower) / scale)``."""

    scale: float


DecayHint = Optional[Union[Gaussian, Exponential]]


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and hints for one quadrature call.

    Parameters
    ----------
    rel_tol, abs_tol : float
        Target accuracy; the call succeeds when the estimated error is below
        ``max(abs_tol, rel_tol * |value|)``.
    max_nodes : int
        Budget of integrand evaluations before giving up.
    decay_hint : Gaussian, Exponential or None
        Shape of the tail on half lines.  With a hint the half line is
        truncated analytically; without one the exp-sinh map is used.
    oscillation_hint : float or None
        Angular frequency of the integrand.  Large ``omega * length`` selects
        Gauss-Legendre panels sized to the oscillation.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_nodes: int = 40000
    decay_hint: DecayHint = None
    oscillation_hint: Optional[float] = None

    def __post_init__(self) -> None:
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.abs_tol < 0.0:
            raise ValueError("abs_tol must be nonnegative")
        if self.max_nodes < 15:
            raise ValueError("max_nodes must be at least 15")
        if self.oscillation_hint is not None and self.oscillation_hint < 0:
            raise ValueError("oscillation_hint must be nonnegative")

    def target(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class QuadResult:
    """Outcome of a quadrature call."""

    value: float
    err_estimate: float
    nodes_used: int
    converged: bool
    log_scale: float = field(default=0.0, compare=False)

    def __float__(self) -> float:
        return float(self.value)


# ---------------------------------------------------------------------------
# basic rules


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def panel_nodes(a: float, b: float, n_panels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with equal panels on ``[a, b]``."""
    n_panels = max(1, int(n_panels))
    x, w = _leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


_TS_TMAX = 4.3
_ES_TLO = 4.5
_ES_THI = 3.8


def _tanh_sinh_level(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes new at ``level`` on [-1, 1]: (x, 1 - |x|, w) with h = 2**-level."""
    h = 2.0 ** (-level)
    if level == 0:
        k = np.arange(-int(_TS_TMAX), int(_TS_TMAX) + 1, dtype=float)
    else:
        n = int(math.ceil(_TS_TMAX / h))
        k = np.arange(-n, n + 1)
        k = k[k % 2 != 0].astype(float)
    t = k * h
    s = 0.5 * math.pi * np.sinh(t)
    x = np.tanh(s)
    comp = 1.0 / (np.exp(np.abs(s)) * np.cosh(s))  # 1 - |x| without cancellation
    w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(s) ** 2
    return x, comp, w


def _exp_sinh_level(level: int) -> tuple[np.ndarray, np.ndarray]:
    h = 2.0 ** (-level)
    lo = int(math.ceil(_ES_TLO / h))
    hi = int(math.ceil(_ES_THI / h))
    k = np.arange(-lo, hi + 1)
    if level > 0:
        k = k[k % 2 != 0]
    t = k.astype(float) * h
    e = np.exp(0.5 * math.pi * np.sinh(t))
    w = h * 0.5 * math.pi * np.cosh(t) * e
    return e, w


def _safe_eval(f: Callable, x: np.ndarray, tail: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape).astype(float)
    bad = ~np.isfinite(y)
    if bad.any():
        # overflow far out in the tails is treated as negligible mass
        y = np.where(bad & tail, 0.0, y)
    return y


def _tanh_sinh(f: Callable, a: float, b: float, spec: QuadSpec) -> QuadResult:
    c, d = 0.5 * (a + b), 0.5 * (b - a)
    total = 0.0
    prev = None
    used = 0
    err = math.inf
    for level in range(0, 12):
        x, comp, w = _tanh_sinh_level(level)
        keep = comp > 0.0
        x, comp, w = x[keep], comp[keep], w[keep]
        u = np.where(x < 0, a + d * comp, b - d * comp)
        u = np.where(np.abs(x) < 0.5, c + d * x, u)
        inside = (u > a) & (u < b)
        u, w, comp = u[inside], w[inside], comp[inside]
        y = _safe_eval(f, u, comp < 1e-8)
        used += u.size
        s = math.fsum(d * w * y)
        h = 2.0 ** (-level)
        total = s if level == 0 else 0.5 * total + s
        if prev is not None:
            err = abs(total - prev)
            if not math.isfinite(total):
                break
            if err <= spec.target(total) and level >= 3:
                return QuadResult(total, err, used, True)
        prev = total
        if used > spec.max_nodes:
            break
        _ = h
    return QuadResult(total, err, used, bool(err <= spec.target(total)))


def _exp_sinh(f: Callable, a: float, scale: float, spec: QuadSpec) -> QuadResult:
    total = 0.0
    prev = None
    used = 0
    err = math.inf
    for level in range(0, 12):
        e, w = _exp_sinh_level(level)
        u = a + scale * e
        y = _safe_eval(f, u, (e > 1e3) | (e < 1e-30))
        used += u.size
        s = math.fsum(scale * w * y)
        total = s if level == 0 else 0.5 * total + s
        if prev is not None:
            err = abs(total - prev)
            if not math.isfinite(total):
                break
            if err <= spec.target(total) and level >= 3:
                return QuadResult(total, err, used, True)
        prev = total
        if used > spec.max_nodes:
            break
    return QuadResult(total, err, used, bool(err <= spec.target(total)))


def _panels(f: Callable, a: float, b: float, n_panels: int, spec: QuadSpec) -> QuadResult:
    """Composite Gauss-Legendre; error from orders 16 and 24 on the same panels."""
    used = 0
    err = math.inf
    val = 0.0
    while True:
        x1, w1 = panel_nodes(a, b, n_panels, 16)
        x2, w2 = panel_nodes(a, b, n_panels, 24)
        no_tail = np.zeros(x1.shape, bool)
        v1 = math.fsum(w1 * _safe_eval(f, x1, no_tail))
        v2 = math.fsum(w2 * _safe_eval(f, x2, np.zeros(x2.shape, bool)))
        used += x1.size + x2.size
        val = v2
        err = abs(v2 - v1)
        if err <= spec.target(val):
            return QuadResult(val, err, used, True)
        if used + 80 * n_panels > spec.max_nodes:
            return QuadResult(val, err, used, False)
        n_panels *= 2


# ---------------------------------------------------------------------------
# truncation helpers


def truncation_point(lower: float, hint: DecayHint, amplitude: float, threshold: float) -> float:
    """Point beyond which the hinted tail integral is below ``threshold``."""
    amplitude = max(abs(amplitude), 1e-300)
    if isinstance(hint, Gaussian):
        s = hint.scale
        # Mills-ratio bound: tail <= A s^2/z exp(-z^2/2s^2) for z > s
        z = s * math.sqrt(2.0 * max(math.log(amplitude * s / threshold), 1.0))
        for _ in range(30):
            bound = amplitude * s * s / z * math.exp(-0.5 * (z / s) ** 2)
            if bound <= threshold:
                break
            z *= 1.1
        return lower + z
    if isinstance(hint, Exponential):
        s = hint.scale
        return lower + s * max(math.log(amplitude * s / threshold), 1.0)
    raise ValueError("no decay hint to truncate with")


def spectral_cutoff(t: float, tol: float = 1e-12, growth: float = math.pi, floor: float = 30.0) -> float:
    """Largest spectral index needed for ``exp(-t tau^2)`` against ``exp(growth tau)``.

    Solves ``t tau^2 - growth tau = ln(1/tol) + ln(1 + tau)`` and never
    returns less than ``floor``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    rhs0 = math.log(1.0 / tol)
    tau = (growth + math.sqrt(growth * growth + 4.0 * t * rhs0)) / (2.0 * t)
    for _ in range(50):
        rhs = rhs0 + math.log1p(tau)
        new = (growth + math.sqrt(growth * growth + 4.0 * t * rhs)) / (2.0 * t)
        if abs(new - tau) < 1e-9 * tau:
            tau = new
            break
        tau = new
    return max(tau, floor)


def _probe_amplitude(f: Callable, a: float, scale: float) -> float:
    u = a + scale * np.array([1e-9, 0.1, 0.3, 0.7, 1.0, 1.5])
    with np.errstate(all="ignore"):
        y = np.abs(np.asarray(f(u), dtype=float))
    y = y[np.isfinite(y)]
    return float(y.max()) if y.size else 1.0


# ---------------------------------------------------------------------------
# public entry points


def integrate(f: Callable[[np.ndarray], np.ndarray], lower: float, upper: float,
              spec: Optional[QuadSpec] = None) -> QuadResult:
    """Integrate a vectorized real function over ``[lower, upper]``.

    ``upper`` may be ``numpy.inf``; ``lower`` may be ``-numpy.inf`` when
    ``upper`` is infinite as well (the line is split at zero).

    Examples
    --------
    >>> import numpy as np
    >>> r = integrate(lambda u: np.exp(-u * u), 0.0, np.inf)
    >>> abs(r.value - np.sqrt(np.pi) / 2) < 1e-12
    True
    """
    spec = spec or QuadSpec()
    if lower == upper:
        return QuadResult(0.0, 0.0, 0, True)
    if lower > upper:
        r = integrate(f, upper, lower, spec)
        return replace(r, value=-r.value)
    if math.isinf(lower):
        if not math.isinf(upper):
            r = integrate(lambda u: f(-u), -upper, np.inf, spec)
            return r
        left = integrate(lambda u: f(-u), 0.0, np.inf, spec)
        right = integrate(f, 0.0, np.inf, spec)
        return QuadResult(left.value + right.value, left.err_estimate + right.err_estimate,
                          left.nodes_used + right.nodes_used, left.converged and right.converged)

    omega = spec.oscillation_hint or 0.0
    if math.isinf(upper):
        hint = spec.decay_hint
        if hint is None:
            if omega > 0:
                # no tail information: fall back on exp-sinh with the period as scale
                return _exp_sinh(f, lower, max(1.0, math.pi / omega), spec)
            return _exp_sinh(f, lower, 1.0, spec)
        amp = _probe_amplitude(f, lower, hint.scale)
        thr = max(spec.abs_tol, spec.rel_tol * amp * hint.scale * 1e-2) / 10.0
        upper = truncation_point(lower, hint, amp, thr)

    length = upper - lower
    if omega * length > 20.0:
        n_panels = int(math.ceil(omega * length / math.pi)) + 1
        return _panels(f, lower, upper, n_panels, spec)
    return _tanh_sinh(f, lower, upper, spec)


def integrate_logspace(f_log: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
                       lower: float, upper: float, spec: Optional[QuadSpec] = None) -> QuadResult:
    """Integrate a function given as ``(sign, log_mag)`` arrays.

    The integrand is rescaled by its largest sampled magnitude before
    summation, so individual factors may lie far outside floating range as
    long as the integral itself is representable.  The returned value equals
    ``integrate`` applied to ``sign * exp(log_mag)``; ``log_scale`` records
    the offset that was factored out.
    """
    spec = spec or QuadSpec()
    # probe the log magnitude to find a common offset
    if math.isinf(upper):
        probe = lower + np.concatenate([np.linspace(0.0, 60.0, 241)[1:], [1e-9]])
    else:
        probe = np.linspace(lower, upper, 257)[1:-1]
    with np.errstate(all="ignore"):
        _, lm = f_log(probe)
    lm = np.asarray(lm, dtype=float)
    finite = lm[np.isfinite(lm)]
    offset = float(finite.max()) if finite.size else 0.0

    def g(u: np.ndarray) -> np.ndarray:
        sg, lg = f_log(u)
        with np.errstate(all="ignore"):
            return np.asarray(sg, dtype=float) * np.exp(np.asarray(lg, dtype=float) - offset)

    inner_spec = replace(spec, abs_tol=spec.abs_tol * math.exp(-offset) if offset < 700 else 0.0)
    r = integrate(g, lower, upper, inner_spec)
    scale = math.exp(offset) if offset < 709 else math.inf
    with np.errstate(all="ignore"):
        value = r.value * scale if r.value != 0 else 0.0
        err = r.err_estimate * scale
    if not math.isfinite(value):
        value, err = r.value, r.err_estimate
        return QuadResult(value, err, r.nodes_used, r.converged, log_scale=offset)
    return QuadResult(value, err, r.nodes_used, r.converged, log_scale=0.0)


def integrate_logspace_scaled(f_log, lower, upper, spec=None) -> LogScaledValue:
    """Like :func:`integrate_logspace` but returns a :class:`LogScaledValue`."""
    r = integrate_logspace(f_log, lower, upper, spec)
    return LogScaledValue.from_float(r.value).scale_log(r.log_scale)
