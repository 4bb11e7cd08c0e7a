"""Special functions of imaginary and small real index.

Everything here is vectorized over its array arguments (numpy broadcasting)
and returns plain floats for scalar input.  Functions whose magnitude decays
like ``exp(-pi tau / 2)`` have ``*_scaled`` companions returning
:class:`LogScaledValue` objects (or sign/log arrays) with that factor removed.

Evaluation strategy
-------------------
``K_{i tau}(x)``
    For ``tau <= x`` the integral is taken along the steepest-descent path of
    ``exp(-x cosh u + i tau u)``, which has a positive integrand.  For
    ``tau > x`` the ascending series of ``I_{i tau}`` is used when ``x`` is
    moderate, and otherwise a rectangular contour through ``Im u = pi/2``
    on which the integrand has modulus ``exp(-pi tau / 2)``.  None of the
    routes suffers the ``exp(-pi tau / 2)`` cancellation of the real axis.
``W_{alpha, i tau}(z)``
    The Laplace-type integral over ``(1, inf)`` written in the variable
    ``xi = cosh u``.  The path climbs the imaginary axis to the height of the
    saddle point and then runs horizontally, which keeps the integrand within
    a few units of the result.  Beyond ``tau > x`` the height reaches
    ``pi/2`` and a closed rectangle is used.  The branch point at ``u = 0``
    is integrated with a local power series.
``P^{-mu}_{-1/2 + i tau}(x)``
    A finite Laplace-Mehler integral over ``(0, arccosh x)`` with
    Gauss-Jacobi nodes absorbing the endpoint singularity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import roots_jacobi

from .logscale import LogScaledValue
from .quad import gauss_legendre

__all__ = [
    "AccuracyWarning",
    "LogScaledValue",
    "SpecialFunctionParams",
    "loggamma",
    "gamma_abs2",
    "log_gamma_abs2",
    "bessel_k_im",
    "bessel_k_im_scaled",
    "log_bessel_k_im_scaled",
    "bessel_k",
    "log_bessel_k",
    "bessel_i",
    "log_bessel_i",
    "whittaker_w_im",
    "log_whittaker_w_im_scaled",
    "whittaker_w",
    "whittaker_m",
    "legendre_p_im",
    "legendre_p_real",
    "DEFAULT_RTOL",
]

DEFAULT_RTOL = 1e-10
LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class AccuracyWarning(UserWarning):
    """Requested accuracy is likely not met for some inputs."""


@dataclass(frozen=True)
class SpecialFunctionParams:
    """Validated parameter bundle for the index special functions."""

    tau: float = 0.0
    x: float = 1.0
    alpha: float = 0.0
    mu: float = 0.0
    nu: float = 0.0
    legendre: bool = False

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if not self.alpha < 0.5:
            raise ValueError("alpha must be below 1/2")
        if not 0.0 <= self.mu < 1.0:
            raise ValueError("mu must lie in [0, 1)")
        lo = 1.0 if self.legendre else 0.0
        if not self.x > lo:
            raise ValueError(f"x must exceed {lo}")


def _out(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def _prep(*args) -> Tuple[bool, list]:
    scalar = all(np.ndim(a) == 0 for a in args)
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
    return scalar, [np.array(a, dtype=float).ravel() for a in arrs] + [arrs[0].shape]


# ---------------------------------------------------------------------------
# Gamma function

_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])


def _loggamma_right(z: np.ndarray) -> np.ndarray:
    """Lanczos log-gamma for Re z >= 1/2."""
    zm = z - 1.0
    acc = np.full(zm.shape, _LANCZOS[0], dtype=complex)
    for k in range(1, _LANCZOS.size):
        acc = acc + _LANCZOS[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return LN_SQRT_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def _loggamma_shifted(z: np.ndarray) -> np.ndarray:
    # Shift small |z| upward by recurrence; Lanczos is most accurate there anyway,
    # but recurrence keeps log(acc) well away from cancellation near z = 1, 2.
    out = np.empty(z.shape, dtype=complex)
    big = np.abs(z) >= 8.0
    out[big] = _loggamma_right(z[big])
    if (~big).any():
        zs = z[~big].copy()
        corr = np.zeros(zs.shape, dtype=complex)
        for _ in range(8):
            corr = corr + np.log(zs)
            zs = zs + 1.0
        out[~big] = _loggamma_right(zs) - corr
    return out


def loggamma(z):
    """Principal-branch log-gamma for complex ``z`` with ``Re z > 0``.

    Uses the Lanczos approximation (g = 7, nine coefficients) after upward
    recurrence for small ``|z|``.  The imaginary part is the continuous
    branch, matching ``scipy.special.loggamma``.

    Parameters
    ----------
    z : complex or array_like
        Argument with positive real part.

    Returns
    -------
    complex or ndarray of complex
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(arr.real <= 0):
        raise ValueError("loggamma is implemented for Re z > 0 only")
    flat = arr.ravel()
    out = _loggamma_shifted(flat)
    # the recurrence sums logs of principal values, which may wrap by 2 pi i
    # for large imaginary parts; the Lanczos branch is continuous so correct
    # the shifted branch against it
    ref = _loggamma_right(flat)
    wrap = np.round((ref.imag - out.imag) / (2.0 * math.pi))
    out = out + 2j * math.pi * wrap
    if arr.ndim == 0:
        return complex(out[0])
    return out.reshape(arr.shape)


def log_gamma_abs2(a, tau):
    """``log |Gamma(a + i tau)|^2`` for ``a > 0``."""
    scalar = np.ndim(a) == 0 and np.ndim(tau) == 0
    a_arr, t_arr = np.broadcast_arrays(np.asarray(a, float), np.asarray(tau, float))
    if np.any(a_arr <= 0):
        raise ValueError("gamma_abs2 requires a > 0")
    val = 2.0 * np.real(loggamma(a_arr + 1j * t_arr))
    return float(val) if scalar else np.asarray(val)


def gamma_abs2(a, tau):
    """``|Gamma(a + i tau)|^2`` computed through the complex log-gamma.

    Examples
    --------
    >>> abs(gamma_abs2(0.5, 1.0) - math.pi / math.cosh(math.pi)) < 1e-13
    True
    """
    return np.exp(log_gamma_abs2(a, tau)) if np.ndim(a) or np.ndim(tau) else math.exp(log_gamma_abs2(a, tau))


# ---------------------------------------------------------------------------
# Bessel functions of real order


def _lgamma(v: np.ndarray) -> np.ndarray:
    return np.vectorize(math.lgamma, otypes=[float])(v)


def log_bessel_i(nu, x):
    """``log I_nu(x)`` for ``nu >= 0`` and ``x > 0``.

    Ascending series (summed relative to its largest term) for moderate
    ``x``; the Hankel asymptotic expansion once ``x > 40 + nu**2``.
    """
    scalar, (nu_a, x_a, shape) = _prep(nu, x)
    if np.any(x_a <= 0):
        raise ValueError("bessel_i requires x > 0")
    if np.any(nu_a < 0):
        raise ValueError("bessel_i requires nu >= 0")
    out = np.empty_like(x_a)
    asym = x_a > 40.0 + nu_a ** 2
    if asym.any():
        xa, na = x_a[asym], nu_a[asym]
        m4 = 4.0 * na * na
        term = np.ones_like(xa)
        acc = np.ones_like(xa)
        for k in range(1, 30):
            term = -term * (m4 - (2 * k - 1) ** 2) / (k * 8.0 * xa)
            acc = acc + term
            if np.all(np.abs(term) < 1e-17 * np.abs(acc)):
                break
        out[asym] = xa - 0.5 * np.log(2.0 * math.pi * xa) + np.log(acc)
    ser = ~asym
    if ser.any():
        xs, ns = x_a[ser], nu_a[ser]
        q = 0.25 * xs * xs
        # peak term index of (x/2)^{2k}/(k! Gamma(k+nu+1))
        kmax = int(np.max(xs)) + 60
        k = np.arange(kmax + 1)[:, None]
        logt = (k * np.log(q)[None, :] - _lgamma(k + 1.0)
                - _lgamma(k + ns[None, :] + 1.0))
        peak = logt.max(axis=0)
        s = np.exp(logt - peak).sum(axis=0)
        out[ser] = ns * np.log(0.5 * xs) + peak + np.log(s)
    return _out(out.reshape(shape), scalar)


def bessel_i(nu, x):
    """Modified Bessel function of the first kind ``I_nu(x)``, real ``nu >= 0``.

    Examples
    --------
    >>> round(bessel_i(0.0, 1.0), 15)
    1.266065877752008
    """
    return np.exp(log_bessel_i(nu, x))


@lru_cache(maxsize=8)
def _panel_rule(n_panels: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre on [0, 1]."""
    x, w = gauss_legendre(order, 0.0, 1.0)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def log_bessel_k(nu, x):
    """``log K_nu(x)`` for real ``nu`` and ``x > 0``.

    Evaluates ``int_0^inf exp(-x cosh u) cosh(nu u) du`` on panels around
    the peak of the integrand, relative to its maximum.
    """
    scalar, (nu_a, x_a, shape) = _prep(nu, x)
    if np.any(x_a <= 0):
        raise ValueError("bessel_k requires x > 0")
    nu_a = np.abs(nu_a)
    ustar = np.arcsinh(nu_a / x_a)
    emax = -x_a * np.cosh(ustar) + nu_a * ustar
    # right end: exponent has dropped by 50 below the peak
    hi = ustar + 1.0
    for _ in range(80):
        e = -x_a * np.cosh(hi) + nu_a * hi
        done = e < emax - 50.0
        if done.all():
            break
        hi = np.where(done, hi, hi * 1.3 + 0.5)
    s, w = _panel_rule(24, 16)
    u = hi[:, None] * s[None, :]
    expo = -x_a[:, None] * np.cosh(u) + nu_a[:, None] * u
    # cosh(nu u) = exp(nu u) (1 + exp(-2 nu u)) / 2
    expo = expo + np.log1p(np.exp(-2.0 * nu_a[:, None] * u)) - math.log(2.0)
    vals = np.exp(expo - emax[:, None])
    integral = (vals * w[None, :]).sum(axis=1) * hi
    out = emax + np.log(integral)
    return _out(out.reshape(shape), scalar)


def bessel_k(nu, x):
    """Modified Bessel function ``K_nu(x)`` of real order."""
    return np.exp(log_bessel_k(nu, x))


# ---------------------------------------------------------------------------
# K of imaginary order

_K_SERIES_XMAX = 28.0
_W_SERIES_ZMAX = 4.0
_PANEL_PHASE = 4.0 * math.pi


def _k_sd_path(tau: np.ndarray, x: np.ndarray) -> np.ndarray:
    """log(e^{pi tau/2} K_{i tau}(x)) for tau <= x via the descent path."""
    r0 = tau / x
    e0 = -x * np.sqrt(np.maximum(0.0, (1.0 - r0) * (1.0 + r0))) - tau * np.arcsin(np.minimum(r0, 1.0))
    cosh_hi = (50.0 / x + 2.6) / 0.83
    hi = np.maximum(2.0, np.arccosh(np.maximum(cosh_hi, 1.0)))
    s, w = _panel_rule(24, 16)
    u = hi[:, None] * s[None, :]
    sh = np.sinh(u)
    small = u < 1e-3
    u2 = u * u
    # 1 - u/sinh(u) and its complement without cancellation
    one_minus = np.where(small, u2 / 6.0 - 7.0 * u2 * u2 / 360.0,
                         1.0 - np.divide(u, sh, out=np.ones_like(u), where=~small))
    ratio = 1.0 - one_minus
    rt = r0[:, None]
    sin_th = rt * ratio
    one_minus_sin = (1.0 - rt) + rt * one_minus
    cos_th = np.sqrt(np.maximum(0.0, one_minus_sin * (1.0 + sin_th)))
    theta = np.arctan2(sin_th, cos_th)
    expo = -x[:, None] * np.cosh(u) * cos_th - tau[:, None] * theta
    vals = np.exp(expo - e0[:, None])
    integral = (vals * w[None, :]).sum(axis=1) * hi
    return 0.5 * math.pi * tau + e0 + np.log(integral)


def _k_series(tau: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sign and log of e^{pi tau/2} K_{i tau}(x) from the series of I_{i tau}."""
    q = 0.25 * x * x
    n_terms = int(np.max(x)) * 2 + 40
    c = np.ones(tau.shape, dtype=complex)
    acc = c.copy()
    for k in range(1, n_terms):
        c = c * q / (k * (k + 1j * tau))
        acc = acc + c
    lg = loggamma(1.0 + 1j * tau)
    phase = tau * np.log(0.5 * x) - lg.imag
    im = np.imag(np.exp(1j * phase) * acc)
    # pi e^{pi tau/2} / sinh(pi tau) * |1/Gamma(1+i tau)|
    pref = 0.5 * math.log(2.0 * math.pi) - 0.5 * np.log(tau) - 0.5 * np.log1p(-np.exp(-2.0 * math.pi * tau))
    val = -im
    sign = np.sign(val)
    with np.errstate(divide="ignore"):
        logv = pref + np.log(np.abs(val))
    return sign, logv


def _k_rectangle_one(tau: float, x: float) -> Tuple[float, float]:
    """Sign and log of e^{pi tau/2} K_{i tau}(x) on the contour through Im u = pi/2."""
    cosh_s = max(1.0, (0.5 * math.pi * tau + 40.0) / x)
    big_s = math.acosh(cosh_s)
    # horizontal piece: int_0^S cos(tau s - x sinh s) ds
    phase_var = tau * big_s + x * math.sinh(big_s)
    n_pan = int(math.ceil(phase_var / math.pi)) + 4
    s, w = _panel_rule_cached(n_pan)
    u = big_s * s
    horiz = big_s * float(np.dot(w, np.cos(tau * u - x * np.sinh(u))))
    # drop from S + i pi/2 to S: -i int_0^{pi/2} f(S + i b) db, scaled by e^{pi tau/2}
    decay = x * cosh_s - tau
    dmax = min(0.5 * math.pi, 60.0 / max(decay, 1e-3))
    n_pan = int(math.ceil(x * math.sinh(big_s) * dmax / math.pi)) + 4
    s, w = _panel_rule_cached(n_pan)
    beta = 0.5 * math.pi - dmax * s
    uu = big_s + 1j * beta
    f = np.exp(-x * np.cosh(uu) + 1j * tau * uu + 0.5 * math.pi * tau)
    drop = (-1j * dmax * np.dot(w, f)).real
    val = horiz + drop
    if val == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, val), math.log(abs(val))


@lru_cache(maxsize=256)
def _panel_rule_cached(n_panels: int) -> Tuple[np.ndarray, np.ndarray]:
    return _panel_rule(n_panels, 16)


def log_bessel_k_im_scaled(tau, x) -> Tuple[np.ndarray, np.ndarray]:
    """Sign and log-magnitude arrays of ``exp(pi tau / 2) K_{i tau}(x)``.

    Parameters
    ----------
    tau, x : array_like
        Index (``tau >= 0``; negative values use evenness) and argument
        (``x > 0``).  Broadcast against each other.

    Returns
    -------
    sign, log_mag : ndarray
    """
    t_a, x_a = np.broadcast_arrays(np.abs(np.asarray(tau, float)), np.asarray(x, float))
    shape = t_a.shape
    t_a, x_a = t_a.ravel(), x_a.ravel()
    if np.any(x_a <= 0):
        raise ValueError("bessel_k_im requires x > 0")
    sign, logm = _chunked(_k_im_flat, t_a, x_a)
    return sign.reshape(shape), logm.reshape(shape)


def _k_im_flat(t_a: np.ndarray, x_a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    sign = np.ones_like(t_a)
    logm = np.empty_like(t_a)
    sd = t_a <= x_a
    if sd.any():
        logm[sd] = _k_sd_path(t_a[sd], x_a[sd])
    ser = (~sd) & (x_a <= _K_SERIES_XMAX)
    if ser.any():
        sign[ser], logm[ser] = _k_series(t_a[ser], x_a[ser])
    rect = (~sd) & (~ser)
    for i in np.flatnonzero(rect):
        sign[i], logm[i] = _k_rectangle_one(float(t_a[i]), float(x_a[i]))
    return sign, logm


def bessel_k_im_scaled(tau: float, x: float) -> LogScaledValue:
    """``exp(pi tau/2) K_{i tau}(x)`` as a :class:`LogScaledValue`.

    Examples
    --------
    >>> v = bessel_k_im_scaled(100.0, 1.0)
    >>> math.isfinite(v.log_mag)
    True
    """
    if x <= 0:
        raise ValueError("bessel_k_im requires x > 0")
    s, lm = log_bessel_k_im_scaled(tau, x)
    return LogScaledValue(int(s), float(lm))


def bessel_k_im(tau, x):
    """Modified Bessel function of the second kind of imaginary order, ``K_{i tau}(x)``.

    Parameters
    ----------
    tau : float or array_like
        Index; the function is even in ``tau`` so negative values are folded.
    x : float or array_like
        Positive argument.

    Returns
    -------
    float or ndarray

    Examples
    --------
    >>> round(bessel_k_im(0.0, 1.0), 14)
    0.42102443824071
    """
    scalar = np.ndim(tau) == 0 and np.ndim(x) == 0
    if scalar and x <= 0:
        raise ValueError("bessel_k_im requires x > 0")
    s, lm = log_bessel_k_im_scaled(tau, x)
    t_a = np.abs(np.broadcast_to(np.asarray(tau, float), s.shape))
    with np.errstate(under="ignore"):
        val = s * np.exp(lm - 0.5 * math.pi * t_a)
    if scalar and x < 1e-3 and abs(tau) > 200:
        warnings.warn("K_{i tau}(x) for tiny x and large tau is dominated by rounding",
                      AccuracyWarning, stacklevel=2)
    return _out(val, scalar)


def _bessel_k_im_signed(tau: float, x: float) -> float:
    """Real-axis quadrature of ``int_0^inf exp(-x cosh u) cos(tau u) du``.

    Accepts either sign of ``tau``; used only to check evenness.
    """
    from .quad import QuadSpec, integrate

    spec = QuadSpec(rel_tol=1e-13, abs_tol=1e-16, oscillation_hint=abs(tau) or None)
    upper = math.acosh(1.0 + 45.0 / x)
    r = integrate(lambda u: np.exp(-x * np.cosh(u)) * np.cos(tau * u), 0.0, upper, spec)
    return r.value


# ---------------------------------------------------------------------------
# Whittaker W with imaginary second index


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(n):
        out[..., k:] += a[..., k:k + 1] * b[..., : n - k]
    return out


def _series_log1p(c: np.ndarray) -> np.ndarray:
    """log(1 + C(s)) for a series with C(0) = 0 (coefficient arrays)."""
    n = c.shape[-1]
    out = np.zeros_like(c)
    power = c.copy()
    for m in range(1, n):
        out += ((-1) ** (m + 1) / m) * power
        power = _series_mul(power, c)
    return out


@lru_cache(maxsize=1)
def _branch_coefficients(n: int = 16) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients in s = rho^2 of -cos(rho), log(rho cot(rho/2)/2), log(sin(rho)/rho)."""
    k = np.arange(n)
    fact2 = np.array([math.factorial(2 * j) for j in k], dtype=float)
    fact21 = np.array([math.factorial(2 * j + 1) for j in k], dtype=float)
    neg_cos = -((-1.0) ** k) / fact2
    sinc = ((-1.0) ** k) / fact21
    cos_half = ((-1.0) ** k) / (fact2 * 4.0 ** k)            # cos(rho/2)
    sinc_half = ((-1.0) ** k) / (fact21 * 4.0 ** k)          # sin(rho/2)/(rho/2)
    # rho cot(rho/2) / 2 = cos(rho/2) / (sin(rho/2)/(rho/2))
    ratio = np.zeros(n)
    for j in range(n):
        ratio[j] = (cos_half[j] - np.dot(ratio[:j], sinc_half[j:0:-1])) / sinc_half[0]
    log_cot = _series_log1p(np.concatenate([[0.0], ratio[1:]]))
    log_sinc = _series_log1p(np.concatenate([[0.0], sinc[1:]]))
    return neg_cos, log_cot, log_sinc


def _series_exp(l: np.ndarray) -> np.ndarray:
    """exp of a power series with l[..., 0] = 0 via h_n = (1/n) sum k l_k h_{n-k}."""
    n = l.shape[-1]
    h = np.zeros_like(l)
    h[..., 0] = 1.0
    for m in range(1, n):
        k = np.arange(1, m + 1)
        h[..., m] = (k * l[..., k] * h[..., m - k]).sum(axis=-1) / m
    return h


def _branch_piece(alpha: float, tau: np.ndarray, x: np.ndarray, eps: np.ndarray,
                  vertical: bool) -> np.ndarray:
    """Integral of rho^{c-1} H(rho) over (0, eps), without the 2^{2 alpha} factor.

    ``H`` is the smooth part of the integrand at the branch point u = 0;
    ``vertical`` selects u = i rho (True) or u = rho real (False).
    Returns the value multiplied by exp(x) (the e^{-x} of H(0) removed).
    """
    neg_cos, log_cot, log_sinc = _branch_coefficients()
    n = neg_cos.size
    lcoef = (x[:, None] * neg_cos[None, :] + 2.0 * alpha * log_cot[None, :]
             + 2j * tau[:, None] * log_sinc[None, :]).astype(complex)
    lcoef[:, 0] = 0.0  # constant -x handled outside
    if not vertical:
        lcoef = lcoef * ((-1.0) ** np.arange(n))[None, :]
    h = _series_exp(lcoef)
    c = 1.0 - 2.0 * alpha + 2j * tau
    k = np.arange(n)
    expo = (c[:, None] + 2.0 * k[None, :]) * np.log(eps)[:, None]
    terms = h * np.exp(expo) / (c[:, None] + 2.0 * k[None, :])
    return terms.sum(axis=1)


def _branch_eps(alpha: float, tau: np.ndarray, x: np.ndarray) -> np.ndarray:
    size = np.abs(0.5 * x - alpha / 6.0) + tau / 3.0 + 1e-300
    return np.minimum(0.6, np.sqrt(0.3 / size))


def _log_coth_half(u: np.ndarray) -> np.ndarray:
    return np.log(1.0 / np.tanh(0.5 * u))


def _w_integrand_log(alpha: float, tau: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Complex log of exp(-x cosh u) coth(u/2)^{2 alpha} sinh(u)^{2 i tau}."""
    return (-x * np.cosh(u) + 2.0 * alpha * _log_coth_half(u)
            + 2j * tau * np.log(np.sinh(u)))


def _bucket(counts: np.ndarray, budget: int = 1 << 21):
    """Group indices by requested panel count, rounded up to a coarse ladder.

    The ladder steps by a quarter of the current power of two.  Groups are
    split so that no batch holds more than ``budget`` nodes.
    """
    c = np.maximum(counts, 4.0)
    step = 2.0 ** np.maximum(np.floor(np.log2(c)) - 2, 0)
    sizes = (np.ceil(c / step) * step).astype(int)
    for size in np.unique(sizes):
        idx = np.flatnonzero(sizes == size)
        step = max(1, budget // (int(size) * 16))
        for start in range(0, idx.size, step):
            yield int(size), idx[start:start + step]


def _chunked(func, *arrays, chunk: int = 4096):
    """Apply ``func`` to consecutive slices of equally long flat arrays."""
    n = arrays[0].size
    if n <= chunk:
        return func(*arrays)
    parts = [func(*(a[i:i + chunk] for a in arrays)) for i in range(0, n, chunk)]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def _graded_rule(phi, hi: np.ndarray, n_panels: int, iters: int = 48):
    """Panels with equal increments of an increasing function ``phi`` on [0, hi].

    ``phi(s, rows)`` is evaluated on a 2-d array ``s`` whose rows belong to the
    elements selected by ``rows``; ``phi(0) = 0`` is assumed.  Returns nodes
    and weights of shape ``(len(hi), 16 * n_panels)``.
    """
    rows = np.arange(hi.size)
    targets = phi(hi[:, None], rows)[:, :1] * (np.arange(1, n_panels) / n_panels)[None, :]
    a = np.zeros_like(targets)
    b = np.broadcast_to(hi[:, None], targets.shape).copy()
    for _ in range(iters):
        mid = 0.5 * (a + b)
        low = phi(mid, rows) < targets
        a = np.where(low, mid, a)
        b = np.where(low, b, mid)
    edges = np.concatenate([np.zeros((hi.size, 1)), 0.5 * (a + b), hi[:, None]], axis=1)
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    width = np.diff(edges, axis=1)
    nodes = (edges[:, :-1, None] + width[:, :, None] * gx[None, None, :]).reshape(hi.size, -1)
    weights = (width[:, :, None] * gw[None, None, :]).reshape(hi.size, -1)
    return nodes, weights


def _w_real_axis(alpha: float, tau: np.ndarray, x: np.ndarray) -> np.ndarray:
    """J * e^{x} along the real axis (J the u-integral)."""
    eps = _branch_eps(alpha, tau, x)
    near = (2.0 ** (2 * alpha)) * _branch_piece(alpha, tau, x, eps, vertical=False)
    upper = np.arccosh(1.0 + 45.0 / x)
    upper = np.maximum(upper, 2.0 * eps)
    lo, hi = np.log(eps), np.log(upper)
    phase = 2.0 * tau * (np.log(np.sinh(upper)) - np.log(np.sinh(eps)))
    counts = np.ceil(phase / math.pi) + 2.0 * (hi - lo) + 6
    out = near.astype(complex)
    for size, idx in _bucket(counts):
        s, w = _panel_rule_cached(size)
        span = (hi[idx] - lo[idx])[:, None]
        v = lo[idx][:, None] + span * s[None, :]
        u = np.exp(v)
        logf = _w_integrand_log(alpha, tau[idx][:, None], x[idx][:, None], u) + x[idx][:, None] + v
        out[idx] += span[:, 0] * (np.exp(logf) * w[None, :]).sum(axis=1)
    return out


def _w_rectangle(alpha: float, tau: np.ndarray, x: np.ndarray) -> np.ndarray:
    """J * e^{pi tau} along 0 -> i pi/2 -> S + i pi/2 -> S."""
    pi = math.pi
    # vertical segment u = i rho: i e^{-i pi alpha} e^{-pi tau} [ ... ]
    eps = _branch_eps(alpha, tau, x)
    eps = np.minimum(eps, 0.25 * pi)
    near = (2.0 ** (2 * alpha)) * _branch_piece(alpha, tau, x, eps, vertical=True) * np.exp(-x)
    lo, hi = np.log(eps), math.log(0.5 * pi)
    counts = np.ceil((2.0 * tau + 2.0 * abs(alpha)) * (hi - lo) / _PANEL_PHASE + (hi - lo)) + 2
    vert = near.astype(complex)
    for size, idx in _bucket(counts):
        s, w = _panel_rule_cached(size)
        span = (hi - lo[idx])[:, None]
        v = lo[idx][:, None] + span * s[None, :]
        rho = np.exp(v)
        logf = (-x[idx][:, None] * np.cos(rho) + 2.0 * alpha * np.log(1.0 / np.tan(0.5 * rho))
                + 2j * tau[idx][:, None] * np.log(np.sin(rho)) + v)
        vert[idx] += span[:, 0] * (np.exp(logf) * w[None, :]).sum(axis=1)
    vert = 1j * np.exp(-1j * pi * alpha) * vert

    # horizontal segment u = s + i pi/2, modulus e^{-pi tau} |coth|^{2 alpha} = e^{-pi tau}
    cosh_s = np.maximum(1.0 + 1e-12, (pi * tau + 40.0) / x)
    big_s = np.arccosh(cosh_s)
    def phi(sv, rows):
        return (x[rows, None] * np.sinh(sv) + 2.0 * tau[rows, None] * np.log(np.cosh(sv))
                + 2.0 * sv + math.pi * abs(alpha) * np.tanh(sv))

    counts = np.ceil(phi(big_s[:, None], np.arange(tau.size))[:, 0] / _PANEL_PHASE) + 2
    horiz = np.zeros(tau.shape, dtype=complex)
    for size, idx in _bucket(counts):
        sub_x, sub_t = x[idx], tau[idx]
        sv, w = _graded_rule(lambda v, r: phi(v, idx[r]), big_s[idx], size)
        u = sv + 0.5j * pi
        coth = 1.0 / np.tanh(0.5 * u)
        logf = (-1j * sub_x[:, None] * np.sinh(sv) + 2.0 * alpha * np.log(coth)
                + 2j * sub_t[:, None] * np.log(np.cosh(sv)))
        horiz[idx] = (np.exp(logf) * w).sum(axis=1)

    # drop u = S + i b, b from pi/2 to 0 (only the part near b = pi/2 matters)
    decay = x * cosh_s * (2.0 / pi) - 2.0 * tau
    dmax = np.minimum(0.5 * pi, 60.0 / np.maximum(decay, 1e-3) + 0.05)
    counts = np.ceil(x * np.sinh(big_s) * dmax / _PANEL_PHASE) + 2
    drop = np.zeros(tau.shape, dtype=complex)
    for size, idx in _bucket(counts):
        s, w = _panel_rule_cached(size)
        span = dmax[idx][:, None]
        beta = 0.5 * pi - span * s[None, :]
        u = big_s[idx][:, None] + 1j * beta
        logf = _w_integrand_log(alpha, tau[idx][:, None], x[idx][:, None], u) + pi * tau[idx][:, None]
        drop[idx] = -1j * span[:, 0] * (np.exp(logf) * w[None, :]).sum(axis=1)
    return vert + horiz + drop


def _w_saddle_height(tau: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Imaginary part of the saddle of -x cosh u + 2 i tau log sinh u, and its height."""
    r = tau / x
    c = np.where(r <= 1.0,
                 np.sqrt(np.maximum(0.0, 1.0 - r * r)) + 1j * r,
                 1j * (r + np.sqrt(np.maximum(0.0, r * r - 1.0))))
    u = np.arccosh(c.astype(complex))
    u = np.where(u.real < 0, -u, u)
    beta = np.minimum(np.abs(u.imag), 0.5 * math.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        height = np.real(-x * c + 2j * tau * np.log(np.sinh(u)))
    return beta, height


def _w_line(alpha: float, tau: np.ndarray, x: np.ndarray, beta: np.ndarray,
            offset: np.ndarray) -> np.ndarray:
    """J * e^{-offset} along 0 -> i beta -> i beta + inf (0 < beta < pi/2)."""
    pi = math.pi
    eps = np.minimum(_branch_eps(alpha, tau, x), 0.5 * beta)
    near = ((2.0 ** (2 * alpha)) * _branch_piece(alpha, tau, x, eps, vertical=True)
            * np.exp(-x - pi * tau - offset))
    lo, hi = np.log(eps), np.log(beta)
    counts = np.ceil((2.0 * tau + 2.0 * abs(alpha)) * (hi - lo) / _PANEL_PHASE + (hi - lo)) + 2
    vert = near.astype(complex)
    for size, idx in _bucket(counts):
        s, w = _panel_rule_cached(size)
        span = (hi[idx] - lo[idx])[:, None]
        v = lo[idx][:, None] + span * s[None, :]
        rho = np.exp(v)
        logf = (-x[idx][:, None] * np.cos(rho) + 2.0 * alpha * np.log(1.0 / np.tan(0.5 * rho))
                + 2j * tau[idx][:, None] * np.log(np.sin(rho)) + v
                - (pi * tau[idx] + offset[idx])[:, None])
        vert[idx] += span[:, 0] * (np.exp(logf) * w[None, :]).sum(axis=1)
    vert = 1j * np.exp(-1j * pi * alpha) * vert

    # horizontal line u = s + i beta, panels graded towards both ends
    cos_b, sin_b = np.cos(beta), np.sin(beta)
    cosh_s = np.maximum(2.0, (45.0 - offset) / (x * cos_b))
    big_s = np.arccosh(cosh_s)

    def phi(sv, rows):
        return (x[rows, None] * sin_b[rows, None] * np.sinh(sv)
                + 2.0 * tau[rows, None] * np.log(np.cosh(sv))
                + 2.0 * np.log1p(sv / beta[rows, None]) + 2.0 * sv
                + math.pi * abs(alpha) * np.tanh(sv / beta[rows, None]))

    counts = np.ceil(phi(big_s[:, None], np.arange(tau.size))[:, 0] / _PANEL_PHASE) + 2
    horiz = np.zeros(tau.shape, dtype=complex)
    for size, idx in _bucket(counts):
        sv, w = _graded_rule(lambda v, r: phi(v, idx[r]), big_s[idx], size)
        u = sv + 1j * beta[idx][:, None]
        logf = (-x[idx][:, None] * np.cosh(u) + 2.0 * alpha * np.log(1.0 / np.tanh(0.5 * u))
                + 2j * tau[idx][:, None] * np.log(np.sinh(u)) - offset[idx][:, None])
        horiz[idx] = (np.exp(logf) * w).sum(axis=1)
    return vert + horiz


def _w_series(alpha: float, tau: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sign and log of e^{pi tau/2} W_{alpha, i tau}(z) from the Kummer series of M.

    Uses W = 2 Re[Gamma(-2 i tau) / Gamma(1/2 - alpha - i tau) M_{alpha, i tau}(z)],
    accurate for small ``z`` and ``tau`` bounded away from zero.
    """
    a = 0.5 - alpha + 1j * tau
    b = 1.0 + 2j * tau
    c = np.ones(tau.shape, dtype=complex)
    acc = c.copy()
    for k in range(1, int(3 * np.max(z)) + 40):
        c = c * (a + k - 1) / ((b + k - 1) * k) * z
        acc = acc + c
    lg_conj = np.conj(loggamma(a))
    expo = (loggamma(1.0 - 2j * tau) - np.log(-2j * tau) - lg_conj + 0.5 * math.pi * tau
            + (0.5 + 1j * tau) * np.log(z) - 0.5 * z)
    re = np.real(np.exp(1j * expo.imag) * acc)
    with np.errstate(divide="ignore"):
        logm = expo.real + math.log(2.0) + np.log(np.abs(re))
    return np.sign(re), logm


def log_whittaker_w_im_scaled(alpha: float, tau, z) -> Tuple[np.ndarray, np.ndarray]:
    """Sign and log of ``exp(pi tau / 2) W_{alpha, i tau}(z)``.

    Parameters
    ----------
    alpha : float
        First index, below 1/2.
    tau, z : array_like
        Second index (imaginary part) and positive argument, broadcast.
    """
    if not alpha < 0.5:
        raise ValueError("whittaker_w_im requires alpha < 1/2")
    t_a, z_a = np.broadcast_arrays(np.abs(np.asarray(tau, float)), np.asarray(z, float))
    shape = t_a.shape
    t_a, z_a = t_a.ravel().copy(), z_a.ravel().copy()
    if np.any(z_a <= 0):
        raise ValueError("whittaker_w_im requires z > 0")
    sign, logm = _chunked(lambda t, z: _w_im_flat(alpha, t, z), t_a, z_a)
    return sign.reshape(shape), logm.reshape(shape)


def _w_im_flat(alpha: float, t_a: np.ndarray, z_a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x = 0.5 * z_a
    jval = np.empty(t_a.shape, dtype=complex)
    offset = np.empty(t_a.shape)
    beta, height = _w_saddle_height(t_a, x)
    series = (((z_a <= _W_SERIES_ZMAX) & (t_a >= 0.5))
              | ((t_a >= 0.5 * z_a) & (z_a <= 60.0) & (t_a >= 0.5))
              # cancellation near tau = 0 costs about log10(1/tau) digits
              | ((z_a <= 1.0) & (t_a >= 0.01)))
    real_axis = t_a == 0.0
    rect = (~real_axis) & (~series) & (beta > 0.5 * math.pi - 0.05)
    line = (~real_axis) & (~series) & (~rect)
    if real_axis.any():
        jval[real_axis] = _w_real_axis(alpha, t_a[real_axis], x[real_axis])
        offset[real_axis] = -x[real_axis]
    if rect.any():
        jval[rect] = _w_rectangle(alpha, t_a[rect], x[rect])
        offset[rect] = -math.pi * t_a[rect]
    if line.any():
        offset[line] = np.maximum(height[line], -x[line] * np.cos(beta[line]) - math.pi * t_a[line])
        jval[line] = _w_line(alpha, t_a[line], x[line], beta[line], offset[line])
    lg = loggamma(0.5 - alpha + 1j * t_a)
    jval[series] = 1.0
    offset[series] = 0.0
    expo_re = -lg.real + 0.5 * math.pi * t_a + offset
    expo_im = t_a * np.log(0.5 * x) - lg.imag
    re = np.real(np.exp(1j * expo_im) * jval)
    sign = np.sign(re)
    with np.errstate(divide="ignore"):
        logm = expo_re + np.log(np.abs(re)) + 0.5 * np.log(z_a)
    if series.any():
        sign[series], logm[series] = _w_series(alpha, t_a[series], z_a[series])
    return sign, logm


def whittaker_w_im(alpha: float, tau, z):
    """Whittaker function ``W_{alpha, i tau}(z)``.

    The argument is passed as is; kernels written in terms of ``W(2x)``
    should supply ``z = 2x``.

    Parameters
    ----------
    alpha : float
        First index, ``alpha < 1/2``.
    tau : float or array_like
        Imaginary part of the second index (even function of ``tau``).
    z : float or array_like
        Positive argument.

    Examples
    --------
    >>> w = whittaker_w_im(0.0, 1.0, 2.0)
    >>> k = bessel_k_im(1.0, 1.0)
    >>> abs(w - math.sqrt(2.0 / math.pi) * k) < 1e-12
    True
    """
    scalar = np.ndim(tau) == 0 and np.ndim(z) == 0
    s, lm = log_whittaker_w_im_scaled(alpha, tau, z)
    t_a = np.abs(np.broadcast_to(np.asarray(tau, float), s.shape))
    with np.errstate(under="ignore"):
        val = s * np.exp(lm - 0.5 * math.pi * t_a)
    return _out(val, scalar)


def _whittaker_w_im_naive(alpha: float, tau: float, z: float) -> float:
    """Real-axis quadrature of the Laplace-type integral (test reference).

    Valid for either sign of ``tau``; loses ``exp(-pi |tau|)`` relative
    accuracy, so only moderate ``tau`` are meaningful.
    """
    from .quad import QuadSpec, integrate

    x = 0.5 * z
    a = 0.5 - alpha + 1j * tau

    def f(t: np.ndarray, part: int) -> np.ndarray:
        # xi = 1 + 2 t^2 substitution removes the (xi - 1)^{-1/2 - alpha} singularity
        val = (np.exp(-x * (2 * t * t) + 1j * tau * np.log(4 * t * t * (1 + t * t)))
               * (2 * t * t) ** (-0.5 - alpha) * (2 + 2 * t * t) ** (-0.5 + alpha) * 4 * t)
        return val.real if part == 0 else val.imag

    spec = QuadSpec(rel_tol=1e-13, abs_tol=1e-300)
    re = integrate(lambda t: f(t, 0), 0.0, np.inf, spec).value
    im = integrate(lambda t: f(t, 1), 0.0, np.inf, spec).value
    j = (re + 1j * im) * math.exp(-x)
    pref = np.exp(1j * tau * math.log(0.5 * x) - loggamma(a))
    return float(math.sqrt(z) * (pref * j).real)


# ---------------------------------------------------------------------------
# Whittaker functions with real second index (resolvent kernels)


def log_whittaker_w(alpha: float, sigma, z):
    """``log W_{alpha, sigma}(z)`` for real ``sigma >= 0`` with ``1/2 + sigma - alpha > 0``.

    Uses ``W = z^{sigma + 1/2} e^{-z/2} U(a, b, z)`` and the positive
    Laplace integral for ``U``.
    """
    scalar, (s_a, z_a, shape) = _prep(sigma, z)
    a = 0.5 + s_a - alpha
    b = 1.0 + 2.0 * s_a
    if np.any(a <= 0):
        raise ValueError("need 1/2 + sigma - alpha > 0")
    # U(a,b,z) Gamma(a) = z^{-a} int_0^inf e^{-s} s^{a-1} (1 + s/z)^{b-a-1} ds
    h = 1.0 / 64.0
    tk = np.arange(-int(5.0 / h), int(4.0 / h) + 1) * h
    e = np.exp(0.5 * math.pi * np.sinh(tk))
    w = h * 0.5 * math.pi * np.cosh(tk) * e
    sv = e[None, :]
    logf = (-sv + (a[:, None] - 1.0) * np.log(sv)
            + (b - a - 1.0)[:, None] * np.log1p(sv / z_a[:, None]))
    peak = np.max(logf, axis=1)
    integral = (np.exp(logf - peak[:, None]) * w[None, :]).sum(axis=1)
    log_u = -a * np.log(z_a) + peak + np.log(integral) - _lgamma(a)
    out = (s_a + 0.5) * np.log(z_a) - 0.5 * z_a + log_u
    return _out(out.reshape(shape), scalar)


def whittaker_w(alpha: float, sigma, z):
    """Whittaker ``W_{alpha, sigma}(z)`` for real ``sigma``."""
    return np.exp(log_whittaker_w(alpha, sigma, z))


def log_whittaker_m(alpha: float, sigma, z):
    """``log M_{alpha, sigma}(z)`` for real ``sigma`` with positive Kummer parameters."""
    scalar, (s_a, z_a, shape) = _prep(sigma, z)
    a = 0.5 + s_a - alpha
    b = 1.0 + 2.0 * s_a
    if np.any(a <= 0):
        raise ValueError("need 1/2 + sigma - alpha > 0")
    kmax = int(2.0 * np.max(z_a)) + 80
    k = np.arange(kmax)[:, None]
    # log of (a)_k/(b)_k z^k/k!
    logt = (_lgamma(a[None, :] + k) - _lgamma(a)[None, :] - _lgamma(b[None, :] + k)
            + _lgamma(b)[None, :] + k * np.log(z_a)[None, :] - _lgamma(k + 1.0))
    peak = logt.max(axis=0)
    log_m = peak + np.log(np.exp(logt - peak).sum(axis=0))
    out = -0.5 * z_a + (0.5 + s_a) * np.log(z_a) + log_m
    return _out(out.reshape(shape), scalar)


def whittaker_m(alpha: float, sigma, z):
    """Whittaker ``M_{alpha, sigma}(z)`` for real ``sigma``."""
    return np.exp(log_whittaker_m(alpha, sigma, z))


# ---------------------------------------------------------------------------
# Associated Legendre functions


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, mu: float) -> Tuple[np.ndarray, np.ndarray]:
    s, w = roots_jacobi(n, mu - 0.5, 0.0)
    return s, w


def _legendre_core(mu: float, kind: str, param: np.ndarray, x: np.ndarray) -> np.ndarray:
    eta = np.arccosh(x)
    if kind == "im":
        counts = 0.6 * param * eta + 24.0
    else:
        counts = np.full(param.shape, 32.0)
    out = np.empty(param.shape)
    pref = math.sqrt(2.0 / math.pi) / math.gamma(mu + 0.5)
    for size, idx in _bucket(np.maximum(counts, 32.0)):
        s, w = _jacobi_rule(size, float(mu))
        e = eta[idx][:, None]
        t = 0.5 * e * (1.0 + s[None, :])
        half_gap = 0.25 * e * (1.0 - s[None, :])        # (eta - t)/2
        # (cosh eta - cosh t)/(eta - t) = sinh((eta+t)/2) * sinh(g)/g with g = (eta - t)/2
        sinhc = np.where(half_gap < 1e-8, 1.0 + half_gap ** 2 / 6.0,
                         np.sinh(half_gap) / np.where(half_gap == 0, 1.0, half_gap))
        smooth = np.sinh(0.5 * (e + t)) * sinhc
        if kind == "im":
            osc = np.cos(param[idx][:, None] * t)
        else:
            osc = np.cosh(param[idx][:, None] * t)
        integrand = osc * smooth ** (mu - 0.5)
        integral = (integrand * w[None, :]).sum(axis=1) * (0.5 * eta[idx]) ** (mu + 0.5)
        out[idx] = pref * np.sinh(eta[idx]) ** (-mu) * integral
    return out


def legendre_p_im(mu: float, tau, x):
    """Conical function ``P^{-mu}_{-1/2 + i tau}(x)`` for ``x > 1``.

    Computed from the finite Laplace-Mehler integral

        sqrt(2/pi) sinh(eta)^{-mu} / Gamma(mu + 1/2)
            * int_0^eta cos(tau t) (cosh eta - cosh t)^{mu - 1/2} dt,

    with ``x = cosh eta``.  The integrand has no exponentially large parts,
    so the result keeps full relative accuracy for large ``tau``.

    Examples
    --------
    >>> xi = 1.0
    >>> p = legendre_p_im(0.5, 1.0, math.cosh(xi))
    >>> ref = math.sqrt(2 / (math.pi * math.sinh(xi))) * math.sin(xi)
    >>> abs(p - ref) < 1e-12
    True
    """
    if not 0.0 <= mu < 1.0:
        raise ValueError("legendre_p_im requires 0 <= mu < 1")
    scalar, (t_a, x_a, shape) = _prep(np.abs(np.asarray(tau, float)), x)
    if np.any(x_a <= 1.0):
        raise ValueError("legendre_p_im requires x > 1")
    out = _legendre_core(float(mu), "im", t_a, x_a)
    return _out(out.reshape(shape), scalar)


def legendre_p_real(mu: float, sigma, x):
    """``P^{-mu}_{-1/2 + sigma}(x)`` for real ``sigma`` and ``x > 1``."""
    if not 0.0 <= mu < 1.0:
        raise ValueError("legendre_p_real requires 0 <= mu < 1")
    scalar, (s_a, x_a, shape) = _prep(sigma, x)
    if np.any(x_a <= 1.0):
        raise ValueError("legendre_p_real requires x > 1")
    out = _legendre_core(float(mu), "real", s_a, x_a)
    return _out(out.reshape(shape), scalar)


def _legendre_p_im_cosine(mu: float, tau: float, x: float) -> float:
    """Reference value from ``int_0^inf cos(tau xi) (x + cosh xi)^{-mu-1/2} dxi``.

    This form carries an ``exp(-pi tau)`` cancellation and is kept only as a
    test oracle for moderate ``tau``.
    """
    from .quad import QuadSpec, integrate

    upper = math.acosh(max(1e40 ** (1.0 / (mu + 0.5)), 2.0))
    spec = QuadSpec(rel_tol=1e-13, abs_tol=1e-17, oscillation_hint=tau or None)
    r = integrate(lambda xi: np.cos(tau * xi) * (x + np.cosh(xi)) ** (-mu - 0.5), 0.0, upper, spec)
    pref = math.sqrt(2.0 / math.pi) * math.gamma(mu + 0.5) * (x * x - 1.0) ** (0.5 * mu)
    return pref * r.value / gamma_abs2(0.5 + mu, tau)
