"""Yor integrals, their generalized versions and the Hartman-Watson density.

The classical integral

    theta(t, x) = x exp(pi^2 / 2t) / sqrt(2 pi^3 t)
                  * int_0^inf exp(-xi^2 / 2t - x cosh xi) sinh xi sin(pi xi / t) dxi

equals ``(1/pi^2) int_0^inf exp(-tau^2 t / 2) K_{i tau}(x) tau sinh(pi tau) dtau``.
The generalized integral of a family is the inverse transform of
``exp(-t lambda(tau))``::

    vartheta(t, x) = c(x) int_0^inf exp(-t lambda(tau)) k(tau, X) rho(tau) dtau

with the same coordinates as the heat kernels (``X = 2x`` and
``c = (2 pi x)^{-1/2}`` for IW, ``X = x`` and ``c = 1`` otherwise).  With these
conventions ``theta(t, x) = vartheta_KL(t/2, x) / 2``.

Elementary representations carry a factor ``exp(pi^2 / 2t)`` (classical) or
``exp(pi^2 / 4t)`` (MF) that cancels against an oscillatory integral; the
estimated loss of relative accuracy is checked and reported.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from . import specfun
from ._io import text_output
from .heat import _rule_for, _state_rule, heat_kernel_matrix, operator_for
from .quad import gauss_legendre
from .transforms import ConvergenceError, KontorovichLebedev, TransformFamily, _kernel_matrix

__all__ = [
    "ClassicalTheta",
    "CLASSICAL_THETA",
    "UnsupportedRepresentationError",
    "YorEval",
    "yor_theta",
    "yor_generalized",
    "yor_generalized_grid",
    "hartman_watson_density",
    "hartman_watson_mass",
    "yor_pde_residual",
    "evolution_residual",
    "write_yor_csv",
]

_SMALL_T = 0.05
_REPRESENTATIONS = ("spectral", "elementary")


class UnsupportedRepresentationError(ValueError):
    """Raised when no elementary form is available for a family."""


@dataclass(frozen=True)
class ClassicalTheta:
    """Marker for the classical Yor integral ``theta``."""

    name: str = "theta"


CLASSICAL_THETA = ClassicalTheta()


@dataclass(frozen=True)
class YorEval:
    """A single Yor-integral evaluation request."""

    family: Union[TransformFamily, ClassicalTheta]
    t: float
    x: float
    representation: str = "spectral"

    def __post_init__(self) -> None:
        if not self.t > 0:
            raise ValueError("t must be positive")
        if self.representation not in _REPRESENTATIONS:
            raise ValueError(f"representation must be one of {_REPRESENTATIONS}")
        if isinstance(self.family, ClassicalTheta):
            if not self.x > 0:
                raise ValueError("x must be positive")
            return
        self.family.check_point([self.x])
        if self.representation == "elementary" and self.family.tag == "iw":
            raise UnsupportedRepresentationError("no elementary representation is available for the index Whittaker family")

    def value(self) -> float:
        if isinstance(self.family, ClassicalTheta):
            return yor_theta(self.t, self.x, self.representation)
        return yor_generalized(self.family, self.t, self.x, self.representation)


# ---------------------------------------------------------------------------
# Spectral side


def _spectral_parts(family: TransformFamily, ts, xs, refine: int = 1):
    """Spectral ``vartheta`` on ``ts x xs`` with the sum of absolute terms."""
    ta = np.atleast_1d(np.asarray(ts, dtype=float))
    xa = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(ta <= 0):
        raise ValueError("t must be positive")
    family.check_point(xa)
    growth = 0.0 if family.tag == "mf" else 0.5 * math.pi
    nodes, weights = _rule_for(family, float(np.min(ta)), xa, refine, growth)
    args = 2.0 * xa if family.tag == "iw" else xa
    kern = _kernel_matrix(family, nodes, args)
    # one scaled kernel against the scaled density leaves exp(shift)
    dens = family.density_scaled(nodes) * np.exp(family.shift(nodes)) * weights
    decay = np.exp(-ta[:, None] * family.eigenvalue(nodes)[None, :]) * dens[None, :]
    out = decay @ kern
    mag = np.abs(decay) @ np.abs(kern)
    if family.tag == "iw":
        scale = 1.0 / np.sqrt(2.0 * math.pi * xa)[None, :]
        out, mag = out * scale, mag * scale
    return out, mag


def yor_generalized_grid(family: TransformFamily, ts, xs, refine: int = 1) -> np.ndarray:
    """Spectral ``vartheta`` on the grid ``ts x xs`` (shape ``(len(ts), len(xs))``)."""
    return _spectral_parts(family, ts, xs, refine)[0]


def _spectral_checked(family: TransformFamily, t: float, x: float, rel_tol: float = 1e-9) -> float:
    """Spectral value checked against a refined rule.

    Small ``t`` makes the integrand peak far above the result; when round-off
    from that cancellation exceeds ``rel_tol`` an AccuracyWarning is issued.
    """
    coarse = float(yor_generalized_grid(family, t, x)[0, 0])
    fine_arr, mag = _spectral_parts(family, t, x, refine=2)
    fine = float(fine_arr[0, 0])
    noise = 64.0 * np.finfo(float).eps * float(mag[0, 0])
    if abs(fine - coarse) > rel_tol * abs(fine) + noise:
        raise ConvergenceError(f"spectral Yor integral not converged at t={t}, x={x}")
    if noise > rel_tol * abs(fine):
        warnings.warn(f"cancellation limits the spectral Yor integral at t={t}, x={x} "
                      f"to absolute accuracy {noise:.1e}", specfun.AccuracyWarning, stacklevel=3)
    return fine


# ---------------------------------------------------------------------------
# Elementary side


def _oscillatory_sum(integrand, t_scale: float, upper: float, refine: int):
    """GL panels of width ``min(t_scale, 0.5)`` on ``[0, upper]``; returns sum and abs-sum."""
    width = min(t_scale, 0.5) / refine
    n = max(4, int(math.ceil(upper / width)))
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    edges = np.linspace(0.0, upper, n + 1)
    h = np.diff(edges)
    xi = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
    w = (h[:, None] * gw[None, :]).ravel()
    vals = integrand(xi) * w
    return math.fsum(vals), float(np.sum(np.abs(vals)))


def _elementary(integrand, log_prefactor: float, t_scale: float, upper: float, rel_tol: float) -> float:
    s1, a1 = _oscillatory_sum(integrand, t_scale, upper, 1)
    s2, _ = _oscillatory_sum(integrand, t_scale, upper, 2)
    value = s2 * math.exp(log_prefactor)
    cond_err = 64.0 * np.finfo(float).eps * a1 * math.exp(log_prefactor)
    quad_err = abs(s1 - s2) * math.exp(log_prefactor)
    if max(cond_err, quad_err) > rel_tol * abs(value):
        raise ConvergenceError(
            f"elementary representation lost accuracy (estimated error {max(cond_err, quad_err):.2e}, value {value:.3e})")
    return value


def _upper_limit(t: float, x: float, shift: float, denom: float) -> float:
    # first xi with xi^2/denom + x cosh xi - xi beyond the cancellation budget
    budget = shift + 60.0
    xi = 1.0
    while xi * xi / denom + x * math.cosh(xi) - xi < budget:
        xi *= 1.25
    return xi


def _theta_real_axis(t: float, x: float, rel_tol: float) -> float:
    lead = math.pi ** 2 / (2.0 * t)

    def integrand(xi):
        return np.exp(-xi * xi / (2.0 * t) - x * np.cosh(xi) + np.log(np.sinh(np.maximum(xi, 1e-300)))) \
            * np.sin(math.pi * xi / t)

    log_pref = math.log(x) + lead - 0.5 * math.log(2.0 * math.pi ** 3 * t)
    return _elementary(integrand, log_pref, t, _upper_limit(t, x, lead, 2.0 * t), rel_tol)


def _saddle_abscissa(t: float, x: float) -> float:
    """Minimizer of ``-u^2/2t + x cosh u`` over ``u >= 0``."""
    if x * t >= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while x * math.sinh(hi) < hi / t:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if x * math.sinh(mid) < mid / t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _theta_contour(t: float, x: float, rel_tol: float) -> float:
    """Elementary integral along ``U + i eta`` (eta from pi to pi/2), then ``u + i pi/2``.

    The integrand times ``exp(pi^2/2t)`` is real on the lines ``Im xi = 0`` and
    ``Im xi = pi``, so only this path contributes to the imaginary part and the
    large prefactor never multiplies a cancelling sum.
    """
    big_u = _saddle_abscissa(t, x)

    def g(xi):
        return np.exp(-xi * xi / (2.0 * t) + 1j * math.pi * xi / t + math.pi ** 2 / (2.0 * t)
                      - x * np.cosh(xi)) * np.sinh(xi)

    gx, gw = gauss_legendre(16, 0.0, 1.0)

    def path_sum(refine: int):
        # vertical leg, eta from pi/2 to pi: phase rate about U/t + x sinh U
        rate = big_u / t + x * math.sinh(big_u) + 1.0
        n_v = max(2, int(math.ceil(0.5 * math.pi * rate / math.pi))) * refine
        edges = np.linspace(0.5 * math.pi, math.pi, n_v + 1)
        h = np.diff(edges)
        eta = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
        w = (h[:, None] * gw[None, :]).ravel()
        vert = -1j * g(big_u + 1j * eta) * w
        # horizontal leg with panels carrying at most pi of phase pi u/2t - x sinh u
        top = -big_u * big_u / (2.0 * t) + x * math.cosh(big_u)
        u_end = math.sqrt(max(big_u ** 2, 2.0 * t * (math.pi ** 2 / (8.0 * t) - top + 45.0)))
        edges_h = [big_u]
        while edges_h[-1] < u_end:
            u0 = edges_h[-1]
            width = min(0.5 * math.sqrt(t), math.pi / (abs(math.pi / (2.0 * t)) + x * math.cosh(u0 + 0.5) + 1.0))
            edges_h.append(min(u_end, u0 + width / refine))
        edges_h = np.array(edges_h)
        h = np.diff(edges_h)
        u = (edges_h[:-1, None] + h[:, None] * gx[None, :]).ravel()
        w = (h[:, None] * gw[None, :]).ravel()
        horiz = g(u + 0.5j * math.pi) * w
        terms = np.concatenate([vert, horiz]).imag
        return math.fsum(terms), float(np.sum(np.abs(terms)))

    s1, _ = path_sum(1)
    s2, mag = path_sum(2)
    pref = x / math.sqrt(2.0 * math.pi ** 3 * t)
    value = pref * s2
    err = pref * max(abs(s1 - s2), 64.0 * np.finfo(float).eps * mag)
    if err > rel_tol * abs(value):
        raise ConvergenceError(f"contour form of theta not converged (estimated error {err:.2e}, value {value:.3e})")
    return value


def _theta_elementary(t: float, x: float, rel_tol: float) -> float:
    # the real-axis sum loses about pi^2/2t nats; deform the path once that matters
    if math.pi ** 2 / (2.0 * t) <= 8.0:
        return _theta_real_axis(t, x, rel_tol)
    return _theta_contour(t, x, rel_tol)


def _mf_elementary(mu: float, t: float, x: float, rel_tol: float) -> float:
    lead = math.pi ** 2 / (4.0 * t)
    freq = math.pi / (2.0 * t)

    def integrand(xi):
        return (np.exp(-xi * xi / (4.0 * t) - (mu + 0.5) * np.log(x + np.cosh(xi)))
                * (math.pi * np.cos(freq * xi) - xi * np.sin(freq * xi)))

    # the 1/pi carried by the spectral density is kept here
    log_pref = (-1.5 * math.log(2.0 * t) + math.lgamma(mu + 0.5) + 0.5 * mu * math.log(x * x - 1.0)
                + lead - 0.25 * t - math.log(math.pi))
    upper = 2.0 * math.sqrt(t * (lead + 60.0))
    return _elementary(integrand, log_pref, 2.0 * t, upper, rel_tol)


# ---------------------------------------------------------------------------
# Public evaluation


def _resolve_representation(t: float, representation: str, tag: str = "kl") -> str:
    if representation not in _REPRESENTATIONS:
        raise ValueError(f"representation must be one of {_REPRESENTATIONS}")
    # KL switches to a deformed path at small t; only MF lacks one
    if representation == "elementary" and tag == "mf" and t < _SMALL_T:
        warnings.warn("elementary MF Yor integrand oscillates too fast below t = 0.05; using the spectral form",
                      specfun.AccuracyWarning, stacklevel=3)
        return "spectral"
    return representation


def yor_theta(t: float, x: float, representation: str = "spectral", rel_tol: float = 1e-8) -> float:
    """Classical Yor integral ``theta(t, x)``.

    Parameters
    ----------
    t, x : float
        Positive time and argument.
    representation : {"spectral", "elementary"}
        The elementary integral moves to a deformed path once
        ``pi^2 / 2t > 8``, so it stays accurate at small ``t`` where the
        spectral sum cancels.
    rel_tol : float
        Accuracy demanded of the elementary quadrature.

    Examples
    --------
    >>> round(yor_theta(1.0, 1.0), 12)
    0.739076531303
    """
    YorEval(CLASSICAL_THETA, t, x, representation)
    rep = _resolve_representation(t, representation)
    if rep == "elementary":
        return _theta_elementary(t, x, rel_tol)
    return 0.5 * _spectral_checked(KontorovichLebedev(), 0.5 * t, x)


def yor_generalized(family: TransformFamily, t: float, x: float, representation: str = "spectral",
                    rel_tol: float = 1e-8) -> float:
    """Generalized Yor integral ``vartheta(t, x)`` of a transform family.

    An elementary form exists for KL (through ``theta``) and for MF; asking
    for it with IW raises :class:`UnsupportedRepresentationError`.  MF
    elementary requests below ``t = 0.05`` fall back to the spectral form
    with an :class:`~spectralindex.specfun.AccuracyWarning`.
    """
    YorEval(family, t, x, representation)
    rep = _resolve_representation(t, representation, family.tag)
    if rep == "spectral":
        return _spectral_checked(family, t, x)
    if family.tag == "kl":
        return 2.0 * _theta_elementary(2.0 * t, x, rel_tol)
    return _mf_elementary(family.mu, t, x, rel_tol)


# ---------------------------------------------------------------------------
# Hartman-Watson law


def hartman_watson_density(t: float, x: float) -> float:
    """``theta(t, x) / I_0(x)``, the Hartman-Watson density in ``t``.

    ``theta`` is taken from the elementary integral on a deformed path, which
    keeps full relative accuracy where the density is tiny (small ``t``).
    """
    if not (t > 0 and x > 0):
        raise ValueError("t and x must be positive")
    return _theta_elementary(t, x, 1e-8) / specfun.bessel_i(0.0, x)


def _theta_tail(t_cut: float, x: float) -> float:
    """``int_{t_cut}^inf theta(t, x) dt`` in spectral form."""
    fam = KontorovichLebedev()
    nodes, weights = _rule_for(fam, 0.5 * t_cut, np.array([x]), 2, 0.5 * math.pi)
    kern = _kernel_matrix(fam, nodes, np.array([x]))[:, 0]
    # (2/pi^2) exp(-tau^2 T/2) K sinh(pi tau) / tau, written with the scaled density
    dens = fam.density_scaled(nodes) * np.exp(fam.shift(nodes)) / np.maximum(nodes, 1e-300) ** 2
    return float(np.sum(weights * np.exp(-0.5 * t_cut * nodes ** 2) * dens * kern))


def hartman_watson_mass(x: float, t_cut: float = 4.0, t_lo: float = 0.1) -> float:
    """Total mass of the Hartman-Watson density with parameter ``x``.

    The density is integrated on ``[t_lo, t_cut]`` in ``log t``; the tail
    beyond ``t_cut`` is integrated in closed form over ``t`` inside the
    spectral representation.  Below ``t_lo`` the density is treated as zero;
    a warning is issued when its value at ``t_lo`` is not negligible.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    edges = np.linspace(math.log(t_lo), math.log(t_cut), 25)
    h = np.diff(edges)
    u = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
    w = (h[:, None] * gw[None, :]).ravel()
    ts = np.concatenate([[t_lo], np.exp(u)])
    theta = 0.5 * yor_generalized_grid(KontorovichLebedev(), 0.5 * ts, np.array([x]))[:, 0]
    i0 = specfun.bessel_i(0.0, x)
    if abs(theta[0]) * t_lo / i0 > 1e-8:
        warnings.warn(f"Hartman-Watson density is not negligible at t = {t_lo}", specfun.AccuracyWarning, stacklevel=2)
    body = float(np.sum(w * ts[1:] * theta[1:]))
    return (body + _theta_tail(t_cut, x)) / i0


# ---------------------------------------------------------------------------
# Residual checks


def yor_pde_residual(family: TransformFamily, t: float, x: float, h_t: float = 1e-3, h_x: float = 1e-3) -> float:
    """Normalized residual of ``d/dt vartheta = (1/r)[(p vartheta')' - q vartheta]``."""
    if t <= 2 * h_t:
        raise ValueError("t must exceed 2 h_t")
    op = operator_for(family)
    ts = np.array([t - h_t, t - 0.5 * h_t, t, t + 0.5 * h_t, t + h_t])
    xs = np.array([x - h_x, x - 0.5 * h_x, x, x + 0.5 * h_x, x + h_x])
    grid = yor_generalized_grid(family, ts, xs)
    centre = grid[2, 2]
    dt = (4.0 * (grid[3, 2] - grid[1, 2]) / h_t - (grid[4, 2] - grid[0, 2]) / (2 * h_t)) / 3.0

    def gen(k: int, hh: float) -> float:
        flux_p = op.p(x + 0.5 * hh) * (grid[2, 2 + k] - centre) / hh
        flux_m = op.p(x - 0.5 * hh) * (centre - grid[2, 2 - k]) / hh
        return float(((flux_p - flux_m) / hh - op.q(x) * centre) / op.r(x))

    lx = (4.0 * gen(1, 0.5 * h_x) - gen(2, h_x)) / 3.0
    return abs(dt - lx) / (abs(centre) + 1e-300)


def evolution_residual(family: TransformFamily, t: float, s: float, x: float) -> float:
    """``|vartheta(t+s, x) - int p_r(t, x, xi) vartheta(s, xi) r(xi) dxi|``."""
    if t <= 0 or s <= 0:
        raise ValueError("times must be positive")
    family.check_point([x])
    centre = 0.0 if family.tag == "mf" else round(math.log(x))
    xis, wr = _state_rule(family.tag, centre)
    kern = heat_kernel_matrix(family, t, np.array([x]), xis, t_min=min(t, s))[0, 0]
    theta_s = yor_generalized_grid(family, s, xis)[0]
    composed = float(np.dot(kern * theta_s, wr))
    direct = float(yor_generalized_grid(family, t + s, np.array([x]))[0, 0])
    return abs(direct - composed)


def write_yor_csv(path, family: Union[TransformFamily, ClassicalTheta], ts: Iterable[float],
                  xs: Iterable[float], representations: Optional[Iterable[str]] = None) -> None:
    """Write ``t, x, value, representation`` rows."""
    reps = list(representations or ["spectral"])
    ts, xs = list(ts), list(xs)
    with text_output(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "x", "value", "representation"])
        for rep in reps:
            for tt in ts:
                for xx in xs:
                    val = YorEval(family, tt, xx, rep).value()
                    wr.writerow([f"{tt:.17g}", f"{xx:.17g}", f"{val:.17g}", rep])
