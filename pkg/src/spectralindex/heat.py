"""Spectral heat kernels and resolvent kernels of the three index operators.

The operators act as ``-L u = (1/r) [(p u')' - q u]`` with

======  ===========  ====================  =======  ==============
family  p            q                     r        interval
======  ===========  ====================  =======  ==============
KL      x            x                     1/x      (0, inf)
IW      x            (x - alpha)^2 / x     1/x      (0, inf)
MF      x^2 - 1      mu^2 / (x^2 - 1)      1        (1, inf)
======  ===========  ====================  =======  ==============

Heat kernels are returned with respect to ``r(y) dy`` unless the Lebesgue
measure is requested.  All kernels are evaluated as

    p_r(t, x, y) = c(x, y) * int_0^inf exp(-t lambda(tau)) k(tau, X) k(tau, Y) rho(tau) dtau

with the scaled kernels and densities of :mod:`spectralindex.transforms`,
``X = x`` for KL and MF, ``X = 2x`` for IW, and ``c = 1/(2 sqrt(x y))`` for IW
(one otherwise).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from . import specfun
from ._io import text_output
from .quad import QuadSpec, gauss_legendre, integrate
from .transforms import ConvergenceError, TransformFamily, _kernel_matrix

__all__ = [
    "SLOperator",
    "HeatKernelSpec",
    "operator_for",
    "heat_kernel",
    "heat_kernel_matrix",
    "heat_tau_rule",
    "mf_half_closed_form",
    "total_mass",
    "total_mass_grid",
    "chapman_kolmogorov_residual",
    "pde_residual",
    "resolvent_kernel",
    "laplace_transform_heat",
    "monotonicity_gap",
    "write_heat_csv",
]


@dataclass(frozen=True)
class SLOperator:
    """Sturm-Liouville operator ``-(1/r)[(p u')' - q u]`` on ``(a, b)``."""

    p: Callable[[np.ndarray], np.ndarray]
    q: Callable[[np.ndarray], np.ndarray]
    r: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float
    family: Optional[TransformFamily] = None
    labels: Optional[tuple[str, str, str]] = None

    def killing_rate(self, x):
        """``k(x) = q(x) / r(x)``."""
        return self.q(x) / self.r(x)

    def check(self, xs: Sequence[float]) -> None:
        xs = np.asarray(xs, dtype=float)
        if np.any(xs <= self.a) or np.any(xs >= self.b):
            raise ValueError("points outside the operator interval")
        if np.any(self.p(xs) <= 0) or np.any(self.r(xs) <= 0) or np.any(self.q(xs) < 0):
            raise ValueError("require p, r > 0 and q >= 0")

    def generator(self, u: Callable, x: float, h: float = 1e-3) -> float:
        """``(1/r)[(p u')' - q u]`` at ``x`` by central differences (Richardson-refined)."""
        def once(hh: float) -> float:
            xp, xm = x + hh, x - hh
            flux_p = self.p(x + 0.5 * hh) * (u(xp) - u(x)) / hh
            flux_m = self.p(x - 0.5 * hh) * (u(x) - u(xm)) / hh
            return float(((flux_p - flux_m) / hh - self.q(x) * u(x)) / self.r(x))

        return (4.0 * once(0.5 * h) - once(h)) / 3.0


def operator_for(family: TransformFamily) -> SLOperator:
    """The Sturm-Liouville operator diagonalized by ``family``."""
    if family.tag == "kl":
        return SLOperator(lambda x: x, lambda x: x, lambda x: 1.0 / x, 0.0, math.inf, family,
                          ("x", "x", "1/x"))
    if family.tag == "iw":
        al = family.alpha
        return SLOperator(lambda x: x, lambda x: (x - al) ** 2 / x, lambda x: 1.0 / x, 0.0, math.inf, family,
                          ("x", f"(x - ({al!r}))**2/x", "1/x"))
    mu = family.mu
    return SLOperator(lambda x: x * x - 1.0, lambda x: mu * mu / (x * x - 1.0),
                      lambda x: np.ones_like(np.asarray(x, dtype=float)), 1.0, math.inf, family,
                      ("x**2 - 1", f"{mu * mu!r}/(x**2 - 1)", "1"))


@dataclass(frozen=True)
class HeatKernelSpec:
    """Family, time and measure of a heat-kernel evaluation."""

    family: TransformFamily
    t: float
    measure: str = "r"

    def __post_init__(self) -> None:
        if not self.t > 0:
            raise ValueError("t must be positive")
        if self.measure not in ("r", "lebesgue"):
            raise ValueError("measure must be 'r' or 'lebesgue'")


# ---------------------------------------------------------------------------
# tau rule


def _kernel_args(family: TransformFamily, x: np.ndarray) -> np.ndarray:
    return 2.0 * x if family.tag == "iw" else x


def _oscillation(family: TransformFamily, pts: np.ndarray, tau_max: float) -> float:
    """Bound on the tau-frequency of the kernels at the given points."""
    if family.tag == "mf":
        return float(np.max(np.arccosh(pts))) + 1.0
    args = _kernel_args(family, pts)
    return float(np.max(np.abs(np.log(2.0 * (tau_max + 1.0) / args)))) + 1.0


def _gaussian_cutoff(t: float, tol: float = 1e-15, growth: float = 0.0) -> float:
    """Root of ``t tau^2 - growth tau = log(1/tol) + 10``.

    Scaled heat integrands grow at most polynomially (``growth = 0``); a
    single scaled kernel leaves a factor ``exp(growth tau)``.
    """
    level = math.log(1.0 / tol) + 10.0
    return max(8.0, (growth + math.sqrt(growth * growth + 4.0 * t * level)) / (2.0 * t))


@lru_cache(maxsize=64)
def heat_tau_rule(tau_max: float, omega: float, refine: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on ``[0, tau_max]``.

    Geometric panels resolve ``[0, 2]`` (the whole integrand for large t),
    then uniform panels carry at most ``4 pi`` of kernel phase each.
    """
    width = min(2.0, 4.0 * math.pi / omega) / refine
    head = [0.0] + list(np.geomspace(0.02, min(2.0, tau_max), 8 * refine))
    start = head[-1]
    n_uni = int(math.ceil((tau_max - start) / width)) if tau_max > start else 0
    edges = np.array(head + list(np.linspace(start, tau_max, n_uni + 1)[1:]))
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    h = np.diff(edges)
    return ((edges[:-1, None] + h[:, None] * gx[None, :]).ravel(),
            (h[:, None] * gw[None, :]).ravel())


def _rule_for(family: TransformFamily, t_min: float, pts: np.ndarray, refine: int = 1,
              growth: float = 0.0):
    tau_max = _gaussian_cutoff(t_min, growth=growth)
    tau_max = 4.0 * math.ceil(tau_max / 4.0)
    omega = math.ceil(_oscillation(family, pts, tau_max))
    return heat_tau_rule(float(tau_max), float(omega), refine)


def _measure_factor(family: TransformFamily, y: np.ndarray, measure: str) -> np.ndarray:
    if measure == "lebesgue":
        return family.reference_weight(y) if family.tag != "mf" else np.ones_like(y)
    return np.ones_like(y)


def _ref_measure(family: TransformFamily, y):
    """Density of the reference measure ``r`` (the one the kernel refers to)."""
    y = np.asarray(y, dtype=float)
    return np.ones_like(y) if family.tag == "mf" else 1.0 / y


def heat_kernel_matrix(family: TransformFamily, t, xs, ys, measure: str = "r",
                       refine: int = 1, t_min: Optional[float] = None) -> np.ndarray:
    """Heat kernel on the product grid ``ts x xs x ys``.

    Parameters
    ----------
    family : TransformFamily
    t : float or array_like
        Positive times.
    xs, ys : array_like
        Points in the family domain.
    measure : {"r", "lebesgue"}
    refine : int
        Panel refinement factor of the tau rule.
    t_min : float, optional
        Smallest time the rule must resolve (defaults to ``min(t)``).

    Returns
    -------
    ndarray of shape ``(len(t), len(xs), len(ys))`` (squeezed for scalars).
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    xa = np.atleast_1d(np.asarray(xs, dtype=float))
    ya = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    family.check_point(xa)
    family.check_point(ya)
    if float(np.min(ts)) < 1e-3:
        warnings.warn("heat kernel for t < 1e-3 is barely damped in tau", specfun.AccuracyWarning, stacklevel=2)
    pts = np.unique(np.concatenate([xa, ya]))
    nodes, weights = _rule_for(family, float(t_min or np.min(ts)), pts, refine)
    kx = _kernel_matrix(family, nodes, _kernel_args(family, xa))
    ky = kx if np.array_equal(xa, ya) else _kernel_matrix(family, nodes, _kernel_args(family, ya))
    dens = family.density_scaled(nodes) * weights
    lam = family.eigenvalue(nodes)
    decay = np.exp(-ts[:, None] * lam[None, :]) * dens[None, :]
    out = np.einsum("tj,jx,jy->txy", decay, kx, ky)
    if family.tag == "iw":
        out = out / (2.0 * np.sqrt(xa[:, None] * ya[None, :]))[None, :, :]
    out = out * _measure_factor(family, ya, measure)[None, None, :]
    if np.ndim(t) == 0 and np.ndim(xs) == 0 and np.ndim(ys) == 0:
        return out[0, 0, 0]
    return out


def heat_kernel(family: TransformFamily, t: float, x: float, y: float, measure: str = "r",
                rel_tol: float = 1e-8) -> float:
    """Spectral heat kernel ``p_r(t, x, y)`` (or ``p`` for the Lebesgue measure).

    The result is checked by repeating the evaluation on a rule with halved
    panels; a :class:`ConvergenceError` is raised if the two disagree.

    Examples
    --------
    >>> from spectralindex.transforms import KontorovichLebedev
    >>> kl = KontorovichLebedev()
    >>> heat_kernel(kl, 1.0, 1.0, 2.0) == heat_kernel(kl, 1.0, 2.0, 1.0)
    True
    """
    HeatKernelSpec(family, t, measure)
    # evaluate with sorted arguments so that swapping x and y is bit-identical
    lo, hi = (x, y) if x <= y else (y, x)
    coarse = float(heat_kernel_matrix(family, t, lo, hi, "r"))
    fine = float(heat_kernel_matrix(family, t, lo, hi, "r", refine=2))
    if abs(fine - coarse) > rel_tol * abs(fine) + 1e-300:
        raise ConvergenceError(f"heat kernel not converged at t={t}, x={x}, y={y}")
    return fine * float(_measure_factor(family, np.array([y]), measure)[0])


def mf_half_closed_form(t, x, y):
    """Closed form of the Mehler-Fock heat kernel for ``mu = 1/2`` (Lebesgue measure)."""
    t = np.asarray(t, dtype=float)
    xi, chi = np.arccosh(np.asarray(x, float)), np.arccosh(np.asarray(y, float))
    # sinh(a) exp(-b) written to avoid overflow for small t
    arg = xi * chi / (2.0 * t)
    expo = -t / 4.0 - (xi - chi) ** 2 / (4.0 * t)
    return (np.exp(expo) * 0.5 * (-np.expm1(-2.0 * arg))
            / (np.sqrt(math.pi * t) * np.sqrt(np.sinh(xi) * np.sinh(chi))))


# ---------------------------------------------------------------------------
# Integrals over the state variable


@lru_cache(maxsize=32)
def _state_rule(tag: str, centre: float, n_per_unit: int = 24) -> Tuple[np.ndarray, np.ndarray]:
    """Rule for ``int g(y) r(y) dy`` with ``r`` folded into the weights.

    KL and IW integrate in ``log y`` from ``centre - 12`` up to ``y = 60``, past
    which the killing term makes the kernels negligible; MF integrates in
    ``eta = arccosh y`` over ``(1e-5, 11)``.
    """
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    if tag == "mf":
        edges = np.concatenate([np.geomspace(1e-5, 0.5, 14), np.linspace(0.5, 11.0, 11 * n_per_unit // 8 + 1)[1:]])
        h = np.diff(edges)
        eta = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
        w = (h[:, None] * gw[None, :]).ravel()
        return np.cosh(eta), w * np.sinh(eta)
    lo, hi = centre - 12.0, math.log(60.0)
    n = int((hi - lo) * n_per_unit / 16) + 1
    edges = np.linspace(lo, hi, n + 1)
    h = np.diff(edges)
    v = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
    w = (h[:, None] * gw[None, :]).ravel()
    # dy / y = dv
    return np.exp(v), w


def total_mass(family: TransformFamily, t: float, x: float) -> float:
    """``int p_r(t, x, y) r(y) dy`` over the family domain."""
    ys, wr = _state_rule(family.tag, 0.0 if family.tag == "mf" else round(math.log(x)))
    p = heat_kernel_matrix(family, t, np.array([x]), ys, refine=1)[0, 0]
    return float(np.dot(p, wr))


def total_mass_grid(family: TransformFamily, ts, xs) -> np.ndarray:
    """Total masses on the product grid ``ts x xs`` from one shared tau rule.

    Intended for starting points within a few units of ``y = 1`` (KL, IW).
    """
    ys, wr = _state_rule(family.tag, 0.0)
    p = heat_kernel_matrix(family, np.atleast_1d(ts), np.atleast_1d(xs), ys)
    return p @ wr


def chapman_kolmogorov_residual(family: TransformFamily, t: float, s: float, x: float, y: float) -> float:
    """``|p(t+s, x, y) - int p(t, x, xi) p(s, xi, y) r(xi) dxi|``.

    Examples
    --------
    >>> from spectralindex.transforms import KontorovichLebedev
    >>> chapman_kolmogorov_residual(KontorovichLebedev(), 0.5, 0.5, 1.0, 1.0) < 1e-4
    True
    """
    if t <= 0 or s <= 0:
        raise ValueError("times must be positive")
    centre = 0.0 if family.tag == "mf" else round(0.5 * (math.log(x) + math.log(y)))
    xis, wr = _state_rule(family.tag, centre)
    t_min = min(t, s)
    left = heat_kernel_matrix(family, t, np.array([x]), xis, t_min=t_min)[0, 0]
    right = heat_kernel_matrix(family, s, np.array([y]), xis, t_min=t_min)[0, 0]
    composed = float(np.dot(left * right, wr))
    direct = float(heat_kernel_matrix(family, t + s, np.array([x]), np.array([y]), t_min=t_min)[0, 0, 0])
    return abs(direct - composed)


def pde_residual(family: TransformFamily, t: float, x: float, y: float,
                 h_t: float = 1e-3, h_x: float = 1e-3) -> float:
    """Normalized residual ``|d/dt p - (1/r)[(p_c p')' - q p]| / |p|`` in ``x``.

    Derivatives are central differences with one Richardson step.
    """
    if t <= 2 * h_t:
        raise ValueError("t must exceed 2 h_t")
    op = operator_for(family)
    # offsets in units of h_x and h_t; all values come from one batch on a common rule
    dx_units = (-1.0, -0.5, 0.0, 0.5, 1.0)
    dt_units = (-1.0, -0.5, 0.0, 0.5, 1.0)
    xs = np.array([x + u * h_x for u in dx_units])
    ts = np.array([t + u * h_t for u in dt_units])
    grid = heat_kernel_matrix(family, ts, xs, np.array([y]), t_min=t - h_t)[:, :, 0]

    def p_at(t_unit: float, x_unit: float) -> float:
        return grid[dt_units.index(t_unit), dx_units.index(x_unit)]

    d1 = (p_at(0.5, 0.0) - p_at(-0.5, 0.0)) / h_t
    d2 = (p_at(1.0, 0.0) - p_at(-1.0, 0.0)) / (2 * h_t)
    dt = (4.0 * d1 - d2) / 3.0

    def gen(k: float) -> float:
        hh = k * h_x
        flux_p = op.p(x + 0.5 * hh) * (p_at(0.0, k) - p_at(0.0, 0.0)) / hh
        flux_m = op.p(x - 0.5 * hh) * (p_at(0.0, 0.0) - p_at(0.0, -k)) / hh
        return float(((flux_p - flux_m) / hh - op.q(x) * p_at(0.0, 0.0)) / op.r(x))

    lx = (4.0 * gen(0.5) - gen(1.0)) / 3.0
    val = p_at(0.0, 0.0)
    return abs(dt - lx) / (abs(val) + 1e-300)


# ---------------------------------------------------------------------------
# Resolvent kernels


def resolvent_kernel(family: TransformFamily, lam: float, x: float, y: float) -> float:
    """Kernel of ``(L - lambda)^{-1}`` with respect to ``r(y) dy`` for ``lambda < 0``.

    Built from the solution regular at the left end point and the one
    decaying at infinity, divided by their ``p``-weighted Wronskian:

    * KL: ``I_s(min) K_s(max)``, ``s = sqrt(-lambda)``;
    * IW: ``Gamma(1/2 + s - alpha) / (2 Gamma(1 + 2 s) sqrt(x y)) M_{alpha,s}(2 min) W_{alpha,s}(2 max)``,
      ``s = sqrt(alpha^2 - lambda)``;
    * MF: ``P(min) P(max) int_max^inf dz / ((z^2 - 1) P(z)^2)`` with
      ``P = P^{-mu}_{-1/2 + s}``, ``s = sqrt(1/4 - lambda)``.

    Examples
    --------
    >>> from spectralindex.transforms import KontorovichLebedev
    >>> from spectralindex.specfun import bessel_i, bessel_k
    >>> g = resolvent_kernel(KontorovichLebedev(), -1.0, 1.0, 2.0)
    >>> abs(g - bessel_i(1.0, 1.0) * bessel_k(1.0, 2.0)) < 1e-12
    True
    """
    if not lam < 0:
        raise ValueError("resolvent kernels are provided for lambda < 0 only")
    family.check_point([x, y])
    lo, hi = (x, y) if x <= y else (y, x)
    if family.tag == "kl":
        sig = math.sqrt(-lam)
        return float(math.exp(specfun.log_bessel_i(sig, lo) + specfun.log_bessel_k(sig, hi)))
    if family.tag == "iw":
        al = family.alpha
        sig = math.sqrt(al * al - lam)
        logg = (math.lgamma(0.5 + sig - al) - math.lgamma(1.0 + 2.0 * sig) - math.log(2.0)
                - 0.5 * math.log(x * y))
        return float(math.exp(logg + specfun.log_whittaker_m(al, sig, 2.0 * lo)
                              + specfun.log_whittaker_w(al, sig, 2.0 * hi)))
    mu = family.mu
    sig = math.sqrt(0.25 - lam)

    def tail(u: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            z = hi * np.exp(u)
            pz = specfun.legendre_p_real(mu, sig, z)
            val = 1.0 / ((z - 1.0 / z) * pz * pz)
        # far nodes overflow z; the integrand there is below any tolerance
        return np.where(np.isfinite(val), val, 0.0)

    res = integrate(tail, 0.0, math.inf, QuadSpec(rel_tol=1e-11))
    if not res.converged:
        raise ConvergenceError("resolvent tail integral did not converge")
    return float(specfun.legendre_p_real(mu, sig, lo) * specfun.legendre_p_real(mu, sig, hi) * res.value)


def laplace_transform_heat(family: TransformFamily, lam: float, x: float, y: float,
                           t_lo: float = 2e-3, t_hi: float = 80.0) -> float:
    """``int_0^inf exp(lambda t) p_r(t, x, y) dt`` by quadrature in ``log t``.

    The heat kernel is negligible below ``t_lo`` for well separated ``x, y``
    and the factor ``exp(lambda t)`` controls the range above ``t_hi``.
    """
    if not lam < 0:
        raise ValueError("lambda must be negative")
    gx, gw = gauss_legendre(16, 0.0, 1.0)
    edges = np.linspace(math.log(t_lo), math.log(t_hi), 25)
    h = np.diff(edges)
    u = (edges[:-1, None] + h[:, None] * gx[None, :]).ravel()
    w = (h[:, None] * gw[None, :]).ravel()
    ts = np.exp(u)
    p = heat_kernel_matrix(family, ts, np.array([x]), np.array([y]), t_min=t_lo)[:, 0, 0]
    return float(np.sum(w * ts * np.exp(lam * ts) * p))


# ---------------------------------------------------------------------------
# Comparison of killing rates


def monotonicity_gap(families: Tuple[TransformFamily, TransformFamily], t: float, x: float, y: float) -> float:
    """``p_r^(1)(t,x,y) - p_r^(2)(t,x,y)`` for families with ordered killing.

    The first family must have the smaller potential ``q``: for MF this
    means ``mu_1 <= mu_2``; for IW it means ``alpha_2 <= alpha_1 <= 0``.
    """
    f1, f2 = families
    if f1.tag != f2.tag or f1.tag == "kl":
        raise ValueError("monotonicity compares two MF or two IW families")
    if f1.tag == "mf" and not f1.mu <= f2.mu:
        raise ValueError("need mu_1 <= mu_2")
    if f1.tag == "iw" and not (f2.alpha <= f1.alpha <= 0.0):
        raise ValueError("need alpha_2 <= alpha_1 <= 0")
    return heat_kernel(f1, t, x, y) - heat_kernel(f2, t, x, y)


def write_heat_csv(path, family: TransformFamily, ts: Iterable[float], xs: Iterable[float],
                   ys: Iterable[float], measure: str = "r") -> None:
    """Write ``t, x, y, value`` rows with 17 significant digits."""
    ts, xs, ys = (np.asarray(list(v), dtype=float) for v in (ts, xs, ys))
    vals = heat_kernel_matrix(family, ts, xs, ys, measure)
    vals = np.asarray(vals).reshape(ts.size, xs.size, ys.size)
    with text_output(path) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "x", "y", "value"])
        for i, tt in enumerate(ts):
            for j, xx in enumerate(xs):
                for k, yy in enumerate(ys):
                    wr.writerow([f"{tt:.17g}", f"{xx:.17g}", f"{yy:.17g}", f"{vals[i, j, k]:.17g}"])
