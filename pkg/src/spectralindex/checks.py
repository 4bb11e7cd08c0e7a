"""Named verification suites behind the ``check`` CLI subcommand.

Every suite returns a list of :class:`CheckRow`; a row compares a measured
quantity with a tolerance (or, for categorical checks, an expected label).
Nothing in a row depends on wall-clock time, so repeated runs with the same
seed produce identical tables.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import diffusion, feller, heat, specfun, transforms, yor
from .transforms import IndexWhittaker, KontorovichLebedev, MehlerFock, TransformFamily

__all__ = ["CheckRow", "SUITES", "run_suite", "format_table", "rows_to_csv"]


@dataclass(frozen=True)
class CheckRow:
    """One line of a check table."""

    suite: str
    check: str
    case: str
    measured: Union[float, str]
    tolerance: Union[float, str]
    passed: bool

    def measured_text(self, digits: int = 17) -> str:
        if isinstance(self.measured, str):
            return self.measured
        return f"{self.measured:.{digits}g}"

    def tolerance_text(self, digits: int = 17) -> str:
        if isinstance(self.tolerance, str):
            return self.tolerance
        return f"{self.tolerance:.{digits}g}"


def _row(suite: str, check: str, case: str, measured: float, tol: float, lower: bool = False) -> CheckRow:
    """``lower=True`` means the measured value must be at least ``tol``."""
    ok = bool(np.isfinite(measured)) and (measured >= tol if lower else measured <= tol)
    return CheckRow(suite, check, case, float(measured), float(tol), ok)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _families(selected: Optional[str]) -> list[TransformFamily]:
    fams = [KontorovichLebedev(), IndexWhittaker(-0.5), MehlerFock(0.3)]
    if selected is None:
        return fams
    return [f for f in fams if f.tag == selected]


def _fam_label(f: TransformFamily) -> str:
    if f.tag == "iw":
        return f"iw(alpha={f.alpha:g})"
    if f.tag == "mf":
        return f"mf(mu={f.mu:g})"
    return "kl"


# ---------------------------------------------------------------------------
# special functions


def suite_specfun(**_) -> list[CheckRow]:
    rows = []
    taus = np.array([0.25, 1.0, 2.5, 5.0, 10.0])
    xs = np.array([0.3, 0.8, 1.5, 3.0, 6.0])
    worst = 0.0
    for tau in taus:
        for x in xs:
            lhs = specfun.whittaker_w_im(0.0, tau, 2.0 * x)
            rhs = math.sqrt(2.0 * x / math.pi) * specfun.bessel_k_im(tau, x)
            worst = max(worst, _rel(lhs, rhs))
    rows.append(_row("specfun", "whittaker_reduction", "5x5 grid", worst, 1e-8))

    worst = 0.0
    for tau in taus:
        for xi in (0.2, 0.6, 1.0, 2.0, 4.0):
            lhs = specfun.legendre_p_im(0.5, tau, math.cosh(xi))
            rhs = math.sqrt(2.0 / (math.pi * math.sinh(xi))) * math.sin(tau * xi) / tau
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-3 * abs(rhs) + 1e-12, 1e-12))
    rows.append(_row("specfun", "legendre_half_reduction", "5x5 grid", worst, 1e-8))

    rng = np.random.default_rng(diffusion.DEFAULT_SEED)
    nus = rng.uniform(0.0, 3.0, 20)
    pts = rng.uniform(0.3, 5.0, 20)
    h = 1e-5
    worst = 0.0
    for nu, x in zip(nus, pts):
        k0, i0 = specfun.bessel_k(nu, x), specfun.bessel_i(nu, x)
        dk = (specfun.bessel_k(nu, x + h) - specfun.bessel_k(nu, x - h)) / (2 * h)
        di = (specfun.bessel_i(nu, x + h) - specfun.bessel_i(nu, x - h)) / (2 * h)
        worst = max(worst, abs(k0 * di - dk * i0 - 1.0 / x))
    rows.append(_row("specfun", "bessel_wronskian", "20 random points", worst, 1e-7))
    return rows


# ---------------------------------------------------------------------------
# transforms

TEST_FUNCTIONS: dict[str, list[tuple[str, Callable[[np.ndarray], np.ndarray]]]] = {
    "kl": [
        ("y exp(-y)", lambda y: y * np.exp(-y)),
        ("y^2 exp(-y)", lambda y: y * y * np.exp(-y)),
        ("y exp(-2y)", lambda y: y * np.exp(-2 * y)),
        ("y^1.5 exp(-y)", lambda y: y ** 1.5 * np.exp(-y)),
        ("y exp(-y)/(1+y)", lambda y: y * np.exp(-y) / (1 + y)),
    ],
    "mf": [
        ("exp(-x)", lambda x: np.exp(-x)),
        ("x exp(-x)", lambda x: x * np.exp(-x)),
        ("exp(-2x)", lambda x: np.exp(-2 * x)),
        ("(x-1) exp(-x)", lambda x: (x - 1) * np.exp(-x)),
        ("exp(-x)/x", lambda x: np.exp(-x) / x),
    ],
}
TEST_FUNCTIONS["iw"] = TEST_FUNCTIONS["kl"]


def roundtrip_points(family: TransformFamily) -> np.ndarray:
    return np.linspace(1.1, 8.0, 10) if family.tag == "mf" else np.linspace(0.2, 6.0, 10)


def suite_parseval(family: Optional[str] = None, **_) -> list[CheckRow]:
    rows = []
    for fam in _families(family):
        for name, f in TEST_FUNCTIONS[fam.tag]:
            spec = transforms.transform(fam, f)
            xs = roundtrip_points(fam)
            ref = f(xs)
            rec = transforms.inverse(fam, spec, xs)
            # relative error; where f is tiny the absolute error is rescaled so 1e-4 means 1e-6
            err = np.where(np.abs(ref) > 1e-2, np.abs(rec - ref) / np.abs(ref), np.abs(rec - ref) * 1e-4 / 1e-6)
            rows.append(_row("parseval", "roundtrip", f"{_fam_label(fam)} {name}", float(np.max(err)), 1e-4))
            lhs, rhs = transforms.parseval_gap(fam, f, spectrum=spec)
            gap = abs(lhs - rhs) / max(lhs, 1e-8)
            rows.append(_row("parseval", "parseval_gap", f"{_fam_label(fam)} {name}", gap, 1e-4))
    return rows


# ---------------------------------------------------------------------------
# Yor integrals

YOR_GRID = (0.5, 1.0, 2.0)
MF_YOR_POINTS = (1.5, 2.0, 3.0)


def suite_yor(**_) -> list[CheckRow]:
    rows = []
    worst = 0.0
    for t in YOR_GRID:
        for x in YOR_GRID:
            worst = max(worst, _rel(yor.yor_theta(t, x, "elementary"), yor.yor_theta(t, x, "spectral")))
    rows.append(_row("yor", "theta_representations", "t,x in {0.5,1,2}", worst, 1e-6))

    mf = MehlerFock(0.3)
    worst = 0.0
    for t in YOR_GRID:
        for x in MF_YOR_POINTS:
            worst = max(worst, _rel(yor.yor_generalized(mf, t, x, "elementary"),
                                    yor.yor_generalized(mf, t, x, "spectral")))
    rows.append(_row("yor", "mf_representations", "mu=0.3, t in {0.5,1,2}, x in {1.5,2,3}", worst, 1e-6))

    worst = 0.0
    kl = KontorovichLebedev()
    for t in YOR_GRID:
        for x in YOR_GRID:
            worst = max(worst, _rel(2.0 * yor.yor_generalized(kl, 0.5 * t, x), yor.yor_theta(t, x)))
    rows.append(_row("yor", "theta_equals_2_vartheta_kl", "t,x in {0.5,1,2}", worst, 1e-8))
    return rows


# ---------------------------------------------------------------------------
# heat kernels

HEAT_POINTS = {"kl": (0.5, 1.0, 2.0, 3.0, 5.0), "iw": (0.5, 1.0, 2.0, 3.0, 5.0),
               "mf": tuple(math.cosh(v) for v in (0.3, 0.7, 1.0, 1.5, 2.0))}
HEAT_TIMES = (0.3, 1.0, 3.0)
MF_HALF_POINTS = ((0.5, 1.0, 1.5), (1.0, 0.5, 2.0), (0.2, 1.0, 1.2), (2.0, 1.5, 0.8), (0.4, 1.0, 1.0))


def suite_heat(family: Optional[str] = None, **_) -> list[CheckRow]:
    rows = []
    for fam in _families(family):
        lab = _fam_label(fam)
        pts = np.array(HEAT_POINTS[fam.tag])
        grid = heat.heat_kernel_matrix(fam, np.array(HEAT_TIMES), pts, pts)
        low = float(np.min(grid))
        rows.append(CheckRow("heat", "positivity_min", f"{lab} 5x5x3", low, "> 0", low > 0))
        asym = float(np.max(np.abs(grid - np.transpose(grid, (0, 2, 1))) / grid))
        rows.append(_row("heat", "symmetry", f"{lab} 5x5x3", asym, 1e-12))
        if fam.tag == "mf":
            masses = np.array([[heat.total_mass(fam, t, x) for x in pts] for t in HEAT_TIMES])
        else:
            masses = heat.total_mass_grid(fam, HEAT_TIMES, pts)
        rows.append(_row("heat", "sub_markov_mass", f"{lab} max over grid", float(np.max(masses)), 1.0 + 1e-6))
        worst = 0.0
        for t in (0.3, 0.7):
            for s in (0.3, 0.7):
                worst = max(worst, heat.chapman_kolmogorov_residual(fam, t, s, pts[1], pts[2]))
        rows.append(_row("heat", "chapman_kolmogorov", f"{lab} (t,s) in {{0.3,0.7}}^2", worst, 1e-4))
        worst = 0.0
        for x, y in zip(pts, pts[::-1]):
            worst = max(worst, heat.pde_residual(fam, 1.0, float(x), float(y)))
        rows.append(_row("heat", "pde_residual", f"{lab} 5 points", worst, 1e-3))
    if family in (None, "mf"):
        mass0 = heat.total_mass(MehlerFock(0.0), 1.0, 2.0)
        rows.append(_row("heat", "conservative_mass", "mf(mu=0) t=1 x=2", abs(mass0 - 1.0), 1e-4))
        worst = 0.0
        half = MehlerFock(0.5)
        for t, xi, chi in MF_HALF_POINTS:
            x, y = math.cosh(xi), math.cosh(chi)
            worst = max(worst, _rel(heat.heat_kernel(half, t, x, y), float(heat.mf_half_closed_form(t, x, y))))
        rows.append(_row("heat", "mf_half_closed_form", "5 points", worst, 1e-6))
    return rows


# ---------------------------------------------------------------------------
# resolvent and monotonicity

RESOLVENT_LAMBDAS = (-0.5, -1.0, -3.0)


def suite_resolvent(family: Optional[str] = None, **_) -> list[CheckRow]:
    rows = []
    for fam in _families(family):
        x, y = (1.5, 2.5) if fam.tag == "mf" else (1.0, 2.0)
        for lam in RESOLVENT_LAMBDAS:
            err = _rel(heat.laplace_transform_heat(fam, lam, x, y), heat.resolvent_kernel(fam, lam, x, y))
            rows.append(_row("resolvent", "laplace_identity", f"{_fam_label(fam)} lambda={lam:g}", err, 1e-4))
    return rows


def monotonicity_grid(tag: str) -> list[tuple[float, float, float]]:
    pts = (1.5, 2.0, 3.0) if tag == "mf" else (0.5, 1.0, 2.0)
    return [(t, pts[i], pts[j]) for t in (0.5, 1.0, 2.0) for i, j in ((0, 1), (1, 2), (0, 2))]


def suite_monotonicity(**_) -> list[CheckRow]:
    rows = []
    pairs = [((MehlerFock(0.2), MehlerFock(0.6)), "mf mu 0.2 vs 0.6"),
             ((IndexWhittaker(-0.5), IndexWhittaker(-1.0)), "iw alpha -0.5 vs -1")]
    for fams, label in pairs:
        gaps = [heat.monotonicity_gap(fams, t, x, y) for t, x, y in monotonicity_grid(fams[0].tag)]
        rows.append(_row("monotonicity", "kernel_gap", f"{label} 9 points", float(min(gaps)), -1e-8, lower=True))
    return rows


# ---------------------------------------------------------------------------
# Feller classification

FELLER_CASES = (
    ("kl", "a", "Natural", (1.0, 2.0)),
    ("kl", "b", "Natural", (1.0, 2.0)),
    ("iw:-0.5", "a", "Natural", (1.0, 2.0)),
    ("iw:-0.5", "b", "Natural", (1.0, 2.0)),
    ("mf:0", "a", "Entrance", (2.0, 3.0)),
    ("mf:0.5", "a", "Natural", (2.0, 3.0)),
    ("mf:0", "b", "Natural", (2.0, 3.0)),
    ("mf:0.5", "b", "Natural", (2.0, 3.0)),
)


def suite_feller(**_) -> list[CheckRow]:
    rows = []
    for name, end, expected, anchors in FELLER_CASES:
        op = feller.builtin_operator(name)
        for c in anchors:
            rep = feller.classify(op, end, c)
            rows.append(CheckRow("feller", "classification", f"{name} endpoint {rep.location_text} c={c:g}",
                                 rep.classification, expected, rep.classification == expected))
    return rows


# ---------------------------------------------------------------------------
# probabilistic cross-validation


def _z_row(check: str, case: str, est: diffusion.MCEstimate, ref: float) -> CheckRow:
    z = abs(est.z_score(ref))
    return CheckRow("probabilistic", check, case, float(z), 3.0, bool(z <= 3.0))


def suite_probabilistic(paths: int = 100_000, seed: int = diffusion.DEFAULT_SEED, **_) -> list[CheckRow]:
    rows = []
    mc, rhs, spec = diffusion.bougerol_check(1.0, 1.0, n_paths=paths, seed=seed)
    rows.append(_row("probabilistic", "bougerol_quadrature_sides", "t=1 x=1", abs(rhs - spec), 1e-4))
    rows.append(_z_row("bougerol_mc_z", "t=1 x=1", mc, rhs))
    mc, closed = diffusion.conditional_laplace_check(1.0, 1.0, 1.0, n_paths=paths, seed=seed)
    rows.append(_z_row("conditional_laplace_z", "t=1 x=1 y=1", mc, closed))
    psi = lambda y: np.exp(-y)
    kl = KontorovichLebedev()
    est = diffusion.mc_feynman_kac(kl, psi, 0.5, 1.0, n_paths=paths, seed=seed)
    rows.append(_z_row("feynman_kac_z", "kl psi=exp(-y) t=0.5 x0=1", est, diffusion.spectral_expectation(kl, psi, 0.5, 1.0)))
    x0 = math.cosh(1.0)
    est = diffusion.mc_feynman_kac(MehlerFock(0.5), psi, 0.5, x0, n_paths=paths, seed=seed)
    rows.append(_z_row("feynman_kac_z", "mf(mu=0.5) psi=exp(-y) t=0.5 x0=cosh 1", est,
                       diffusion.mf_half_expectation(psi, 0.5, x0)))
    for fam in (kl, IndexWhittaker(-0.5)):
        worst = max(yor.evolution_residual(fam, t, s, 1.0) for t in (0.3, 0.7) for s in (0.3, 0.7))
        rows.append(_row("probabilistic", "evolution_residual", f"{_fam_label(fam)} (t,s) in {{0.3,0.7}}^2", worst, 1e-4))
    return rows


# ---------------------------------------------------------------------------
# Hartman-Watson


def suite_hartman_watson(**_) -> list[CheckRow]:
    return [_row("hartman-watson", "normalization", f"x={x:g}", abs(yor.hartman_watson_mass(x) - 1.0), 1e-3)
            for x in (0.5, 1.0, 2.0)]


SUITES: dict[str, Callable[..., list[CheckRow]]] = {
    "specfun": suite_specfun,
    "parseval": suite_parseval,
    "yor": suite_yor,
    "heat": suite_heat,
    "resolvent": suite_resolvent,
    "monotonicity": suite_monotonicity,
    "feller": suite_feller,
    "probabilistic": suite_probabilistic,
    "hartman-watson": suite_hartman_watson,
}

FAMILY_AWARE = ("parseval", "heat", "resolvent")


def run_suite(name: str, family: Optional[str] = None, paths: int = 100_000,
              seed: int = diffusion.DEFAULT_SEED) -> list[CheckRow]:
    """Run one suite (or ``"all"``) and return its rows."""
    if name == "all":
        out: list[CheckRow] = []
        for key in SUITES:
            out.extend(run_suite(key, family, paths, seed))
        return out
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](family=family, paths=paths, seed=seed)


def format_table(rows: Sequence[CheckRow]) -> str:
    """Fixed-width pass/fail table."""
    header = ("suite", "check", "case", "measured", "tolerance", "status")
    body = [(r.suite, r.check, r.case, r.measured_text(6), r.tolerance_text(6), "PASS" if r.passed else "FAIL")
            for r in rows]
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body)
    return "\n".join(lines)


def rows_to_csv(rows: Iterable[CheckRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["suite", "check", "case", "measured", "tolerance", "passed"])
    for r in rows:
        wr.writerow([r.suite, r.check, r.case, r.measured_text(), r.tolerance_text(), int(r.passed)])
    return buf.getvalue()
