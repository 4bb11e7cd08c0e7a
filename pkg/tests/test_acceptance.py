"""Acceptance criteria 1-10.

Each test records its parts through the ``acceptance`` fixture; the
terminal summary prints one PASS/FAIL line per criterion.  Tolerances and
grids are the ones the criteria state; nothing here is relaxed to make a
part pass.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from spectralindex import diffusion, feller, heat, specfun, transforms, yor
from spectralindex.transforms import IndexWhittaker, KontorovichLebedev, MehlerFock

KL = KontorovichLebedev()
IW = IndexWhittaker(-0.5)
MF = MehlerFock(0.3)
FAMILIES = (KL, IW, MF)


def rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


# ---------------------------------------------------------------------------
# 1. special-function identities


def test_criterion_01_special_function_identities(acceptance):
    rec = acceptance(1, "special-function identities", 10.0)
    taus = (0.25, 1.0, 2.5, 5.0, 10.0)
    with Clock() as c1:
        worst_w = max(rel(specfun.whittaker_w_im(0.0, tau, 2.0 * x),
                          math.sqrt(2.0 * x / math.pi) * specfun.bessel_k_im(tau, x))
                      for tau in taus for x in (0.3, 0.8, 1.5, 3.0, 6.0))
    with Clock() as c2:
        worst_p = max(rel(specfun.legendre_p_im(0.5, tau, math.cosh(xi)),
                          math.sqrt(2.0 / (math.pi * math.sinh(xi))) * math.sin(tau * xi) / tau)
                      for tau in taus for xi in (0.2, 0.6, 1.0, 2.0, 4.0))
    with Clock() as c3:
        rng = np.random.default_rng(12345)
        h = 1e-5
        worst_b = 0.0
        for nu, x in zip(rng.uniform(0.0, 3.0, 20), rng.uniform(0.3, 5.0, 20)):
            di = (specfun.bessel_i(nu, x + h) - specfun.bessel_i(nu, x - h)) / (2 * h)
            dk = (specfun.bessel_k(nu, x + h) - specfun.bessel_k(nu, x - h)) / (2 * h)
            worst_b = max(worst_b, abs(specfun.bessel_k(nu, x) * di - dk * specfun.bessel_i(nu, x) - 1.0 / x))
    ok = [rec("Whittaker to Bessel reduction, 5x5 grid, max rel err", worst_w, 1e-8, worst_w <= 1e-8, c1.seconds),
          rec("Legendre order 1/2 reduction, 5x5 grid, max rel err", worst_p, 1e-8, worst_p <= 1e-8, c2.seconds),
          rec("Bessel I/K Wronskian, 20 random points, max abs err", worst_b, 1e-7, worst_b <= 1e-7, c3.seconds)]
    total = c1.seconds + c2.seconds + c3.seconds
    assert all(ok)
    assert total < 10.0


# ---------------------------------------------------------------------------
# 2. transform roundtrips and Parseval

TEST_FUNCTIONS = {
    "kl": [("y e^-y", lambda y: y * np.exp(-y)), ("y^2 e^-y", lambda y: y * y * np.exp(-y)),
           ("y e^-2y", lambda y: y * np.exp(-2 * y)), ("y^1.5 e^-y", lambda y: y ** 1.5 * np.exp(-y)),
           ("y e^-y/(1+y)", lambda y: y * np.exp(-y) / (1 + y))],
    "mf": [("e^-x", lambda x: np.exp(-x)), ("x e^-x", lambda x: x * np.exp(-x)),
           ("e^-2x", lambda x: np.exp(-2 * x)), ("(x-1) e^-x", lambda x: (x - 1) * np.exp(-x)),
           ("e^-x/x", lambda x: np.exp(-x) / x)],
}
TEST_FUNCTIONS["iw"] = TEST_FUNCTIONS["kl"]


def test_criterion_02_roundtrip_and_parseval(acceptance):
    rec = acceptance(2, "transform roundtrips and Parseval", 120.0)
    results = []
    total = 0.0
    for fam in FAMILIES:
        xs = np.linspace(1.1, 8.0, 10) if fam.tag == "mf" else np.linspace(0.2, 6.0, 10)
        worst_rt, worst_pg = 0.0, 0.0
        with Clock() as c:
            for _, f in TEST_FUNCTIONS[fam.tag]:
                spec = transforms.transform(fam, f)
                ref = f(xs)
                back = transforms.inverse(fam, spec, xs)
                # relative error, or absolute 1e-6 where f is small
                err = np.where(np.abs(ref) > 1e-2, np.abs(back - ref) / np.abs(ref) / 1e-4,
                               np.abs(back - ref) / 1e-6)
                worst_rt = max(worst_rt, float(np.max(err)))
                lhs, rhs = transforms.parseval_gap(fam, f, spectrum=spec)
                worst_pg = max(worst_pg, abs(lhs - rhs) / max(lhs, 1e-8))
        total += c.seconds
        results.append(rec(f"{fam.name} roundtrip, 5 functions x 10 points, error / allowance", worst_rt, 1.0,
                           worst_rt <= 1.0, c.seconds))
        results.append(rec(f"{fam.name} Parseval gap, 5 functions", worst_pg, 1e-4, worst_pg <= 1e-4))
    assert all(results)
    assert total < 120.0


# ---------------------------------------------------------------------------
# 3. Yor representations

GRID = (0.5, 1.0, 2.0)


def test_criterion_03_yor_representations(acceptance):
    rec = acceptance(3, "Yor representation equality", 60.0)
    with Clock() as c1:
        worst_theta = max(rel(yor.yor_theta(t, x, "elementary"), yor.yor_theta(t, x, "spectral"))
                          for t in GRID for x in GRID)
    with Clock() as c2:
        worst_mf = max(rel(yor.yor_generalized(MF, t, x, "elementary"), yor.yor_generalized(MF, t, x, "spectral"))
                       for t in GRID for x in (1.5, 2.0, 3.0))
    ok = [rec("theta elementary vs spectral, 3x3 grid", worst_theta, 1e-6, worst_theta <= 1e-6, c1.seconds),
          rec("MF(0.3) vartheta spectral vs elementary, 3x3 grid", worst_mf, 1e-6, worst_mf <= 1e-6, c2.seconds)]
    assert all(ok)
    assert c1.seconds + c2.seconds < 60.0


def test_criterion_03_theta_equals_twice_kl_vartheta_at_half_time(acceptance):
    """theta(t, x) = 2 vartheta_KL(t/2, x) to 1e-8.

    Both sides are computed independently: theta from its elementary
    integral, vartheta from the inverse KL transform of exp(-tau^2 t/2).
    The measured ratio is 1/4, not 1 (see the decisions ledger), so this part
    is expected to fail.
    """
    rec = acceptance(3, "Yor representation equality", 60.0)
    with Clock() as c:
        worst = max(rel(2.0 * yor.yor_generalized(KL, 0.5 * t, x), yor.yor_theta(t, x, "elementary"))
                    for t in GRID for x in GRID)
    passed = rec("theta = 2 vartheta_KL(t/2), 3x3 grid", worst, 1e-8, worst <= 1e-8, c.seconds)
    assert passed, f"max relative deviation {worst:.3g}"


# ---------------------------------------------------------------------------
# 4. heat-kernel properties

HEAT_POINTS = {"kl": (0.5, 1.0, 2.0, 3.0, 5.0), "iw": (0.5, 1.0, 2.0, 3.0, 5.0),
               "mf": tuple(math.cosh(v) for v in (0.3, 0.7, 1.0, 1.5, 2.0))}
HEAT_TIMES = (0.3, 1.0, 3.0)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.tag)
def test_criterion_04_heat_kernel_properties(acceptance, fam):
    rec = acceptance(4, "heat-kernel properties", 180.0)
    pts = np.array(HEAT_POINTS[fam.tag])
    with Clock() as c:
        grid = np.array([[[heat.heat_kernel(fam, t, x, y) for y in pts] for x in pts] for t in HEAT_TIMES])
        low = float(grid.min())
        asym = float(np.max(np.abs(grid - np.transpose(grid, (0, 2, 1)))))
        mass = max(heat.total_mass(fam, t, float(x)) for t in HEAT_TIMES for x in pts)
        ck = max(heat.chapman_kolmogorov_residual(fam, t, s, float(pts[1]), float(pts[2]))
                 for t in (0.3, 0.7) for s in (0.3, 0.7))
        pde = max(heat.pde_residual(fam, 1.0, float(x), float(y)) for x, y in zip(pts, pts[::-1]))
    ok = [rec(f"{fam.name} min kernel on 5x5x3 grid", low, "> 0", low > 0, c.seconds),
          rec(f"{fam.name} max |p(t,x,y) - p(t,y,x)|", asym, 0.0, asym == 0.0),
          rec(f"{fam.name} max total mass", mass, 1 + 1e-6, mass <= 1 + 1e-6),
          rec(f"{fam.name} Chapman-Kolmogorov residual", ck, 1e-4, ck <= 1e-4),
          rec(f"{fam.name} PDE residual, 5 points", pde, 1e-3, pde <= 1e-3)]
    assert all(ok)


def test_criterion_04_mf_half_closed_form(acceptance):
    rec = acceptance(4, "heat-kernel properties", 180.0)
    half = MehlerFock(0.5)
    points = ((0.5, 1.0, 1.5), (1.0, 0.5, 2.0), (0.2, 1.0, 1.2), (2.0, 1.5, 0.8), (0.4, 1.0, 1.0))
    with Clock() as c:
        worst = 0.0
        for t, xi, chi in points:
            closed = (math.exp(-t / 4 - (xi * xi + chi * chi) / (4 * t)) * math.sinh(xi * chi / (2 * t))
                      / (math.sqrt(math.pi * t) * math.sqrt(math.sinh(xi) * math.sinh(chi))))
            worst = max(worst, rel(heat.heat_kernel(half, t, math.cosh(xi), math.cosh(chi)), closed))
    assert rec("MF(1/2) spectral kernel vs closed form with 1/sqrt(pi t), 5 points", worst, 1e-6,
               worst <= 1e-6, c.seconds)


# ---------------------------------------------------------------------------
# 5. resolvent identity


def test_criterion_05_resolvent_identity(acceptance):
    rec = acceptance(5, "resolvent = Laplace transform of heat kernel", 60.0)
    ok, total = [], 0.0
    for fam in FAMILIES:
        x, y = (1.5, 2.5) if fam.tag == "mf" else (1.0, 2.0)
        with Clock() as c:
            worst = max(rel(heat.laplace_transform_heat(fam, lam, x, y), heat.resolvent_kernel(fam, lam, x, y))
                        for lam in (-0.5, -1.0, -3.0))
        total += c.seconds
        ok.append(rec(f"{fam.name} lambda in {{-0.5,-1,-3}}", worst, 1e-4, worst <= 1e-4, c.seconds))
    assert all(ok)
    assert total < 60.0


# ---------------------------------------------------------------------------
# 6. monotonicity in the killing rate


def test_criterion_06_monotonicity(acceptance):
    rec = acceptance(6, "kernel monotonicity in mu and alpha", 60.0)
    pairs = [((MehlerFock(0.2), MehlerFock(0.6)), (1.5, 2.0, 3.0), "MF mu 0.2 vs 0.6"),
             ((IndexWhittaker(-0.5), IndexWhittaker(-1.0)), (0.5, 1.0, 2.0), "IW alpha -0.5 vs -1")]
    ok, total = [], 0.0
    for fams, pts, label in pairs:
        with Clock() as c:
            gaps = [heat.monotonicity_gap(fams, t, pts[i], pts[j])
                    for t in (0.5, 1.0, 2.0) for i, j in ((0, 1), (1, 2), (0, 2))]
        total += c.seconds
        ok.append(rec(f"{label}, min gap over 9 points", min(gaps), -1e-8, min(gaps) >= -1e-8, c.seconds))
    assert all(ok)
    assert total < 60.0


# ---------------------------------------------------------------------------
# 7. Feller classification

EXPECTED = [("kl", "a", "Natural"), ("kl", "b", "Natural"), ("iw:-0.5", "a", "Natural"), ("iw:-0.5", "b", "Natural"),
            ("mf:0", "a", "Entrance"), ("mf:0.5", "a", "Natural"), ("mf:0", "b", "Natural"), ("mf:0.5", "b", "Natural")]


def test_criterion_07_feller_classification(acceptance):
    rec = acceptance(7, "Feller boundary classification", 30.0)
    ok = []
    total = 0.0
    for name, end, expected in EXPECTED:
        op = feller.builtin_operator(name)
        anchors = (2.0, 3.0) if name.startswith("mf") else (1.0, 2.0)
        with Clock() as c:
            got = {feller.classify(op, end, a).classification for a in anchors}
        total += c.seconds
        label = f"{name} endpoint {'left' if end == 'a' else 'right'}, anchors {anchors}"
        ok.append(rec(label, "/".join(sorted(got)), expected, got == {expected}, c.seconds))
    assert all(ok)
    assert total < 30.0


# ---------------------------------------------------------------------------
# 8. probabilistic cross-validation (default path counts)

PATHS = 100_000


def test_criterion_08a_bougerol(acceptance):
    rec = acceptance(8, "probabilistic cross-validation", 300.0)
    with Clock() as c:
        mc, rhs, spectral = diffusion.bougerol_check(1.0, 1.0, n_paths=PATHS)
    z = abs(mc.z_score(rhs))
    ok = [rec("(a) elementary vs double spectral integral", abs(rhs - spectral), 1e-4, abs(rhs - spectral) <= 1e-4,
              c.seconds),
          rec("(a) Monte Carlo vs elementary, |z|", z, 3.0, z <= 3.0)]
    assert all(ok)


def test_criterion_08b_conditional_laplace(acceptance):
    rec = acceptance(8, "probabilistic cross-validation", 300.0)
    with Clock() as c:
        mc, closed = diffusion.conditional_laplace_check(1.0, 1.0, 1.0, n_paths=PATHS)
    z = abs(mc.z_score(closed))
    assert rec("(b) bridge Monte Carlo vs closed form, |z|", z, 3.0, z <= 3.0, c.seconds)


@pytest.mark.parametrize("fam,x0", [(KL, 1.0), (MehlerFock(0.5), math.cosh(1.0))], ids=["kl", "mf"])
def test_criterion_08c_feynman_kac(acceptance, fam, x0):
    rec = acceptance(8, "probabilistic cross-validation", 300.0)
    psi = lambda y: np.exp(-y)
    with Clock() as c:
        est = diffusion.mc_feynman_kac(fam, psi, 0.5, x0, n_paths=PATHS)
        ref = diffusion.spectral_expectation(fam, psi, 0.5, x0)
    z = abs(est.z_score(ref))
    assert rec(f"(c) {fam.name} Feynman-Kac vs spectral integral, |z|", z, 3.0, z <= 3.0, c.seconds)


def test_criterion_08d_evolution(acceptance):
    rec = acceptance(8, "probabilistic cross-validation", 300.0)
    ok = []
    for fam, x in ((KL, 1.0), (IW, 1.0), (MF, 2.0)):
        with Clock() as c:
            worst = max(yor.evolution_residual(fam, t, s, x) for t in (0.3, 0.5, 0.7) for s in (0.3, 0.5, 0.7))
        ok.append(rec(f"(d) {fam.name} evolution residual", worst, 1e-4, worst <= 1e-4, c.seconds))
    assert all(ok)


# ---------------------------------------------------------------------------
# 9. Hartman-Watson normalization


def test_criterion_09_hartman_watson(acceptance):
    rec = acceptance(9, "Hartman-Watson normalization", 60.0)
    ok, total = [], 0.0
    for x in (0.5, 1.0, 2.0):
        with Clock() as c:
            mass = yor.hartman_watson_mass(x)
        total += c.seconds
        ok.append(rec(f"x = {x:g}, |mass - 1|", abs(mass - 1.0), 1e-3, abs(mass - 1.0) <= 1e-3, c.seconds))
    assert all(ok)
    assert total < 60.0


# ---------------------------------------------------------------------------
# 10. determinism of the check subcommand

CHECK_RUNS = [
    ["specfun"], ["yor"], ["feller"], ["monotonicity"], ["hartman-watson"], ["resolvent"],
    ["heat", "--family", "kl"], ["parseval", "--family", "kl"], ["probabilistic", "--paths", "5000"],
]


@pytest.mark.parametrize("args", CHECK_RUNS, ids=lambda a: a[0])
def test_criterion_10_check_output_is_byte_identical(acceptance, tmp_path, args):
    rec = acceptance(10, "deterministic check output", None)
    outputs = []
    with Clock() as c:
        for i in range(2):
            dest = tmp_path / f"run{i}.csv"
            proc = subprocess.run([sys.executable, "-m", "spectralindex.cli", "check", *args, "-o", str(dest)],
                                  capture_output=True, text=True, check=False)
            assert proc.returncode in (0, 1), proc.stderr
            outputs.append(dest.read_bytes())
    same = outputs[0] == outputs[1] and len(outputs[0]) > 0
    assert rec(f"check {' '.join(args)}: two runs", "identical" if same else "different", "identical", same,
               c.seconds)
