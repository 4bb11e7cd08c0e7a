"""Numerical Feller boundary classification of Sturm-Liouville operators.

For an endpoint ``e`` and interior anchor ``c`` the two test integrals are
written as double integrals over the triangle between ``e`` and ``c``::

    I_e = int (1/p)(u) M[u, c] du,     J_e = int m(u) S[u, c] du,

with ``m = (1 + q) r``, ``M`` its primitive and ``S`` the primitive of
``1/p`` (both measured from ``c``).  Neighbourhoods of ``e`` shrink
geometrically, so the computation runs in the coordinate
``s = log(|c - e| / |x - e|)`` (or ``log(1 + |x - c|)`` at an infinite end),
where every level adds a fixed increment to ``s``.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .heat import SLOperator, operator_for
from .transforms import family_from_name

__all__ = [
    "DivergedAbove",
    "BoundaryReport",
    "ClassificationSettings",
    "UndecidedBoundaryError",
    "ExpressionError",
    "parse_expression",
    "operator_from_expressions",
    "builtin_operator",
    "classify",
    "classify_both",
    "boundary_condition",
]

CLASSES = ("Regular", "Exit", "Entrance", "Natural", "Undecided")


class UndecidedBoundaryError(ValueError):
    """Raised when a boundary condition is requested for an undecided endpoint."""


class ExpressionError(ValueError):
    """Raised for coefficient expressions outside the supported grammar."""


@dataclass(frozen=True)
class DivergedAbove:
    """Marker for an integral judged infinite.

    ``partial`` is the last partial integral computed and ``rule`` names the
    criterion that fired (``"threshold"`` or ``"non-decaying increments"``).
    """

    threshold: float
    partial: float
    rule: str

    def __str__(self) -> str:
        return f"diverged({self.rule}; partial={self.partial:.6g})"


Estimate = Union[float, DivergedAbove, None]


@dataclass(frozen=True)
class ClassificationSettings:
    """Tuning of the divergence / convergence heuristics.

    Attributes
    ----------
    threshold : float
        Partial integrals above this value that keep growing for
        ``growth_steps`` refinements are declared infinite.
    growth_steps : int
        Number of consecutive refinements the trend must persist.
    rel_tol : float
        A quantity is finite once its latest increment is below
        ``rel_tol`` times its partial value and increments are decaying.
    plateau_ratio : float
        Increments whose ratio to their predecessor stays above this value
        for ``growth_steps`` refinements count as non-decaying (divergent).
    decades_per_level, max_levels, samples_per_level
        Geometry of the neighbourhood sequence and the sampling per level.
    """

    threshold: float = 1e8
    growth_steps: int = 3
    rel_tol: float = 1e-9
    plateau_ratio: float = 0.99
    decades_per_level: float = 1.0
    max_levels: int = 60
    samples_per_level: int = 256


@dataclass(frozen=True)
class BoundaryReport:
    """Classification of one endpoint.

    ``I_value``/``J_value`` are floats when judged finite, ``DivergedAbove``
    when judged infinite and ``None`` when undecided.
    """

    endpoint: str
    location: float
    classification: str
    I_value: Estimate
    J_value: Estimate
    r_mass_finite: Optional[bool]
    anchor: float
    levels: int
    p_label: str = "p(x)"
    condition: str = field(default="")

    def __post_init__(self) -> None:
        if self.endpoint not in ("a", "b"):
            raise ValueError("endpoint must be 'a' or 'b'")
        if self.classification not in CLASSES:
            raise ValueError(f"unknown classification {self.classification!r}")
        if not self.condition and self.classification != "Undecided":
            object.__setattr__(self, "condition", _condition_text(self))

    @property
    def location_text(self) -> str:
        return _fmt_point(self.location)

    def summary(self) -> str:
        return f"endpoint {self.location_text}: {self.classification}"


# ---------------------------------------------------------------------------
# expression DSL
# ---------------------------------------------------------------------------

_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "log": np.log,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _compile_node(node: ast.AST, params: dict[str, float]) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        val = float(node.value)
        return lambda x: np.full_like(x, val)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x: x
        if node.id in params:
            val = float(params[node.id])
            return lambda x: np.full_like(x, val)
        if node.id in _CONSTS:
            val = _CONSTS[node.id]
            return lambda x: np.full_like(x, val)
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        fn = _BINOPS[type(node.op)]
        left = _compile_node(node.left, params)
        right = _compile_node(node.right, params)
        return lambda x: fn(left(x), right(x))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        fn1 = _UNOPS[type(node.op)]
        inner = _compile_node(node.operand, params)
        return lambda x: fn1(inner(x))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError("only exp, log, sqrt, cosh, sinh, sin and cos may be called")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        fn2 = _FUNCS[node.func.id]
        arg = _compile_node(node.args[0], params)
        return lambda x: fn2(arg(x))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_expression(text: str, params: Optional[dict[str, float]] = None) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a coefficient expression in the variable ``x``.

    The grammar covers numbers, ``+ - * / **`` (``^`` is accepted as a
    power), parentheses, the functions ``exp log sqrt cosh sinh sin cos``, the
    constants ``pi`` and ``e``, and any names supplied in ``params``.

    Examples
    --------
    >>> f = parse_expression("x^2 - 1")
    >>> float(f(np.array(3.0)))
    8.0
    """
    src = text.strip().replace("^", "**")
    if not src:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    compiled = _compile_node(tree.body, dict(params or {}))

    def evaluate(x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return compiled(arr)

    return evaluate


def _parse_bound(text: Union[str, float]) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    low = text.strip().lower()
    if low in ("inf", "+inf", "infinity", "oo"):
        return math.inf
    if low in ("-inf", "-infinity", "-oo"):
        return -math.inf
    return float(low)


def operator_from_expressions(p: str, q: str, r: str, a: Union[str, float], b: Union[str, float],
                              params: Optional[dict[str, float]] = None) -> SLOperator:
    """Build an :class:`SLOperator` from three coefficient expressions."""
    lo, hi = _parse_bound(a), _parse_bound(b)
    if not lo < hi:
        raise ValueError("interval must satisfy a < b")
    return SLOperator(parse_expression(p, params), parse_expression(q, params),
                      parse_expression(r, params), lo, hi, None, (p, q, r))


def builtin_operator(name: str) -> SLOperator:
    """Operator of a named family: ``kl``, ``iw:<alpha>`` or ``mf:<mu>``."""
    tag, _, arg = name.partition(":")
    tag = tag.strip().lower()
    if tag == "kl":
        if arg:
            raise ValueError("kl takes no parameter")
        return operator_for(family_from_name("kl"))
    if tag not in ("iw", "mf"):
        raise ValueError(f"unknown built-in operator {name!r}; use kl, iw:<alpha> or mf:<mu>")
    value = float(arg) if arg else 0.0
    if tag == "iw":
        return operator_for(family_from_name("iw", alpha=value))
    return operator_for(family_from_name("mf", mu=value))


# ---------------------------------------------------------------------------
# geometry of the neighbourhood sequence
# ---------------------------------------------------------------------------


def _coordinate(op: SLOperator, endpoint: str, anchor: float):
    """Map ``s >= 0`` to ``x`` (``s = 0`` at the anchor) plus ``|dx/ds|`` and the usable ``s`` range."""
    e = op.a if endpoint == "a" else op.b
    toward = -1.0 if endpoint == "a" else 1.0
    if math.isfinite(e):
        dist0 = abs(anchor - e)
        # below this gap the coefficients cannot be told apart from their value at e
        gap_min = max(1e-300, 64.0 * np.finfo(float).eps * abs(e))
        s_max = math.log(dist0 / gap_min)

        def x_of(s):
            return e - toward * dist0 * np.exp(-s)

        def jac(s):
            return dist0 * np.exp(-s)
    else:
        s_max = 690.0

        def x_of(s):
            return anchor + toward * np.expm1(s)

        def jac(s):
            return np.exp(s)
    return x_of, jac, s_max


def _fmt_point(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:g}"


# ---------------------------------------------------------------------------
# decision rules
# ---------------------------------------------------------------------------


class _Tracker:
    """Partial integrals per level and the finite/infinite verdict."""

    def __init__(self, cfg: ClassificationSettings):
        self.cfg = cfg
        self.values: list[float] = []
        self.verdict: Estimate = None
        self.decided = False

    def push(self, value: float) -> None:
        if self.decided:
            return
        self.values.append(value)
        cfg, vals = self.cfg, self.values
        n = cfg.growth_steps
        if not math.isfinite(value):
            self._diverge(value, "threshold")
            return
        if len(vals) < n + 1:
            return
        tail = vals[-(n + 1):]
        incs = np.diff(tail)
        if value > cfg.threshold and np.all(incs > 0):
            self._diverge(value, "threshold")
            return
        if len(vals) >= n + 2:
            incs = np.diff(vals[-(n + 2):])
            if np.all(incs[1:] >= cfg.plateau_ratio * incs[:-1]) and incs[-1] > 0:
                self._diverge(value, "non-decaying increments")
                return
        last, prev = vals[-1] - vals[-2], vals[-2] - vals[-3]
        if last <= cfg.rel_tol * abs(value) and last <= 0.5 * max(prev, 0.0) + cfg.rel_tol * abs(value):
            self.verdict = value
            self.decided = True

    def _diverge(self, value: float, rule: str) -> None:
        self.verdict = DivergedAbove(self.cfg.threshold, value, rule)
        self.decided = True


def _is_finite(est: Estimate) -> Optional[bool]:
    if est is None:
        return None
    return not isinstance(est, DivergedAbove)


def _label(i_fin: Optional[bool], j_fin: Optional[bool]) -> str:
    if i_fin is None or j_fin is None:
        return "Undecided"
    return {(True, True): "Regular", (True, False): "Exit",
            (False, True): "Entrance", (False, False): "Natural"}[(i_fin, j_fin)]


def _default_anchor(op: SLOperator) -> float:
    a, b = op.a, op.b
    if math.isfinite(a) and math.isfinite(b):
        return 0.5 * (a + b)
    if math.isfinite(a):
        return a + 1.0
    if math.isfinite(b):
        return b - 1.0
    return 0.0


def classify(op: SLOperator, endpoint: str, c: Optional[float] = None,
             settings: Optional[ClassificationSettings] = None) -> BoundaryReport:
    """Classify endpoint ``"a"`` or ``"b"`` of ``op`` as Regular/Exit/Entrance/Natural.

    Parameters
    ----------
    op : SLOperator
        Coefficients must be positive (``p``, ``r``) and nonnegative (``q``)
        near the endpoint.
    endpoint : {"a", "b"}
    c : float, optional
        Interior anchor; defaults to the midpoint of a finite interval or to
        one unit inside the finite end.
    settings : ClassificationSettings, optional

    Returns
    -------
    BoundaryReport
        ``classification == "Undecided"`` when the heuristics do not settle
        one of the integrals within the available neighbourhoods.
    """
    if endpoint not in ("a", "b"):
        raise ValueError("endpoint must be 'a' or 'b'")
    cfg = settings or ClassificationSettings()
    anchor = _default_anchor(op) if c is None else float(c)
    if not op.a < anchor < op.b:
        raise ValueError("anchor must lie strictly inside the interval")
    x_of, jac, s_max = _coordinate(op, endpoint, anchor)
    step = cfg.decades_per_level * math.log(10.0)
    n_levels = min(cfg.max_levels, int(s_max // step))

    trackers = {k: _Tracker(cfg) for k in ("I", "J", "R")}
    s_state = m_state = i_state = j_state = r_state = 0.0
    done = 0
    for level in range(n_levels):
        s = np.linspace(level * step, (level + 1) * step, cfg.samples_per_level + 1)
        x = x_of(s)
        dx = jac(s)
        with np.errstate(all="ignore"):
            inv_p = dx / op.p(x)
            m = dx * (1.0 + op.q(x)) * op.r(x)
            r = dx * np.broadcast_to(op.r(x), s.shape)
        if not (np.all(np.isfinite(inv_p)) and np.all(np.isfinite(m))):
            break
        if np.any(inv_p <= 0) or np.any(m <= 0):
            raise ValueError(f"coefficients violate p, r > 0, q >= 0 near endpoint {endpoint}")
        s_cum = s_state + cumulative_simpson(inv_p, x=s, initial=0.0)
        m_cum = m_state + cumulative_simpson(m, x=s, initial=0.0)
        i_state += simpson(inv_p * m_cum, x=s)
        j_state += simpson(m * s_cum, x=s)
        r_state += simpson(r, x=s)
        s_state, m_state = s_cum[-1], m_cum[-1]
        trackers["I"].push(i_state)
        trackers["J"].push(j_state)
        trackers["R"].push(r_state)
        done = level + 1
        if all(t.decided for t in trackers.values()):
            break

    i_est, j_est = trackers["I"].verdict, trackers["J"].verdict
    label = _label(_is_finite(i_est), _is_finite(j_est))
    labels = op.labels or ("p(x)", "q(x)", "r(x)")
    return BoundaryReport(
        endpoint=endpoint,
        location=op.a if endpoint == "a" else op.b,
        classification=label,
        I_value=i_est,
        J_value=j_est,
        r_mass_finite=_is_finite(trackers["R"].verdict),
        anchor=anchor,
        levels=done,
        p_label=labels[0],
    )


def classify_both(op: SLOperator, c: Optional[float] = None,
                  settings: Optional[ClassificationSettings] = None) -> tuple[BoundaryReport, BoundaryReport]:
    """Reports for both endpoints with a common anchor."""
    return classify(op, "a", c, settings), classify(op, "b", c, settings)


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------


def _condition_text(report: BoundaryReport) -> str:
    e = report.location_text
    arrow = f"x -> {e}"
    flux = f"({report.p_label}) * u'(x)"
    cls = report.classification
    if cls == "Regular":
        return (f"(1 - alpha_e) * lim[{arrow}] u(x) + alpha_e * lim[{arrow}] {flux} = 0,"
                " alpha_e in [0, 1] free")
    if cls == "Exit":
        return f"lim[{arrow}] u(x) = 0"
    if cls == "Entrance":
        return f"lim[{arrow}] {flux} = 0"
    if cls == "Natural":
        if report.r_mass_finite is None:
            return "undetermined (r-mass near the endpoint undecided)"
        if report.r_mass_finite:
            return f"lim[{arrow}] {flux} = 0"
        return "no boundary condition"
    return ""


def boundary_condition(report: BoundaryReport) -> str:
    """Boundary condition that makes the operator self-adjoint at ``report.endpoint``.

    Raises
    ------
    UndecidedBoundaryError
        If the classification (or, for a natural end, the finiteness of the
        ``r``-mass) was not decided.
    """
    if report.classification == "Undecided":
        raise UndecidedBoundaryError(f"endpoint {report.location_text} is undecided")
    if report.classification == "Natural" and report.r_mass_finite is None:
        raise UndecidedBoundaryError(f"r-mass near {report.location_text} is undecided")
    return _condition_text(report)
