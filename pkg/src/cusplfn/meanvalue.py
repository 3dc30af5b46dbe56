"""Second-moment experiments: the Rankin slope C_f, the mean-value
constants A_{f,m}, the coefficient tail sums, and quadrature of

    I(T) = integral_0^T |L_f^(m)(sigma + it)|^2 dt

against the predicted main terms (A_{f,m} T (log T)^{2m+1} on the critical
line, T times the coefficient sum for 1/2 < sigma <= 1).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np
from scipy.special import gammaincc

from .forms import CuspForm
from .lseries import (AFE_T_MIN, EvaluationError, afe_smoothed,
                      min_correction_depth, oracle_derivative)

__all__ = [
    "QuadSpec",
    "RankinEstimate",
    "TailSum",
    "MomentReport",
    "rankin_constant",
    "a_fm",
    "a_fm_fraction",
    "tail_sum",
    "second_moment",
    "moment_report",
    "report_to_csv",
    "report_metadata",
]

TWO_PI = 2.0 * math.pi

# Numerically verified envelope constant: sum_{n<=u} d(n)^2 <= C2 u (log u + 1)^3
# for 2 <= u <= 10^7 (asymptotically the ratio tends to 1/pi^2 ~ 0.10).
_D2_ENVELOPE = 0.45


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature policy for the moment integral."""

    panel_width_cap: float = 0.25
    nodes_per_panel: int = 8
    oracle_cutoff: float = 40.0     # reference evaluator below, smoothed AFE above
    circle_nodes: int = 16          # Cauchy nodes for m >= 1 on the oracle stretch
    refine_every: int = 16          # panel-refinement sampling stride
    refine_rel_tol: float = 0.01
    zero_to_one_nodes: int = 16
    threads: int = 1

    def __post_init__(self):
        if self.oracle_cutoff < AFE_T_MIN:
            raise ValueError("oracle_cutoff must be at least the AFE threshold")
        if self.nodes_per_panel < 4:
            raise ValueError("nodes_per_panel must be at least 4")


@dataclass
class RankinEstimate:
    x_grid: list[int]
    partial_slopes: list[float]
    c_f: float
    fluctuation: float


@dataclass
class TailSum:
    value: float
    tail_bound: float
    n_used: int


@dataclass
class MomentReport:
    form_label: str
    m: int
    sigma: float
    T_grid: list[float]
    I_values: list[float]
    predictions: list[float]
    ratios: list[float]
    panel_width: float
    nodes_per_panel: int
    method_runs: list[tuple[float, float, str]] = field(default_factory=list)
    refine_discrepancy: float = 0.0
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# Rankin slope and the A_{f,m} prefactor
# ---------------------------------------------------------------------------

def rankin_constant(form: CuspForm, x_max: int) -> RankinEstimate:
    """Slopes of sum_{n<=x} lambda(n)^2 at x = x_max/16 ... x_max."""
    if x_max < 1000:
        raise EvaluationError("rankin_constant needs x_max >= 1000")
    if x_max > form.n_max:
        raise EvaluationError("x_max exceeds the stored coefficient table")
    lam2 = form.lam[:x_max + 1] ** 2
    cum = np.cumsum(lam2)
    grid = [x_max // 16, x_max // 8, x_max // 4, x_max // 2, x_max]
    slopes = [float(cum[x]) / x for x in grid]
    c_f = slopes[-1]
    fluctuation = max(abs(sl - c_f) for sl in slopes)
    form.rankin_cf = c_f
    return RankinEstimate(grid, slopes, c_f, fluctuation)


def a_fm_fraction(m: int) -> Fraction:
    """Exact rational prefactor of A_{f,m} (the factor multiplying C_f)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    total = Fraction(1, 2 * m + 1)
    for r in range(0, 2 * m + 1):
        inner = sum(math.comb(m, r1) * math.comb(m, r - r1)
                    for r1 in range(max(0, r - m), min(r, m) + 1))
        total += Fraction((-2) ** (2 * m - r), r + 1) * inner
    return total


def a_fm(m: int, c_f: float) -> float:
    """A_{f,m} = (exact rational prefactor) * C_f."""
    if not m <= 4:
        raise ValueError("m outside supported range 0..4")
    if c_f <= 0:
        raise ValueError("c_f must be positive")
    return float(a_fm_fraction(m)) * c_f


# ---------------------------------------------------------------------------
# coefficient tail sums
# ---------------------------------------------------------------------------

def _log_tail_integral(order: int, s0: float, n0: float) -> float:
    """integral_n0^inf u^(-s0) (log u)^order du, s0 > 1."""
    x = (s0 - 1.0) * math.log(n0)
    return math.gamma(order + 1.0) * float(gammaincc(order + 1.0, x)) \
        / (s0 - 1.0) ** (order + 1)


def tail_sum(form: CuspForm, m: int, sigma: float) -> TailSum:
    """sum_n lambda(n)^2 (log n)^{2m} n^{-2 sigma}, partial plus tail bound.

    The tail beyond the table majorizes lambda(n)^2 by d(n)^2 and uses the
    verified envelope sum_{n<=u} d(n)^2 <= 0.45 u (log u + 1)^3.
    """
    if not 0.5 < sigma <= 1.0:
        raise EvaluationError("tail_sum needs 1/2 < sigma <= 1 (divergent otherwise)")
    if m < 0 or m > 2:
        raise EvaluationError("tail_sum supports m in 0..2")
    n = form.n_max
    ns = np.arange(1, n + 1)
    logs = np.log(ns)
    value = float(np.sum(form.lam[1:n + 1] ** 2 * logs ** (2 * m) * ns ** (-2.0 * sigma)))
    a = 2 * m
    j = {o: _log_tail_integral(o, 2 * sigma, float(n))
         for o in range(max(0, a - 1), a + 4)}
    bound = _D2_ENVELOPE * 8.0 * (2 * sigma * (j[a + 3] + j[a])
                                  + (a if a else 0) * (j[a + 2] + j[max(0, a - 1)]))
    return TailSum(value, bound, n)


# ---------------------------------------------------------------------------
# the moment integral
# ---------------------------------------------------------------------------

def _integrand(form: CuspForm, m: int, sigma: float, t: float, quad: QuadSpec) -> float:
    s = complex(sigma, t)
    if abs(t) <= quad.oracle_cutoff:
        if m == 0:
            val = oracle_derivative(form, 0, s).value
        else:
            val = oracle_derivative(form, m, s, nodes=quad.circle_nodes).value
    else:
        val = afe_smoothed(form, m, s).value
    return abs(val) ** 2


def _panel_value(form, m, sigma, t0, t1, nodes, quad) -> float:
    x, wt = np.polynomial.legendre.leggauss(nodes)
    mid, half = (t0 + t1) / 2.0, (t1 - t0) / 2.0
    acc = 0.0
    for xi, wi in zip(x, wt):
        acc += wi * _integrand(form, m, sigma, mid + half * xi, quad)
    return acc * half


def _zero_to_one(form: CuspForm, m: int, sigma: float, quad: QuadSpec) -> float:
    x, wt = np.polynomial.legendre.leggauss(quad.zero_to_one_nodes)
    acc = 0.0
    for xi, wi in zip(x, wt):
        t = 0.5 + 0.5 * xi
        if m == 0:
            val = oracle_derivative(form, 0, complex(sigma, t)).value
        else:
            val = oracle_derivative(form, m, complex(sigma, t),
                                    nodes=quad.circle_nodes).value
        acc += wi * abs(val) ** 2
    return acc * 0.5


def _panel_width(T_max: float, quad: QuadSpec) -> float:
    return min(quad.panel_width_cap, math.pi / math.log(max(T_max, 8.0) / TWO_PI))


def _prediction(form: CuspForm, m: int, sigma: float, T: float) -> float:
    if abs(sigma - 0.5) < 1e-12:
        if form.rankin_cf is None:
            rankin_constant(form, min(form.n_max, 10 ** 6))
        return a_fm(m, form.rankin_cf) * T * math.log(T) ** (2 * m + 1)
    return T * tail_sum(form, m, sigma).value


def moment_report(form: CuspForm, m: int, sigma: float, T_grid: list[float],
                  quad: QuadSpec | None = None) -> MomentReport:
    """I(T) on an increasing grid with shared panels, plus predictions."""
    quad = quad or QuadSpec()
    if not 0.5 <= sigma <= 1.0:
        raise EvaluationError("second moment needs sigma in [1/2, 1]")
    if m > 2:
        raise EvaluationError("second moment supports m <= 2")
    T_grid = sorted(float(T) for T in T_grid)
    if not T_grid or T_grid[0] <= 1.0:
        raise EvaluationError("T grid must be > 1")
    if T_grid[-1] > 2000.0:
        raise EvaluationError("T beyond the desk-scale cap 2000")
    width = _panel_width(T_grid[-1], quad)
    for T in T_grid:
        if abs((T - 1.0) / width - round((T - 1.0) / width)) > 1e-9:
            raise EvaluationError(
                f"T = {T} is not aligned to the panel width {width}")
    start = time.time()
    head = _zero_to_one(form, m, sigma, quad)
    n_panels = round((T_grid[-1] - 1.0) / width)
    edges = 1.0 + width * np.arange(n_panels + 1)

    panel_vals = _compute_panels(form, m, sigma, edges, quad)

    # panel-refinement audit on a sampled stride
    discrepancy = 0.0
    running = head + 0.0
    refined_checked = 0
    for i in range(0, n_panels, quad.refine_every):
        t0, t1 = edges[i], edges[i + 1]
        split = _panel_value(form, m, sigma, t0, (t0 + t1) / 2, quad.nodes_per_panel, quad) \
            + _panel_value(form, m, sigma, (t0 + t1) / 2, t1, quad.nodes_per_panel, quad)
        discrepancy += abs(split - panel_vals[i])
        refined_checked += 1
    total_abs = head + float(np.sum(panel_vals))
    scaled = discrepancy * (n_panels / max(1, refined_checked))
    if scaled > quad.refine_rel_tol * max(total_abs, 1e-30):
        raise EvaluationError(
            f"panel refinement disagreement {scaled:.3e} exceeds "
            f"{quad.refine_rel_tol:.0%} of the running total {total_abs:.6e}")

    I_values, predictions, ratios = [], [], []
    running = head
    idx = 0
    for T in T_grid:
        target = round((T - 1.0) / width)
        while idx < target:
            running += panel_vals[idx]
            idx += 1
        pred = _prediction(form, m, sigma, T)
        I_values.append(running)
        predictions.append(pred)
        ratios.append(running / pred if pred else math.inf)

    runs = [(1.0, min(quad.oracle_cutoff, T_grid[-1]), "oracle")]
    if T_grid[-1] > quad.oracle_cutoff:
        runs.append((quad.oracle_cutoff, T_grid[-1], "afe_smoothed"))
    return MomentReport(
        form_label=f"weight-{form.weight}", m=m, sigma=sigma,
        T_grid=T_grid, I_values=I_values, predictions=predictions, ratios=ratios,
        panel_width=width, nodes_per_panel=quad.nodes_per_panel,
        method_runs=runs, refine_discrepancy=scaled,
        wall_time=time.time() - start)


def second_moment(form: CuspForm, m: int, sigma: float, T: float,
                  quad: QuadSpec | None = None) -> MomentReport:
    """Single-point I(T); see moment_report for the grid version."""
    return moment_report(form, m, sigma, [T], quad)


# --- panel evaluation, optionally in a worker pool -------------------------

_POOL_STATE: dict = {}


def _panel_chunk(args):
    lo, hi = args
    form = _POOL_STATE["form"]
    m, sigma, quad = _POOL_STATE["m"], _POOL_STATE["sigma"], _POOL_STATE["quad"]
    edges = _POOL_STATE["edges"]
    return [
        _panel_value(form, m, sigma, edges[i], edges[i + 1], quad.nodes_per_panel, quad)
        for i in range(lo, hi)
    ]


def _compute_panels(form, m, sigma, edges, quad) -> np.ndarray:
    n_panels = len(edges) - 1
    if quad.threads <= 1 or n_panels < 32:
        return np.array([
            _panel_value(form, m, sigma, edges[i], edges[i + 1],
                         quad.nodes_per_panel, quad)
            for i in range(n_panels)
        ])
    import concurrent.futures as cf
    import multiprocessing as mp
    _POOL_STATE.update(form=form, m=m, sigma=sigma, quad=quad, edges=edges)
    chunk = max(8, n_panels // (quad.threads * 8))
    ranges = [(lo, min(lo + chunk, n_panels)) for lo in range(0, n_panels, chunk)]
    ctx = mp.get_context("fork")
    out: list[list[float]] = []
    with cf.ProcessPoolExecutor(max_workers=quad.threads, mp_context=ctx) as pool:
        out = list(pool.map(_panel_chunk, ranges))
    vals: list[float] = []
    for block in out:  # fixed ascending order regardless of completion order
        vals.extend(block)
    return np.array(vals)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def report_to_csv(report: MomentReport) -> str:
    lines = ["T,I,prediction,ratio"]
    for T, I, pred, ratio in zip(report.T_grid, report.I_values,
                                 report.predictions, report.ratios):
        lines.append(",".join(format(v, ".17g") for v in (T, I, pred, ratio)))
    return "\n".join(lines) + "\n"


def report_metadata(report: MomentReport, extra: dict | None = None) -> str:
    from . import __version__
    payload = asdict(report)
    payload["library_version"] = __version__
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
