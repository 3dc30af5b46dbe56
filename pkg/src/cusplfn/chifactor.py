"""The functional-equation factor chi_f(s), its derivatives, and the
stadium-contour integrals gamma_j used by the smoothed approximate
functional equation.

chi_f(s) = (-1)^{k/2} (2 pi)^{2s-1} Gamma(1-s+(k-1)/2) / Gamma(s+(k-1)/2).

The log-derivative ratios chi^{(r)}/chi are exact polynomials in the
derivatives of log chi (complete Bell polynomials, generated by the
recurrence h_{r+1} = h_r' + h_r * g_1).  The gamma_j are computed by
quadrature along a stadium around [-1/2-sigma, 3/2-sigma]: trapezoid in
angle on the two arcs (Richardson-extrapolated under node doubling) and
composite Gauss-Legendre on the two straight segments.  Orientation is
counterclockwise, fixed so that the j = 0 integral reproduces
(chi^{(r)}/chi)(1-s) with positive sign.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .forms import CuspForm
from .special import PrecisionPolicy, _digamma_u, _log_gamma_u, _polygamma_u

__all__ = [
    "ChiContext",
    "ContourSpec",
    "DomainError",
    "QuadratureError",
    "chi",
    "chi_asymptotic",
    "chi_log_deriv_ratio",
    "chi_derivative",
    "gamma_j",
    "gamma_j_residues",
]

TWO_PI = 2.0 * math.pi
_LOG_2PI = math.log(TWO_PI)


class DomainError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChiContext:
    form: CuspForm
    precision: PrecisionPolicy = field(default_factory=PrecisionPolicy)

    @property
    def k(self) -> int:
        return self.form.weight

    @property
    def half(self) -> float:
        return (self.form.weight - 1) / 2.0

    @property
    def sign(self) -> int:
        return -1 if (self.form.weight // 2) % 2 else 1


@dataclass(frozen=True)
class ContourSpec:
    """Stadium contour around [-1/2-sigma, 3/2-sigma] with the given radius."""

    sigma: float
    radius: float
    nodes_per_arc: int = 64
    nodes_per_segment: int = 64

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.nodes_per_arc < 16 or self.nodes_per_segment < 16:
            raise ValueError("node counts must be at least 16")

    @property
    def left_center(self) -> float:
        return -0.5 - self.sigma

    @property
    def right_center(self) -> float:
        return 1.5 - self.sigma


def _near_nonpositive_int(z: complex) -> bool:
    return abs(z.imag) < 1e-12 and z.real < 0.5 and abs(z.real - round(z.real)) < 1e-12


def chi(ctx: ChiContext, s: complex) -> complex:
    """chi_f(s), computed from a log-gamma difference."""
    c = ctx.half
    s = complex(s)
    if _near_nonpositive_int(1 - s + c):
        raise DomainError(f"chi pole: 1-s+(k-1)/2 = {1 - s + c} is a nonpositive integer")
    if _near_nonpositive_int(s + c):
        return 0.0  # zero from the reciprocal gamma factor
    lg = complex(_log_gamma_u(complex(1 - s + c))) - complex(_log_gamma_u(complex(s + c)))
    return ctx.sign * cmath.exp((2 * s - 1) * _LOG_2PI + lg)


def chi_asymptotic(ctx: ChiContext, s: complex) -> complex:
    """Leading Stirling approximant of chi_f(s); diagnostics only, |t| >= 5."""
    s = complex(s)
    sigma, t = s.real, s.imag
    if abs(t) < 5.0:
        raise DomainError("chi_asymptotic requires |Im s| >= 5")
    sgn = 1.0 if t > 0 else -1.0
    phase = 0.5 * math.pi * (1 - ctx.k) * sgn - 2.0 * t * math.log(abs(t) / (TWO_PI * math.e))
    return ctx.sign * TWO_PI ** (2 * sigma - 1) * abs(t) ** (1 - 2 * sigma) * \
        cmath.exp(1j * phase)


# ---------------------------------------------------------------------------
# chi^{(r)}/chi via Bell polynomials in the log-derivatives
# ---------------------------------------------------------------------------

_MAX_RATIO_ORDER = 4
_BELL_CACHE: dict[int, dict[tuple[int, ...], int]] = {}


def _bell_monomials(r: int) -> dict[tuple[int, ...], int]:
    """h_r = F^{(r)}/F as {exponents of (g_1..g_r): integer coefficient}."""
    if r in _BELL_CACHE:
        return _BELL_CACHE[r]
    h: dict[tuple[int, ...], int] = {(): 1}
    for step in range(r):
        nh: dict[tuple[int, ...], int] = {}
        for expo, cf in h.items():
            # differentiate: g_i -> g_{i+1} one factor at a time
            for i, e in enumerate(expo):
                if e > 0:
                    ne = list(expo) + [0] * (step + 1 - len(expo))
                    ne[i] -= 1
                    ne[i + 1] += 1
                    key = tuple(ne)
                    nh[key] = nh.get(key, 0) + cf * e
            # multiply by g_1
            ne = list(expo) + [0] * (step + 1 - len(expo))
            ne[0] += 1
            key = tuple(ne)
            nh[key] = nh.get(key, 0) + cf
        h = {kk: v for kk, v in nh.items() if v}
    _BELL_CACHE[r] = h
    return h


def _log_chi_derivs(ctx: ChiContext, z, r: int):
    """[G^{(1)}(z), ..., G^{(r)}(z)] for G = log chi; z scalar or array."""
    c = ctx.half
    za = np.asarray(z, dtype=np.complex128)
    out = [2 * _LOG_2PI - _digamma_u(1 - za + c) - _digamma_u(za + c)]
    for j in range(2, r + 1):
        out.append((-1) ** j * _polygamma_u(j - 1, 1 - za + c)
                   - _polygamma_u(j - 1, za + c))
    return out


def _ratio_values(ctx: ChiContext, r: int, z):
    """chi^{(r)}/chi at z (scalar or ndarray)."""
    if r == 0:
        return np.ones_like(np.asarray(z, dtype=np.complex128)) \
            if isinstance(z, np.ndarray) else 1.0 + 0.0j
    g = _log_chi_derivs(ctx, z, r)
    tot = np.zeros_like(np.asarray(z, dtype=np.complex128))
    for expo, cf in _bell_monomials(r).items():
        term = complex(cf) * np.ones_like(tot)
        for i, e in enumerate(expo):
            if e:
                term = term * g[i] ** e
        tot = tot + term
    return tot if isinstance(z, np.ndarray) else complex(tot)


def _check_ratio_domain(ctx: ChiContext, s: complex) -> None:
    if abs(s.real) >= ctx.k / 2 - 1 and abs(s.imag) <= 0.5:
        raise DomainError(
            f"s = {s} lies in the excluded real-axis strips |Re s| >= k/2-1, |Im s| <= 1/2")


def chi_log_deriv_ratio(ctx: ChiContext, r: int, s: complex) -> complex:
    """chi_f^{(r)}(s) / chi_f(s) for r = 0..4."""
    if not 0 <= r <= _MAX_RATIO_ORDER:
        raise DomainError(f"derivative order r = {r} outside 0..{_MAX_RATIO_ORDER}")
    s = complex(s)
    _check_ratio_domain(ctx, s)
    return complex(_ratio_values(ctx, r, s))


def chi_derivative(ctx: ChiContext, r: int, s: complex) -> complex:
    """chi_f^{(r)}(s) = chi_f(s) * (chi^{(r)}/chi)(s)."""
    if r == 0:
        return chi(ctx, s)
    return chi(ctx, s) * chi_log_deriv_ratio(ctx, r, s)


# ---------------------------------------------------------------------------
# gamma_j contour integrals
# ---------------------------------------------------------------------------

def gamma_j_residues(ctx: ChiContext, j: int, r: int, s: complex, rho: float) -> complex:
    """Closed-form value of gamma_j by summing the residues at w = 0..-j.

    Independent cross-check of the quadrature (valid once the contour
    encloses every pole of 1/(w(w+1)...(w+j))).
    """
    c = ctx.half
    s = complex(s)
    t = s.imag
    zeta = rho * cmath.exp(-0.5j * math.pi * (1.0 if t > 0 else -1.0))
    tot = 0.0 + 0.0j
    falling = 1.0 + 0.0j
    for i in range(j + 1):
        if i > 0:
            falling *= (s + c - i)
        num = complex(_ratio_values(ctx, r, complex(1 - s + i))) * zeta ** (-i)
        den = (-1.0) ** i * math.factorial(i) * math.factorial(j - i) * falling
        tot += num / den
    return tot


def _required_radius(j: int, sigma: float) -> float:
    # pole at w = -j sits at distance j - 1/2 - sigma from the left center
    return (j - 0.5 - sigma) + 1.0


def _radius_cap(t_abs: float) -> float:
    # keep the stadium clear of the gamma poles / excluded strips at Im w = -t
    return t_abs - 1.4


def _romberg(table: list[complex]) -> complex:
    acc = list(table)
    for m in range(1, len(acc)):
        for i in range(len(acc) - 1, m - 1, -1):
            acc[i] = acc[i] + (acc[i] - acc[i - 1]) / (4.0 ** m - 1.0)
    return acc[-1]


class _StadiumIntegrator:
    """Shared-node evaluation of the gamma_j integrand family on one stadium.

    The expensive pieces (log-gamma ratio, chi-ratio) depend on (r, node)
    only, so one node sweep serves every (j, r) pair with the same radius.
    """

    def __init__(self, ctx: ChiContext, s: complex, rho: float, radius: float,
                 sigma: float, r_orders: tuple[int, ...], j_max: int):
        self.ctx = ctx
        self.s = complex(s)
        self.c = ctx.half
        self.rho = rho
        self.radius = radius
        self.aL = -0.5 - sigma
        self.aR = 1.5 - sigma
        self.r_orders = r_orders
        self.j_max = j_max
        t = self.s.imag
        self.log_zeta = math.log(rho) - 0.5j * math.pi * (1.0 if t > 0 else -1.0)
        self.lg_den = complex(_log_gamma_u(complex(self.s + self.c)))

    def _common(self, w: np.ndarray) -> dict[int, np.ndarray]:
        base = np.exp(_log_gamma_u(self.s + w + self.c) - self.lg_den
                      + w * self.log_zeta)
        out = {}
        for r in self.r_orders:
            if r == 0:
                out[r] = base
            else:
                out[r] = base * _ratio_values(self.ctx, r, 1 - self.s - w)
        return out

    def _accumulate(self, w: np.ndarray, dw: np.ndarray, sums: dict):
        fr = self._common(w)
        poch = np.copy(w)
        for j in range(1, self.j_max + 1):
            poch = poch * (w + j)
            inv = dw / poch
            for r in self.r_orders:
                sums[(j, r)] = sums.get((j, r), 0.0) + np.sum(fr[r] * inv)

    def arcs(self, n: int) -> dict:
        """Both arcs by the n-interval trapezoid rule in angle."""
        sums: dict = {}
        for center, th0, th1 in ((self.aL, 0.5 * math.pi, 1.5 * math.pi),
                                 (self.aR, -0.5 * math.pi, 0.5 * math.pi)):
            th = np.linspace(th0, th1, n + 1)
            w = center + self.radius * np.exp(1j * th)
            dw = 1j * self.radius * np.exp(1j * th) * ((th1 - th0) / n)
            dw[0] *= 0.5
            dw[-1] *= 0.5
            self._accumulate(w, dw, sums)
        return sums

    def segments(self, panels: int) -> dict:
        """Both straight segments by composite 8-node Gauss-Legendre."""
        x, wt = np.polynomial.legendre.leggauss(8)
        sums: dict = {}
        for w0, w1 in ((self.aL - 1j * self.radius, self.aR - 1j * self.radius),
                       (self.aR + 1j * self.radius, self.aL + 1j * self.radius)):
            step = (w1 - w0) / panels
            for i in range(panels):
                mid = w0 + step * (i + 0.5)
                w = mid + 0.5 * step * x
                dw = wt * (0.5 * step)
                self._accumulate(w, dw.astype(np.complex128), sums)
        return sums


def _gamma_j_batch(ctx: ChiContext, s: complex, rho: float,
                   pairs: list[tuple[int, int]],
                   contour: ContourSpec | None = None,
                   tol: float = 1e-9, max_doublings: int = 5) -> dict:
    """gamma_j^{(r)}(s, rho) for each (j, r) pair, sharing node sweeps."""
    s = complex(s)
    sigma, t = s.real, s.imag
    if abs(t) < 10.0:
        raise DomainError("gamma_j requires |Im s| >= 10")
    if rho <= 0.0:
        raise DomainError("gamma_j requires rho > 0")
    spec = contour or ContourSpec(sigma=sigma, radius=math.sqrt(abs(t)))
    results: dict = {}
    j_all = sorted({j for j, _ in pairs})
    # group by the radius needed to keep the Pochhammer poles off the contour
    groups: dict[float, list[int]] = {}
    for j in j_all:
        radius = max(spec.radius, _required_radius(j, sigma))
        if radius > _radius_cap(abs(t)):
            raise QuadratureError(
                f"gamma_{j} at |t| = {abs(t):g}: contour radius {radius:.2f} needed to "
                f"enclose the pole at w = -{j} exceeds the safe cap {_radius_cap(abs(t)):.2f};"
                " increase |t| or decrease j")
        groups.setdefault(radius, []).append(j)
    for radius, js in groups.items():
        sub = [(j, r) for (j, r) in pairs if j in js]
        r_orders = tuple(sorted({r for _, r in sub}))
        integ = _StadiumIntegrator(ctx, s, rho, radius, sigma, r_orders, max(js))
        arc_hist: dict[tuple, list[complex]] = {key: [] for key in sub}
        prev: dict[tuple, complex] = {}
        converged = False
        for level in range(max_doublings):
            n_arc = spec.nodes_per_arc * (1 << level)
            panels = max(2, (spec.nodes_per_segment * (1 << level)) // 8)
            arcs = integ.arcs(n_arc)
            segs = integ.segments(panels)
            current: dict[tuple, complex] = {}
            for key in sub:
                arc_hist[key].append(arcs[key])
                current[key] = (_romberg(arc_hist[key]) + segs[key]) / (2j * math.pi)
            if prev and all(
                    abs(current[key] - prev[key]) <= tol * max(1.0, abs(current[key]))
                    for key in sub):
                converged = True
                results.update(current)
                break
            prev = current
        if not converged:
            worst = max(sub, key=lambda key: abs(current[key] - prev.get(key, 0)))
            raise QuadratureError(
                f"gamma_j quadrature did not reach {tol:g} after {max_doublings} "
                f"doublings (radius {radius:.2f}, worst pair {worst}, "
                f"last change {abs(current[worst] - prev[worst]):.3e})")
    return results


def gamma_j(ctx: ChiContext, j: int, r: int, s: complex, rho: float,
            contour: ContourSpec | None = None, tol: float = 1e-9) -> complex:
    """gamma_j^{(r)}(s, rho) by stadium quadrature.

    j >= 0, r in 0..4; the contour radius defaults to sqrt|t| and is
    enlarged when a Pochhammer pole would touch it (the value is contour
    independent by Cauchy's theorem as long as nothing else is crossed).
    """
    if j < 0:
        raise DomainError("gamma_j requires j >= 0")
    if not 0 <= r <= _MAX_RATIO_ORDER:
        raise DomainError(f"gamma_j requires 0 <= r <= {_MAX_RATIO_ORDER}")
    if j == 0:
        # single pole at the origin; the batch machinery starts at j = 1
        batch = _gamma_j_batch(ctx, s, rho, [(1, r)], contour, tol)
        val1 = batch[(1, r)]
        # gamma_0 = gamma_1 + residue difference is possible, but quadrature
        # on the same stadium is cheap and uniform:
        return _gamma0_quad(ctx, s, rho, r, contour, tol)
    return _gamma_j_batch(ctx, s, rho, [(j, r)], contour, tol)[(j, r)]


def _gamma0_quad(ctx: ChiContext, s: complex, rho: float, r: int,
                 contour: ContourSpec | None, tol: float) -> complex:
    s = complex(s)
    sigma, t = s.real, s.imag
    if abs(t) < 10.0:
        raise DomainError("gamma_j requires |Im s| >= 10")
    spec = contour or ContourSpec(sigma=sigma, radius=math.sqrt(abs(t)))
    integ = _StadiumIntegrator(ctx, s, rho, spec.radius, sigma, (r,), 0)

    def sweep_arcs(n):
        tot = 0.0 + 0.0j
        for center, th0, th1 in ((integ.aL, 0.5 * math.pi, 1.5 * math.pi),
                                 (integ.aR, -0.5 * math.pi, 0.5 * math.pi)):
            th = np.linspace(th0, th1, n + 1)
            w = center + spec.radius * np.exp(1j * th)
            dw = 1j * spec.radius * np.exp(1j * th) * ((th1 - th0) / n)
            dw[0] *= 0.5
            dw[-1] *= 0.5
            tot += np.sum(integ._common(w)[r] / w * dw)
        return tot

    def sweep_segs(panels):
        x, wt = np.polynomial.legendre.leggauss(8)
        tot = 0.0 + 0.0j
        for w0, w1 in ((integ.aL - 1j * spec.radius, integ.aR - 1j * spec.radius),
                       (integ.aR + 1j * spec.radius, integ.aL + 1j * spec.radius)):
            step = (w1 - w0) / panels
            for i in range(panels):
                mid = w0 + step * (i + 0.5)
                w = mid + 0.5 * step * x
                tot += np.sum(integ._common(w)[r] / w * wt) * (0.5 * step)
        return tot

    hist: list[complex] = []
    prev = None
    for level in range(5):
        hist.append(sweep_arcs(spec.nodes_per_arc * (1 << level)))
        est = (_romberg(hist) +
               sweep_segs(max(2, (spec.nodes_per_segment * (1 << level)) // 8))) / (2j * math.pi)
        if prev is not None and abs(est - prev) <= tol * max(1.0, abs(est)):
            return est
        prev = est
    raise QuadratureError("gamma_0 quadrature did not converge")
