"""Smooth cutoff weights: the unit-plateau bumps, their reflections,
high-order derivatives, L1 norms, and the Mellin moment K_phi.

Every cutoff here equals 1 on [0, 1/2], 0 on [2, oo), and takes values in
[0, 1] (the reflected companion phi0(rho) = 1 - phi(1/rho) then has the
same shape).  Two families are provided:

* the classical exp(-1/x) partition bump (``make_phi``) -- infinitely
  smooth, but its high derivatives grow like ((2j)/e)^(2j), which makes
  it unusable as a weight for the correction sums of the smoothed
  approximate functional equation at desk-scale heights;
* a log-symmetric polynomial step of smoothness class C^p
  (``make_smoothstep``, default p = 12) whose derivatives grow mildly and
  are evaluated exactly; it satisfies phi0 == phi identically and is the
  default weight for corrected evaluations.

Derivatives of the exp bump are served from piecewise Chebyshev tables up
to order 6 and from truncated-Taylor (jet) arithmetic beyond, where
spectral differentiation noise would dominate.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import numpy.polynomial.chebyshev as _cheb

__all__ = [
    "SmoothingFunction",
    "SmoothingError",
    "make_phi",
    "make_smoothstep",
    "make_psi_alpha",
    "phi_deriv",
    "phi_norm",
    "k_phi",
]

_DEFAULT_MAX_ORDER = 12


class SmoothingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# truncated-Taylor (jet) arithmetic, used for exact exp-bump derivatives
# ---------------------------------------------------------------------------

def _jet_div(a, b):
    n = len(a)
    out = [0.0] * n
    for i in range(n):
        acc = a[i]
        for j in range(1, i + 1):
            acc -= b[j] * out[i - j]
        out[i] = acc / b[0]
    return out


def _jet_exp(a):
    n = len(a)
    out = [0.0] * n
    out[0] = math.exp(a[0])
    for i in range(1, n):
        acc = 0.0
        for j in range(1, i + 1):
            acc += j * a[j] * out[i - j]
        out[i] = acc / i
    return out


def _jet_mul(a, b):
    n = len(a)
    out = [0.0] * n
    for i in range(n):
        if a[i]:
            for j in range(n - i):
                out[i + j] += a[i] * b[j]
    return out


def _jet_compose(outer_taylor, inner_taylor):
    """Taylor coefficients of f(g(x)) given f at g(x0) and g - g(x0)."""
    n = len(outer_taylor)
    w = [0.0] + list(inner_taylor[1:])
    acc = [0.0] * n
    acc[0] = outer_taylor[n - 1]
    for deg in range(n - 2, -1, -1):
        acc = _jet_mul(acc, w)
        acc[0] += outer_taylor[deg]
    return acc


# ---------------------------------------------------------------------------
# base class
# ---------------------------------------------------------------------------

class SmoothingFunction:
    """A cutoff in the unit-plateau class with evaluable derivatives."""

    kind: str = "abstract"

    def __init__(self, lo: float, hi: float, max_order: int = _DEFAULT_MAX_ORDER):
        self.lo = lo
        self.hi = hi
        self.max_order = max_order
        self._norm_cache: dict[int, float] = {}
        self._reflected: SmoothingFunction | None = None

    # subclasses provide _value_inside / _deriv_inside on transition points
    def _value_inside(self, rho: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _deriv_inside(self, j: int, rho: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, rho):
        rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.zeros_like(rho_arr)
        out[rho_arr <= self.lo] = 1.0
        inside = (rho_arr > self.lo) & (rho_arr < self.hi)
        if inside.any():
            out[inside] = self._value_inside(rho_arr[inside])
        return out if np.ndim(rho) else float(out[0])

    def deriv(self, j: int, rho):
        if j < 0 or j > self.max_order:
            raise SmoothingError(f"derivative order {j} outside 0..{self.max_order}")
        if j == 0:
            return self.value(rho)
        rho_arr = np.atleast_1d(np.asarray(rho, dtype=float))
        out = np.zeros_like(rho_arr)
        inside = (rho_arr > self.lo) & (rho_arr < self.hi)
        if inside.any():
            out[inside] = self._deriv_inside(j, rho_arr[inside])
        return out if np.ndim(rho) else float(out[0])

    def reflected(self) -> "SmoothingFunction":
        """The companion phi0(rho) = 1 - phi(1/rho)."""
        if self._reflected is None:
            self._reflected = _Reflected(self)
        return self._reflected

    # ---- L1 norms of derivatives ------------------------------------------
    def norm(self, j: int) -> float:
        if j in self._norm_cache:
            return self._norm_cache[j]
        if j > self.max_order:
            raise SmoothingError(f"norm order {j} exceeds max_order {self.max_order}")
        val = self._norm_uncached(j)
        self._norm_cache[j] = val
        return val

    def _norm_uncached(self, j: int) -> float:
        if j == 0:
            # lo from the plateau, Gauss-Legendre across the transition
            x, wt = np.polynomial.legendre.leggauss(64)
            mid, half = (self.lo + self.hi) / 2, (self.hi - self.lo) / 2
            return self.lo + float(np.sum(wt * self.value(mid + half * x))) * half
        # integral of |phi^{(j)}| = sum of |endpoint differences of phi^{(j-1)}|
        # between consecutive zeros of phi^{(j)}  (exact by monotonicity)
        grid = np.linspace(self.lo, self.hi, 8193)
        vals = self.deriv(j, grid)
        roots = [self.lo]
        for i in range(len(grid) - 1):
            a, b = vals[i], vals[i + 1]
            if a == 0.0 or a * b < 0.0:
                x0, x1 = grid[i], grid[i + 1]
                for _ in range(60):
                    xm = 0.5 * (x0 + x1)
                    if self.deriv(j, np.array([xm]))[0] * a <= 0.0:
                        x1 = xm
                    else:
                        x0 = xm
                roots.append(0.5 * (x0 + x1))
        roots.append(self.hi)
        total = 0.0
        prev = self.deriv(j - 1, np.array([roots[0]]))[0] if j > 1 else self.value(roots[0])
        for rt in roots[1:]:
            cur = self.deriv(j - 1, np.array([rt]))[0] if j > 1 else self.value(rt)
            total += abs(cur - prev)
            prev = cur
        return total


class _Reflected(SmoothingFunction):
    """phi0(rho) = 1 - phi(1/rho), derivatives by jet composition."""

    kind = "reflected"

    def __init__(self, base: SmoothingFunction):
        super().__init__(1.0 / base.hi, 1.0 / base.lo, base.max_order)
        self.base = base

    def _value_inside(self, rho):
        return 1.0 - self.base.value(1.0 / rho)

    def _deriv_inside(self, j, rho):
        out = np.empty_like(rho)
        for idx, r in enumerate(rho):
            n = j + 1
            u0 = 1.0 / r
            taylor = [float(self.base.deriv(m, u0)) / math.factorial(m) for m in range(n)]
            inner = [(-1.0) ** m * r ** (-(m + 1.0)) for m in range(n)]
            comp = _jet_compose(taylor, inner)
            out[idx] = -comp[j] * math.factorial(j)
        return out

    def reflected(self) -> SmoothingFunction:
        return self.base


# ---------------------------------------------------------------------------
# the exp(-1/x) partition bump
# ---------------------------------------------------------------------------

_CHEB_ORDER_MAX = 6  # spectral differentiation stays reliable up to here
_CHEB_DEGREE = 64
_BUMP_BREAKS = (0.5, 0.53, 0.575, 0.645, 0.75, 0.9, 1.1, 1.325, 1.55,
                1.74, 1.875, 1.955, 2.0)


def _bump_raw(rho: float) -> float:
    if rho <= 0.5:
        return 1.0
    if rho >= 2.0:
        return 0.0
    ga = math.exp(-1.0 / (2.0 - rho))
    gb = math.exp(-1.0 / (rho - 0.5))
    return ga / (ga + gb)


def _bump_jet(rho: float, order: int) -> list[float]:
    """[phi, phi', ..., phi^{(order)}] at rho, exact via Taylor arithmetic."""
    n = order + 1
    if rho <= 0.5 or rho >= 2.0:
        return [1.0 if rho <= 0.5 else 0.0] + [0.0] * order
    x1 = [2.0 - rho, -1.0] + [0.0] * (n - 2) if n >= 2 else [2.0 - rho]
    x2 = [rho - 0.5, 1.0] + [0.0] * (n - 2) if n >= 2 else [rho - 0.5]
    minus_one = [-1.0] + [0.0] * (n - 1)
    ga = _jet_exp(_jet_div(minus_one, x1))
    gb = _jet_exp(_jet_div(minus_one, x2))
    quot = _jet_div(ga, [ga[i] + gb[i] for i in range(n)])
    fact = 1.0
    out = []
    for i in range(n):
        out.append(quot[i] * fact)
        fact *= (i + 1)
    return out


class StandardBump(SmoothingFunction):
    """phi(rho) = g(2-rho)/(g(2-rho)+g(rho-1/2)), g(x) = exp(-1/x).

    Values and low-order derivatives come from per-interval Chebyshev
    tables (degree 64) over a graded transition mesh; orders above 6 fall
    back to exact jet arithmetic, where Chebyshev differentiation noise
    would exceed the true derivative size.
    """

    kind = "standard_bump"

    def __init__(self, max_order: int = _DEFAULT_MAX_ORDER):
        super().__init__(0.5, 2.0, max_order)
        self.breaks = np.array(_BUMP_BREAKS)
        self.cheb_coeffs = []
        for a, b in zip(self.breaks[:-1], self.breaks[1:]):
            def f(x, a=a, b=b):
                xs = np.atleast_1d(x)
                return np.array([_bump_raw((a + b) / 2 + (b - a) / 2 * xi) for xi in xs])
            self.cheb_coeffs.append(_cheb.chebinterpolate(f, _CHEB_DEGREE))
        self._dcoef: dict[tuple[int, int], np.ndarray] = {}

    def _piece_dcoef(self, idx: int, j: int) -> np.ndarray:
        key = (idx, j)
        if key not in self._dcoef:
            a, b = self.breaks[idx], self.breaks[idx + 1]
            self._dcoef[key] = _cheb.chebder(self.cheb_coeffs[idx], j, scl=2.0 / (b - a))
        return self._dcoef[key]

    def _cheb_eval(self, j: int, rho: np.ndarray) -> np.ndarray:
        idxs = np.clip(np.searchsorted(self.breaks, rho, side="right") - 1,
                       0, len(self.cheb_coeffs) - 1)
        out = np.empty_like(rho)
        for ii in np.unique(idxs):
            a, b = self.breaks[ii], self.breaks[ii + 1]
            sel = idxs == ii
            x = (rho[sel] - (a + b) / 2) / ((b - a) / 2)
            out[sel] = _cheb.chebval(x, self._piece_dcoef(ii, j))
        return out

    def _value_inside(self, rho):
        return self._cheb_eval(0, rho)

    def _deriv_inside(self, j, rho):
        if j <= _CHEB_ORDER_MAX:
            return self._cheb_eval(j, rho)
        return np.array([_bump_jet(float(r), j)[j] for r in rho])


# ---------------------------------------------------------------------------
# log-symmetric polynomial smoothstep (class C^p)
# ---------------------------------------------------------------------------

def _centered_step_coeffs(p: int) -> list[float]:
    """coeff of u^{2i} in S'(1/2 + u) = (1/4 - u^2)^p / B(p+1, p+1)."""
    inv_beta = math.gamma(2 * p + 2) / math.gamma(p + 1) ** 2
    return [inv_beta * math.comb(p, i) * 0.25 ** (p - i) * (-1) ** i
            for i in range(p + 1)]


@lru_cache(maxsize=None)
def _stirling_first(j: int) -> np.ndarray:
    s1 = np.zeros((j + 1, j + 1))
    s1[0, 0] = 1.0
    for n in range(1, j + 1):
        for k in range(1, n + 1):
            s1[n, k] = s1[n - 1, k - 1] - (n - 1) * s1[n - 1, k]
    return s1


class SmoothStep(SmoothingFunction):
    """phi(rho) = 1 - S(v), v = log2(rho)/2 + 1/2, transition on [1/2, 2].

    S is the symmetric polynomial smoothstep of smoothness order p, so phi
    is C^p with phi^{(d)}(1/2) = phi^{(d)}(2) = 0 for d <= p, and the
    log-symmetry S(1-v) = 1 - S(v) makes phi its own reflection:
    phi0(rho) = 1 - phi(1/rho) = phi(rho) exactly.
    """

    kind = "smoothstep"

    def __init__(self, p: int = 12, max_order: int | None = None):
        if p < 4:
            raise SmoothingError("smoothstep order p must be at least 4")
        super().__init__(0.5, 2.0, max_order or max(_DEFAULT_MAX_ORDER, p + 1))
        self.p = p
        self.log_width = math.log(4.0)
        first = _centered_step_coeffs(p)
        self._dtab: list[dict[int, float]] = [dict()]  # filled per order below
        d1 = {2 * i: c for i, c in enumerate(first)}
        self._dtab.append(d1)
        for _ in range(2, 2 * p + 3):
            prev = self._dtab[-1]
            cur: dict[int, float] = {}
            for k, c in prev.items():
                if k >= 1:
                    cur[k - 1] = cur.get(k - 1, 0.0) + k * c
            self._dtab.append(cur)
        s0 = {0: 0.5}
        for k, c in d1.items():
            s0[k + 1] = c / (k + 1)
        self._dtab[0] = s0

    def _poly(self, table: dict[int, float], u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        for k, c in table.items():
            out += c * u ** k
        return out

    def _value_inside(self, rho):
        u = np.log(rho) / self.log_width
        return 1.0 - self._poly(self._dtab[0], u)

    def _deriv_inside(self, j, rho):
        u = np.log(rho) / self.log_width
        s1 = _stirling_first(j)
        tot = np.zeros_like(rho)
        for d in range(1, j + 1):
            if d < len(self._dtab) and self._dtab[d]:
                fd = -self._poly(self._dtab[d], u) / self.log_width ** d
                tot += s1[j, d] * fd
        return tot * rho ** (-float(j))

    def reflected(self) -> SmoothingFunction:
        return self  # exact log-symmetry


# ---------------------------------------------------------------------------
# the compressed cutoff psi_alpha
# ---------------------------------------------------------------------------

class PsiAlpha(SmoothingFunction):
    """psi_alpha(rho) = base(1 + (rho-1) |t|^alpha) on its transition band.

    Equals 1 on [0, 1 - 1/(2|t|^alpha)] and 0 on [1 + 1/|t|^alpha, oo);
    derivatives pick up the chain factor |t|^(alpha j).
    """

    kind = "psi_alpha"

    def __init__(self, base: SmoothingFunction, alpha: float, t_abs: float):
        if not 0.0 <= alpha <= 0.5:
            raise SmoothingError("psi_alpha requires 0 <= alpha <= 1/2")
        if t_abs < 10.0:
            raise SmoothingError("psi_alpha requires |t| >= 10")
        if not (abs(base.lo - 0.5) < 1e-12 and abs(base.hi - 2.0) < 1e-12):
            raise SmoothingError("psi_alpha needs a base cutoff with transition [1/2, 2]")
        scale = t_abs ** alpha
        super().__init__(1.0 - 0.5 / scale, 1.0 + 1.0 / scale, base.max_order)
        self.base = base
        self.alpha = alpha
        self.t_abs = t_abs
        self.scale = scale

    def _value_inside(self, rho):
        return self.base.value(1.0 + (rho - 1.0) * self.scale)

    def _deriv_inside(self, j, rho):
        return self.base.deriv(j, 1.0 + (rho - 1.0) * self.scale) * self.scale ** j


# ---------------------------------------------------------------------------
# public constructors and operations
# ---------------------------------------------------------------------------

def make_phi(max_order: int = _DEFAULT_MAX_ORDER) -> SmoothingFunction:
    """The standard exp(-1/x) partition bump on [1/2, 2]."""
    return StandardBump(max_order)


def make_smoothstep(p: int = 12) -> SmoothingFunction:
    """Log-symmetric C^p polynomial cutoff; default weight for corrections."""
    return SmoothStep(p)


def make_psi_alpha(phi: SmoothingFunction, alpha: float, t_abs: float) -> SmoothingFunction:
    """Compress the cutoff `phi` into the band of width ~ |t|^-alpha around 1."""
    return PsiAlpha(phi, alpha, t_abs)


def phi_deriv(phi: SmoothingFunction, j: int, rho):
    """j-th derivative of the cutoff; exactly zero on the plateaus."""
    return phi.deriv(j, rho)


def phi_norm(phi: SmoothingFunction, j: int) -> float:
    """L1 norm of phi^{(j)} over [0, oo); cached."""
    return phi.norm(j)


def k_phi(phi: SmoothingFunction, w: complex, l: int = 3) -> complex:
    """The moment K_phi(w) = w * integral phi(rho) rho^(w-1) drho.

    Uses the depth-l integration-by-parts representation
    K_phi(w) = (-1)^(l+1) / ((w+1)...(w+l)) * integral phi^{(l+1)} rho^{w+l},
    valid off w in {-1, ..., -l}; K_phi(0) = 1 is returned exactly.
    """
    w = complex(w)
    if w == 0:
        return 1.0 + 0.0j
    if l < 0 or l + 1 > phi.max_order:
        raise SmoothingError(f"k_phi depth l = {l} outside 0..{phi.max_order - 1}")
    if l == 0:
        if w.real <= 0:
            raise SmoothingError("k_phi with l = 0 needs Re w > 0")
        trans = _transition_integral(phi, 0, w - 1)
        return phi.lo ** w + w * trans
    for i in range(1, l + 1):
        if abs(w + i) < 1e-12:
            raise SmoothingError(f"k_phi: w = {w} is a pole of the depth-{l} path")
    integral = _transition_integral(phi, l + 1, w + l)
    denom = 1.0 + 0.0j
    for i in range(1, l + 1):
        denom *= (w + i)
    return (-1.0) ** (l + 1) * integral / denom


def _transition_integral(phi: SmoothingFunction, j: int, expo: complex) -> complex:
    """integral over the transition of phi^{(j)}(rho) * rho^expo, GL-doubled."""
    prev = None
    panels = 8
    for _ in range(7):
        x, wt = np.polynomial.legendre.leggauss(16)
        tot = 0.0 + 0.0j
        width = (phi.hi - phi.lo) / panels
        for i in range(panels):
            a = phi.lo + i * width
            mid, half = a + width / 2, width / 2
            nodes = mid + half * x
            vals = phi.deriv(j, nodes) if j else phi.value(nodes)
            tot += np.sum(wt * vals * nodes.astype(complex) ** expo) * half
        if prev is not None and abs(tot - prev) <= 1e-12 * max(1.0, abs(tot)):
            return tot
        prev = tot
        panels *= 2
    raise SmoothingError("transition quadrature did not converge")
