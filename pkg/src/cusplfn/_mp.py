"""Internal multiprecision kernels (gmpy2) for the completed-L evaluator.

The completed-L series suffers intrinsic cancellation of order e^(pi|t|/2),
so the reference evaluator carries ~2.62|t| + 128 bits internally and
rounds once at the end.  Only this module touches gmpy2 contexts.
"""

from __future__ import annotations

import math

import gmpy2
from gmpy2 import mpc, mpfr

__all__ = ["working_precision", "local_context", "mp_log_gamma", "mp_gamma_q"]

_BERNOULLI: list[tuple[int, int]] = []  # (num, den) of B_{2n}, n = 1, 2, ...


def _extend_bernoulli(n_pairs: int) -> None:
    """Fill _BERNOULLI up to B_{2*n_pairs} via integer tangent numbers."""
    if len(_BERNOULLI) >= n_pairs:
        return
    n = n_pairs
    t = [0] * (n + 1)
    t[1] = 1
    for k in range(2, n + 1):
        t[k] = (k - 1) * t[k - 1]
    for k in range(2, n + 1):
        for j in range(k, n + 1):
            t[j] = (j - k) * t[j - 1] + (j - k + 2) * t[j]
    _BERNOULLI.clear()
    for m in range(1, n + 1):
        # T_m = 2^{2m} (2^{2m} - 1) |B_{2m}| / (2m)
        den = (1 << (2 * m)) * ((1 << (2 * m)) - 1)
        num = t[m] * 2 * m
        g = math.gcd(num, den)
        num, den = num // g, den // g
        if m % 2 == 0:
            num = -num
        _BERNOULLI.append((num, den))


def working_precision(t_abs: float) -> int:
    """Bits needed to survive the completed-sum cancellation at height t."""
    return int(2.62 * abs(t_abs)) + 128


def local_context(prec: int):
    """gmpy2 context with the requested precision (use with `with ...`)."""
    return gmpy2.local_context(gmpy2.context(), precision=prec)


def mp_log_gamma(z: mpc, prec: int) -> mpc:
    """log Gamma at working precision, Stirling with adaptive Bernoulli tail.

    Branch matches the recurrence-continued principal branch on the right
    half-plane; callers only exponentiate differences, so the branch of the
    shifted part is immaterial.
    """
    n_terms = max(24, prec // 7)
    _extend_bernoulli(n_terms)
    # Stirling remainder ~ (2K / (2 pi e |z|))^{2K}; solve for the radius
    radius = (2 * n_terms / (2 * math.pi * math.e)) * math.exp(
        (prec * math.log(2) + 15) / (2 * n_terms)) * 1.2
    acc = mpc(0)
    w = mpc(z)
    while abs(w) < radius:
        acc -= gmpy2.log(w)
        w += 1
    res = (w - mpfr(1) / 2) * gmpy2.log(w) - w + gmpy2.log(2 * gmpy2.const_pi()) / 2
    w2 = w * w
    p = 1 / w
    for n in range(1, n_terms + 1):
        bn, bd = _BERNOULLI[n - 1]
        res += (mpfr(bn) / bd) / (2 * n * (2 * n - 1)) * p
        p /= w2
    return res + acc


def mp_gamma_q(z: mpc, x, prec: int, lgz: mpc | None = None) -> mpc:
    """Regularized upper incomplete gamma Q(z, x) at working precision."""
    if lgz is None:
        lgz = mp_log_gamma(z, prec)
    az = abs(z)
    eps = mpfr(2) ** (-(prec + 8))
    x = mpfr(x)
    if x < 1.5 * az + 2:
        s = 1 / z
        t = s
        i = 1
        while True:
            t *= x
            t /= (z + i)
            s += t
            if abs(t) < eps * abs(s):
                break
            i += 1
            if i > 1000000:
                raise ArithmeticError("mp incomplete-gamma series stalled")
        p = gmpy2.exp(z * gmpy2.log(x) - x - lgz) * s
        return 1 - p
    tiny = mpfr(2) ** (-4 * prec)
    b = x + 1 - z
    c = 1 / tiny
    d = 1 / b
    h = d
    i = 1
    while True:
        an = -i * (i - z)
        b += 2
        d = an * d + b
        if d == 0:
            d = tiny
        c = b + an / c
        if c == 0:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < eps:
            break
        i += 1
        if i > 1000000:
            raise ArithmeticError("mp incomplete-gamma fraction stalled")
    return gmpy2.exp(z * gmpy2.log(x) - x - lgz) * h
