"""Exact Fourier coefficients of the level-1 one-dimensional Hecke eigenforms.

Supported weights are 12, 16, 18, 20, 22 and 26 (the weights where the
cusp-form space is one-dimensional).  The weight-12 form is the discriminant
q * prod (1-q^n)^24; the others are its products with the normalized
Eisenstein series E4 and E6.  All series arithmetic is exact: dense integer
polynomials are multiplied through Kronecker substitution on GMP integers,
so a table up to n = 10^6 takes a few seconds.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2
import numba as nb
import numpy as np

__all__ = [
    "CuspForm",
    "FormError",
    "HeckeReport",
    "SUPPORTED_WEIGHTS",
    "build_eigenform",
    "lambda_coeff",
    "satake_params",
    "verify_hecke",
    "divisor_sieve",
    "cache_path",
    "write_coeff_cache",
    "read_coeff_cache",
]

SUPPORTED_WEIGHTS = (12, 16, 18, 20, 22, 26)

_CACHE_ENV = "CUSPLFN_CACHE_DIR"
_CACHE_MAGIC = b"CLFC"
_CACHE_VERSION = 1


class FormError(ValueError):
    pass


# --------------------------------------------------------------------------
# exact series arithmetic
# --------------------------------------------------------------------------

def _euler_cubed(n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi: prod (1-q^n)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}."""
    exps, vals = [], []
    k = 0
    while k * (k + 1) // 2 < n_terms:
        exps.append(k * (k + 1) // 2)
        vals.append((-1) ** k * (2 * k + 1))
        k += 1
    return np.array(exps, dtype=np.int64), np.array(vals, dtype=np.int64)


def _pack(coeffs, slot_bytes: int) -> gmpy2.mpz:
    pos = bytearray(len(coeffs) * slot_bytes)
    neg = bytearray(len(coeffs) * slot_bytes)
    for i, c in enumerate(coeffs):
        c = int(c)
        if c >= 0:
            pos[i * slot_bytes:(i + 1) * slot_bytes] = c.to_bytes(slot_bytes, "little")
        elif c < 0:
            neg[i * slot_bytes:(i + 1) * slot_bytes] = (-c).to_bytes(slot_bytes, "little")
    return gmpy2.mpz(int.from_bytes(bytes(pos), "little")) - \
        gmpy2.mpz(int.from_bytes(bytes(neg), "little"))


def _unpack(value: gmpy2.mpz, n_out: int, slot_bytes: int) -> list[int]:
    base = 1 << (8 * slot_bytes)
    half = base >> 1
    negate = value < 0
    if negate:
        value = -value
    raw = int(value).to_bytes((int(value).bit_length() + 7) // 8 + slot_bytes, "little")
    out = [0] * n_out
    borrow = 0
    for i in range(n_out):
        d = int.from_bytes(raw[i * slot_bytes:(i + 1) * slot_bytes], "little") + borrow
        if d >= half:
            d -= base
            borrow = 1
        else:
            borrow = 0
        out[i] = -d if negate else d
    return out


def _kronecker_mul(a, b, n_out: int) -> list[int]:
    """Truncated product of integer coefficient sequences, exact."""
    max_a = max((abs(int(x)) for x in a), default=0)
    max_b = max((abs(int(x)) for x in b), default=0)
    bound = max_a * max_b * min(len(a), len(b)) + 1
    slot_bits = max(64, ((bound.bit_length() + 2 + 63) // 64) * 64)
    slot_bytes = slot_bits // 8
    prod = _pack(a, slot_bytes) * _pack(b, slot_bytes)
    return _unpack(prod, n_out, slot_bytes)


def _delta_coeffs(n_max: int) -> list[int]:
    """tau(n) for n = 0..n_max (index n; tau(0) = 0)."""
    exps, vals = _euler_cubed(n_max)
    e6 = np.zeros(n_max, dtype=np.int64)
    for i in range(len(exps)):
        m = exps[i] + exps
        sel = m < n_max
        e6[m[sel]] += vals[i] * vals[sel]
    e12 = _kronecker_mul(e6.tolist(), e6.tolist(), n_max)
    e24 = _kronecker_mul(e12, e12, n_max)
    return [0] + e24[:n_max]  # a(n) = [q^{n-1}] E^24


@nb.njit(cache=True)
def _spf_sieve(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for i in range(2, n + 1):
        if spf[i] == 0:
            for j in range(i, n + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    return spf


def _sigma_table(power: int, n: int) -> list[int]:
    """sigma_power(m) for m = 0..n (index m; entry 0 unused) as exact ints."""
    spf = _spf_sieve(n)
    out = [0] * (n + 1)
    if n >= 1:
        out[1] = 1
    for m in range(2, n + 1):
        rem = m
        val = 1
        while rem > 1:
            p = int(spf[rem])
            pk = 1
            while rem % p == 0:
                rem //= p
                pk *= p
            q = p ** power
            # (q^{e+1} - 1)/(q - 1) with pk = p^e
            val *= (q * pk ** power - 1) // (q - 1)
        out[m] = val
    return out


def _eisenstein(kind: int, n_max: int) -> list[int]:
    if kind == 4:
        sig = _sigma_table(3, n_max)
        return [1] + [240 * sig[m] for m in range(1, n_max + 1)]
    if kind == 6:
        sig = _sigma_table(5, n_max)
        return [1] + [-504 * sig[m] for m in range(1, n_max + 1)]
    raise FormError(f"no Eisenstein series of weight {kind}")


# factor pattern above weight 12: list of Eisenstein weights to multiply in
_EISEN_FACTORS = {12: (), 16: (4,), 18: (6,), 20: (4, 4), 22: (4, 6), 26: (4, 4, 6)}


@nb.njit(cache=True)
def divisor_sieve(n: int) -> np.ndarray:
    """d(m) for m = 0..n."""
    d = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        for j in range(i, n + 1, i):
            d[j] += 1
    return d


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


# --------------------------------------------------------------------------
# the form object
# --------------------------------------------------------------------------

@dataclass
class CuspForm:
    """Normalized Hecke eigenform with exact integer coefficients.

    Immutable after construction; safe for concurrent reads.  `coeffs[n]`
    is the exact integer a_f(n) (index 0 unused), `lam[n]` the binary64
    lambda_f(n) = a_f(n) / n^((k-1)/2).
    """

    weight: int
    n_max: int
    coeffs: list[int]
    lam: np.ndarray = field(repr=False)
    rankin_cf: float | None = None  # cached slope estimate, set by meanvalue

    def lambda_array(self) -> np.ndarray:
        return self.lam

    def __post_init__(self):
        if self.coeffs[1] != 1:
            raise FormError("eigenform must be normalized with a(1) = 1")


def _lambda_table(coeffs: list[int], weight: int, n_max: int) -> np.ndarray:
    lam = np.zeros(n_max + 1)
    half = (weight - 1) / 2.0
    for n in range(1, n_max + 1):
        lam[n] = float(coeffs[n]) * n ** (-half)
    return lam


def build_eigenform(weight: int, n_max: int, use_cache: bool = True,
                    cache_dir: str | os.PathLike | None = None) -> CuspForm:
    """Construct the unique normalized eigenform of the given weight.

    Exact integer coefficients for n = 1..n_max; cached on disk unless
    `use_cache` is false.
    """
    if weight not in SUPPORTED_WEIGHTS:
        raise FormError(
            f"weight {weight}: no one-dimensional cusp-form space; "
            f"supported weights are {SUPPORTED_WEIGHTS}")
    if n_max < 2:
        raise FormError("n_max must be at least 2")
    if n_max > (1 << 24):
        raise FormError("n_max exceeds supported table capacity 2^24")

    path = cache_path(weight, n_max, cache_dir)
    if use_cache and path.is_file():
        coeffs = read_coeff_cache(path, expect_weight=weight, expect_n_max=n_max)
        return CuspForm(weight, n_max, coeffs, _lambda_table(coeffs, weight, n_max))

    coeffs = _delta_coeffs(n_max)
    for eis in _EISEN_FACTORS[weight]:
        shifted = coeffs[1:] + [0]  # divide by q before convolving
        prod = _kronecker_mul(shifted, _eisenstein(eis, n_max), n_max)
        coeffs = [0] + prod[:n_max]
    if coeffs[1] != 1:  # the eta/Eisenstein normalization already gives 1
        lead = coeffs[1]
        coeffs = [c // lead for c in coeffs]
    form = CuspForm(weight, n_max, coeffs, _lambda_table(coeffs, weight, n_max))
    if use_cache:
        try:
            write_coeff_cache(path, form)
        except OSError:
            pass
    return form


def lambda_coeff(form: CuspForm, n: int) -> float:
    """lambda_f(n) = a_f(n)/n^((k-1)/2), computed from the exact integer."""
    if not 1 <= n <= form.n_max:
        raise FormError(f"n = {n} outside stored range 1..{form.n_max}")
    return float(form.lam[n])


def satake_params(form: CuspForm, p: int) -> tuple[complex, complex]:
    """Roots (alpha, beta) of X^2 - lambda_f(p) X + 1."""
    if not is_prime(p):
        raise FormError(f"{p} is not prime")
    if p > form.n_max:
        raise FormError(f"prime {p} outside stored range")
    lam = float(form.lam[p])
    disc = lam * lam - 4.0
    if disc <= 0.0:
        root = complex(lam / 2.0, math.sqrt(-disc) / 2.0)
        return root, root.conjugate()
    rt = math.sqrt(disc)
    return complex((lam + rt) / 2.0), complex((lam - rt) / 2.0)


@dataclass
class HeckeReport:
    passed: bool
    n_limit: int
    multiplicative_checks: int
    prime_power_checks: int
    first_failure: str | None = None


def verify_hecke(form: CuspForm, n_limit: int) -> HeckeReport:
    """Exact integer check of multiplicativity and the prime-power recursion."""
    if n_limit > form.n_max:
        raise FormError("n_limit exceeds stored coefficients")
    a = form.coeffs
    k = form.weight
    mult = 0
    for m in range(2, n_limit + 1):
        for n in range(m + 1, n_limit // m + 1):
            if math.gcd(m, n) != 1:
                continue
            mult += 1
            if a[m * n] != a[m] * a[n]:
                return HeckeReport(False, n_limit, mult, 0,
                                   f"a({m})a({n}) != a({m*n})")
    pp = 0
    p = 2
    while p * p <= n_limit:
        if is_prime(p):
            q = p * p
            while q <= n_limit:
                pp += 1
                if a[q] != a[p] * a[q // p] - p ** (k - 1) * a[q // (p * p)]:
                    return HeckeReport(False, n_limit, mult, pp,
                                       f"recursion fails at {p}^{int(math.log(q, p) + 0.5)}")
                q *= p
        p += 1
    return HeckeReport(True, n_limit, mult, pp)


# --------------------------------------------------------------------------
# coefficient cache file
#   magic "CLFC" | u32 version | u32 weight | u64 n_max |
#   then n_max records: u32 byte-length + little-endian signed big integer
# --------------------------------------------------------------------------

def cache_path(weight: int, n_max: int,
               cache_dir: str | os.PathLike | None = None) -> Path:
    base = Path(cache_dir) if cache_dir else \
        Path(os.environ.get(_CACHE_ENV, Path.home() / ".cache" / "cusplfn"))
    return base / f"coeffs_w{weight}_n{n_max}.clfc"


def write_coeff_cache(path: Path, form: CuspForm) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<II", _CACHE_VERSION, form.weight))
        fh.write(struct.pack("<Q", form.n_max))
        for n in range(1, form.n_max + 1):
            c = form.coeffs[n]
            nbytes = max(1, (c.bit_length() + 8) // 8)
            fh.write(struct.pack("<I", nbytes))
            fh.write(c.to_bytes(nbytes, "little", signed=True))
    os.replace(tmp, path)


def read_coeff_cache(path: Path, expect_weight: int | None = None,
                     expect_n_max: int | None = None) -> list[int]:
    with open(path, "rb") as fh:
        if fh.read(4) != _CACHE_MAGIC:
            raise FormError(f"{path}: not a coefficient cache file")
        version, weight = struct.unpack("<II", fh.read(8))
        if version != _CACHE_VERSION:
            raise FormError(f"{path}: unsupported cache version {version}")
        (n_max,) = struct.unpack("<Q", fh.read(8))
        if expect_weight is not None and weight != expect_weight:
            raise FormError(f"{path}: weight mismatch")
        if expect_n_max is not None and n_max != expect_n_max:
            raise FormError(f"{path}: n_max mismatch")
        coeffs = [0] * (n_max + 1)
        for n in range(1, n_max + 1):
            (nbytes,) = struct.unpack("<I", fh.read(4))
            coeffs[n] = int.from_bytes(fh.read(nbytes), "little", signed=True)
    return coeffs


def cache_checksum(path: Path) -> str:
    if not path.is_file():
        return ""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
