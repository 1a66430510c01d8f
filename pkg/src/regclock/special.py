"""Special-function kernels: incomplete gamma (any real first parameter),
its inverse in the regularized upper form, constrained hypergeometric
series, polylogarithms and small-order partial Bell polynomials.

Everything here is pure and reentrant.  Disk-limited series refuse outside
their convergence region instead of extrapolating; callers are expected to
fall back to a quadrature route.
"""

import math

import numpy as np
from scipy import special as sc

from .errors import ConvergenceRegionError, DomainError, NumericalError

_EPS = np.finfo(float).eps
_NEAR_INT_TOL = 1e-8


def upper_incomplete_gamma(a, x):
    """Upper incomplete gamma Gamma(a, x) for any real ``a`` and ``x > 0``.

    Positive ``a`` delegates to the regularized scipy routine.  Negative
    ``a`` uses a continued fraction for x >= 1 and otherwise a downward
    recurrence Gamma(a, x) = (Gamma(a+1, x) - x^a e^-x) / a seeded at the
    fractional part of ``a`` (or at Gamma(0, x) = E1(x) when ``a`` is a
    negative integer to within 1e-8).
    """
    a = float(a)
    x = float(x)
    if not (math.isfinite(a) and math.isfinite(x)):
        raise DomainError(f"non-finite arguments a={a}, x={x}")
    if x <= 0.0:
        raise DomainError(f"x must be positive, got {x}")
    if a > 0.0:
        return float(sc.gammaincc(a, x) * sc.gamma(a))
    if a == 0.0:
        return float(sc.exp1(x))
    if x >= 1.0:
        return _upper_gamma_cf(a, x)
    # small x: recur down from a positive (or E1) seed
    if abs(a - round(a)) < _NEAR_INT_TOL:
        k = int(-round(a))
        val = float(sc.exp1(x))
        a0 = 0.0
    else:
        k = math.ceil(-a)
        a0 = a + k
        val = float(sc.gammaincc(a0, x) * sc.gamma(a0))
    emx = math.exp(-x)
    for j in range(1, k + 1):
        aj = a0 - j
        val = (val - x**aj * emx) / aj
    return val


def _upper_gamma_cf(a, x, max_iter=600):
    # Lentz evaluation of the standard continued fraction; reliable for
    # x >= 1 at any real a.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if d == 0.0:
            d = tiny
        c = b + an / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 4 * _EPS:
            return math.exp(-x + a * math.log(x)) * h
    raise NumericalError(
        "incomplete-gamma continued fraction did not converge", a=a, x=x
    )


def upper_incomplete_gamma_arr(a, x):
    """Vectorized ``upper_incomplete_gamma`` over an array of ``x``."""
    x = np.asarray(x, dtype=float)
    if a > 0.0:
        return sc.gammaincc(a, x) * sc.gamma(a)
    out = np.empty(x.shape, dtype=float)
    flat = x.reshape(-1)
    res = out.reshape(-1)
    for i in range(flat.size):
        res[i] = upper_incomplete_gamma(a, flat[i])
    return out


def inv_reg_upper_gamma(n, s):
    """Root Q(n, s) >= 0 of Gamma(n, x) / Gamma(n) = s, for s in [0, 1).

    scipy's DiDonato-Morris inverse provides the initial guess; a
    safeguarded Newton polish on the bracket [0, n + 10 sqrt(n) +
    10 (-log(1-s))] drives the residual below 1e-12.  s = 0 returns +inf.
    """
    n = float(n)
    s = float(s)
    if not n > 0.0:
        raise DomainError(f"n must be positive, got {n}")
    if not (0.0 <= s < 1.0):
        raise DomainError(f"s must lie in [0, 1), got {s}")
    if s == 0.0:
        return math.inf
    x = float(sc.gammainccinv(n, s))
    lo, hi = 0.0, n + 10.0 * math.sqrt(n) + 10.0 * (-math.log1p(-s))
    if not (lo <= x <= hi) or not math.isfinite(x):
        x = 0.5 * (lo + hi)
    log_gamma_n = sc.gammaln(n)
    for _ in range(40):
        f = float(sc.gammaincc(n, x)) - s
        if f > 0.0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        if abs(f) <= 1e-13:
            break
        if x > 0.0:
            dpdx = -math.exp((n - 1.0) * math.log(x) - x - log_gamma_n)
        else:
            dpdx = 0.0
        step_ok = dpdx != 0.0 and math.isfinite(dpdx)
        x_new = x - f / dpdx if step_ok else 0.5 * (lo + hi)
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    return x


def polylog(j, z, max_terms=1 << 21):
    """Polylogarithm Li_j(z) = sum_k z^k / k^j by direct summation.

    Requires integer ``j >= 2`` and |z| <= 1 - 1e-9; refuses otherwise
    (and also when the term budget cannot reach the 1e-12 tolerance, which
    happens for |z| extremely close to 1).
    """
    if j < 2 or j != int(j):
        raise DomainError(f"polylog order must be an integer >= 2, got {j}")
    z = complex(z)
    r = abs(z)
    if r > 1.0 - 1e-9:
        raise ConvergenceRegionError(
            f"polylog series region is |z| <= 1 - 1e-9, got |z| = {r}"
        )
    if r == 0.0:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    chunk = 4096
    zq = z  # z^(k0) at the start of each chunk, k0 = 1, 1+chunk, ...
    k0 = 1
    while k0 <= max_terms:
        ks = np.arange(k0, k0 + chunk, dtype=float)
        terms = zq * z ** np.arange(chunk) / ks**int(j)
        total += terms.sum()
        # geometric tail bound from the last term
        tail = abs(terms[-1]) * r / (1.0 - r)
        if tail <= 1e-14 * max(abs(total), 1e-300):
            return total
        zq *= z**chunk
        k0 += chunk
    raise ConvergenceRegionError(
        f"polylog series needs more than {max_terms} terms at |z| = {r}"
    )


_HYP_KINDS = ("nFn_unit", "np1Fn", "gauss2F1")


def hyp_series(kind, n, c, z, rel_tol=1e-14, max_terms=1 << 21):
    """Constrained hypergeometric series used by the closed-form transforms.

    kind = "nFn_unit":  sum_k z^k / ((k+1)^n k!), entire in z.
    kind = "np1Fn":     sum_k binom(c, k) (-z)^k / (k+1)^n, |z| < 1 only.
    kind = "gauss2F1":  2F1(-c, 1/n; 1/n + 1; z), |z| < 1 only.

    Disk-limited kinds raise :class:`ConvergenceRegionError` for |z| >= 1.
    """
    z = complex(z)
    if kind == "nFn_unit":
        ratio = lambda k, t: t * z / ((k + 1.0) * ((k + 2.0) / (k + 1.0)) ** n)
    elif kind == "np1Fn":
        if abs(z) >= 1.0:
            raise ConvergenceRegionError(
                f"np1Fn converges only for |z| < 1, got |z| = {abs(z)}"
            )
        ratio = lambda k, t: (
            t * (-z) * (c - k) / (k + 1.0) * ((k + 1.0) / (k + 2.0)) ** n
        )
    elif kind == "gauss2F1":
        if abs(z) >= 1.0:
            raise ConvergenceRegionError(
                f"gauss2F1 converges only for |z| < 1, got |z| = {abs(z)}"
            )
        ratio = lambda k, t: (
            t * z * (-c + k) / (k + 1.0) * (1.0 + k * n) / (1.0 + (k + 1.0) * n)
        )
    else:
        raise DomainError(f"unknown series kind {kind!r}; expected one of {_HYP_KINDS}")

    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(max_terms):
        total += term
        nxt = ratio(k, term)
        if abs(nxt) <= rel_tol * max(abs(total), 1e-300) and abs(nxt) <= abs(term):
            return total + nxt
        term = nxt
    raise ConvergenceRegionError(
        f"{kind} series did not converge within {max_terms} terms at z = {z}"
    )


def partial_bell(m, k, theta):
    """Partial Bell polynomial B_{m,k}(theta, 1) for m <= 4.

    The argument sequence (theta, 1, 0, 0, ...) is the derivative chain of
    the Brownian exponent theta*u - u^2/2, so only a hard-coded table is
    needed for the first four cumulants.
    """
    if not (isinstance(m, int) and isinstance(k, int)):
        raise DomainError("m and k must be integers")
    if m < 1 or m > 4:
        raise DomainError(f"only orders m in [1, 4] are supported, got {m}")
    if k < 1 or k > m:
        raise DomainError(f"k must lie in [1, m], got k={k}, m={m}")
    th = float(theta)
    table = {
        (1, 1): th,
        (2, 1): 1.0,
        (2, 2): th * th,
        (3, 1): 0.0,
        (3, 2): 3.0 * th,
        (3, 3): th**3,
        (4, 1): 0.0,
        (4, 2): 3.0,
        (4, 3): 6.0 * th * th,
        (4, 4): th**4,
    }
    return table[(m, k)]
