"""Real-valued models on (regulated) clocks: constant mixtures (differences
of two independent clock copies, optionally plus an independent Brownian
component) and Gaussian mixtures (drifted Brownian motion run on the
clock's random time)."""

import math
from dataclasses import dataclass

from .clocks import CumulantSet, bg_index
from .errors import BranchCutError, DomainError
from .regulate import regulated_cut_start, regulated_laplace_exponent, rho_vector
from .special import partial_bell


@dataclass(frozen=True)
class ConstantMixture:
    """mu*t + kappa1*X_t - kappa2*X'_t + sigma*W_t with X' an independent
    copy of the clock; sigma > 0 gives the jump-diffusion variant."""

    mu: float
    kappa1: float
    kappa2: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise DomainError("kappa1 and kappa2 must be nonnegative")
        if self.sigma < 0:
            raise DomainError("sigma must be nonnegative")


@dataclass(frozen=True)
class GaussianMixture:
    """mu*t + theta*X_t + W(X_t); Brownian dispersion is fixed at 1, the
    clock's scale parameter carries the jump volatility."""

    mu: float
    theta: float


Mixture = ConstantMixture | GaussianMixture


def _leg_check(spec, reg, u, label):
    B = regulated_cut_start(spec, reg)
    if math.isfinite(B) and u.imag == 0.0 and u.real <= -B:
        raise BranchCutError(
            f"{label} argument {u} lies on the branch cut (-inf, {-B}]"
        )


def mixture_log_lt(mix, spec, reg, t, u, *, spec2=None, method="auto", rel_tol=1e-10):
    """Log Laplace transform log E exp(-u xi_t) of the mixed process.

    ``spec2`` lets the two legs of a constant mixture run on clocks with
    different parameters (the two-intensity difference variant); it
    defaults to an i.i.d. copy of ``spec``.
    """
    u = complex(u)
    if u == 0:
        return 0.0 + 0.0j
    if isinstance(mix, GaussianMixture):
        if spec2 is not None:
            raise DomainError("a Gaussian mixture has a single clock leg")
        arg = mix.theta * u - 0.5 * u * u
        _leg_check(spec, reg, arg, "time-changed Brownian")
        lam = regulated_laplace_exponent(
            spec, reg, t, arg, method=method, rel_tol=rel_tol
        )
        return -mix.mu * t * u + lam
    second = spec if spec2 is None else spec2
    total = -mix.mu * t * u
    if mix.kappa1 > 0:
        _leg_check(spec, reg, mix.kappa1 * u, "positive leg")
        total += regulated_laplace_exponent(
            spec, reg, t, mix.kappa1 * u, method=method, rel_tol=rel_tol
        )
    if mix.kappa2 > 0:
        _leg_check(second, reg, -mix.kappa2 * u, "negative leg")
        total += regulated_laplace_exponent(
            second, reg, t, -mix.kappa2 * u, method=method, rel_tol=rel_tol
        )
    if mix.sigma > 0:
        total += 0.5 * mix.sigma**2 * u * u * t
    return complex(total)


def mixture_cumulants(mix, spec, reg, t):
    """First four cumulants of the mixed process at horizon ``t``."""
    from .clocks import base_cumulants

    base = base_cumulants(spec, t)
    ks = (base.k1, base.k2, base.k3, base.k4)
    rhos = rho_vector(reg.rtype, reg.n)
    rk = [r * k for r, k in zip(rhos, ks)]
    if isinstance(mix, GaussianMixture):
        out = []
        for m in range(1, 5):
            val = mix.mu * t if m == 1 else 0.0
            for k in range(1, m + 1):
                val += partial_bell(m, k, mix.theta) * rk[k - 1]
            out.append(val)
        return CumulantSet(*out, t=t)
    out = []
    for m in range(1, 5):
        val = mix.mu * t if m == 1 else 0.0
        val += (mix.kappa1**m + (-mix.kappa2) ** m) * rk[m - 1]
        if m == 2:
            val += mix.sigma**2 * t
        out.append(val)
    return CumulantSet(*out, t=t)


def mixture_bg_index(mix, spec):
    """Blumenthal-Getoor index of the mixture: the clock's for constant
    mixtures, twice the clock's for Gaussian mixtures."""
    base = bg_index(spec)
    if isinstance(mix, GaussianMixture):
        return 2.0 * base
    return base
