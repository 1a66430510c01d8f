"""Samplers for regulated clocks and their mixtures.

Exact routes: regulated Poisson clocks are compound Poisson processes with
bounded distorted-uniform jumps (one transform per recipe); tempered
stable clocks at degree 0 with c = 0 are gamma processes.  Discretized
routes: type I / III regulated tempered stable paths are kernel-weighted
sums of base increments on a grid (declared approximation).  Marginal-only
route: inverse-CDF sampling against a tabulated keyhole density, the only
option for type II beyond degree 1, and the generic fallback elsewhere.

Reproducibility: marginal samplers draw from a Philox generator seeded by
``SeedSequence(seed)``; path samplers derive one child stream per path
index via ``SeedSequence(seed).spawn``, so path i's output is invariant to
how many other paths are simulated.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .clocks import Poisson, TemperedStable
from .errors import DomainError, UnsupportedError
from .mixtures import GaussianMixture
from .regulate import RegType, Regulation, jump_transform_array, regulated_moments


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_paths: int
    grid_steps: int = 256
    horizon: float = 1.0

    def __post_init__(self):
        if self.n_paths <= 0 or self.grid_steps <= 0 or not self.horizon > 0:
            raise DomainError("n_paths, grid_steps and horizon must be positive")


def _marginal_rng(config):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))


def _path_streams(config):
    for child in np.random.SeedSequence(config.seed).spawn(config.n_paths):
        yield np.random.Generator(np.random.Philox(child))


# --------------------------------------------------------------------------
# regulated Poisson clocks (exact)


def sim_regulated_poisson(lam, reg, config):
    """Terminal draws of the regulated Poisson clock at the horizon.

    Exact compound Poisson: a Poisson(lam*T) count of jumps, each the
    regulation transform of a standard uniform.
    """
    if lam < 0:
        raise DomainError("intensity must be nonnegative")
    rng = _marginal_rng(config)
    counts = rng.poisson(lam * config.horizon, size=config.n_paths)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(config.n_paths)
    amps = jump_transform_array(reg, rng.random(total))
    out = np.zeros(config.n_paths)
    np.add.at(out, np.repeat(np.arange(config.n_paths), counts), amps)
    return out


def sim_regulated_poisson_jumps(lam, reg, config):
    """All jump amplitudes across the simulated horizon (for jump-law tests)."""
    rng = _marginal_rng(config)
    counts = rng.poisson(lam * config.horizon, size=config.n_paths)
    total = int(counts.sum())
    return jump_transform_array(reg, rng.random(total))


def sim_regulated_poisson_paths(lam, reg, config):
    """Paths on the uniform grid; exact jump times, per-path streams."""
    T = config.horizon
    grid = np.linspace(0.0, T, config.grid_steps + 1)
    out = np.zeros((config.n_paths, grid.size))
    for i, rng in enumerate(_path_streams(config)):
        k = rng.poisson(lam * T)
        if k == 0:
            continue
        times = np.sort(rng.random(k) * T)
        amps = jump_transform_array(reg, rng.random(k))
        cum = np.concatenate([[0.0], np.cumsum(amps)])
        out[i] = cum[np.searchsorted(times, grid, side="right")]
    return out


# --------------------------------------------------------------------------
# regulated tempered stable paths (types I and III, discretized)


def _ts_base_increments(spec, ds, size, rng):
    """One row of base-clock increments over steps of length ``ds``."""
    if spec.c == 0.0:
        return rng.gamma(shape=spec.a * ds, scale=1.0 / spec.b, size=size)
    return _tempered_stable_increments(spec, ds, size, rng)


def _tempered_stable_increments(spec, ds, size, rng, max_rounds=200):
    # exact acceptance-rejection: one-sided stable proposal (Chambers-
    # Mallows-Stuck), accepted with probability exp(-b * draw)
    a, b, c = spec.a, spec.b, spec.c
    # stable scale matching the untempered Levy density a z^{-c-1} over ds
    scale = (ds * a * sc.gamma(1.0 - c) / c) ** (1.0 / c)
    out = np.empty(size)
    need = np.arange(size)
    for _ in range(max_rounds):
        m = need.size
        if m == 0:
            return out
        u = (rng.random(m) - 0.5) * math.pi
        w = rng.exponential(size=m)
        s = (
            np.sin(c * (u + math.pi / 2.0))
            / np.cos(u) ** (1.0 / c)
            * (np.cos(u - c * (u + math.pi / 2.0)) / w) ** ((1.0 - c) / c)
        )
        draw = scale * s
        accept = rng.random(m) < np.exp(-b * draw)
        out[need[accept]] = draw[accept]
        need = need[~accept]
    raise DomainError(
        "tempering acceptance rate too low; reduce the step or the rate b"
    )


def sim_regulated_ts_terminal(spec, reg, config, *, approx_ok=False):
    """Terminal draws of a type I / III regulated tempered stable clock by
    kernel-weighted discretization of the fractional-integral form.

    Base increments are exact (gamma for c = 0, tempered-stable rejection
    sampling otherwise); the kernel weighting on a finite grid is the
    declared approximation.  c > 0 requires ``approx_ok=True``.
    """
    if not isinstance(spec, TemperedStable):
        raise UnsupportedError("discretized paths are for tempered stable clocks")
    if reg.rtype is RegType.TYPE_II and reg.n not in (0.0, 1.0):
        raise UnsupportedError(
            "no pathwise representation for type II beyond degree 1; "
            "use sim_type2_marginal"
        )
    if spec.c > 0.0 and not approx_ok:
        raise DomainError(
            "c > 0 path simulation is approximate; pass approx_ok=True to accept"
        )
    T = config.horizon
    G = config.grid_steps
    ds = T / G
    mids = (np.arange(G) + 0.5) * ds
    weights = regulating_kernel(reg, mids, T)
    out = np.empty(config.n_paths)
    for i, rng in enumerate(_path_streams(config)):
        out[i] = weights @ _ts_base_increments(spec, ds, G, rng)
    return out


def regulating_kernel(reg, s, t):
    """Weight applied to the base increment at time ``s`` when forming the
    regulated value at time ``t`` (types I and III; degree 0 is 1)."""
    s = np.asarray(s, dtype=float)
    n = reg.n
    if n == 0.0:
        return np.ones_like(s)
    if reg.rtype in (RegType.TYPE_I, RegType.TYPE_II) and n == 1.0:
        return 1.0 - s / t
    if reg.rtype is RegType.TYPE_I:
        return sc.gammainc(n, np.log(t / s))
    if reg.rtype is RegType.TYPE_III:
        return (t - s) ** n / (t**n * sc.gamma(n + 1.0))
    raise UnsupportedError("no pathwise kernel for type II beyond degree 1")


# --------------------------------------------------------------------------
# inverse-CDF marginals


def sim_clock_marginal(spec, reg, t, config, *, cdf_tol=1e-6):
    """Marginal clock draws at horizon ``t`` for any regulation type.

    Poisson clocks use the exact compound representation; tempered stable
    clocks draw by inverting a CDF tabulated from the keyhole density.
    """
    if isinstance(spec, Poisson):
        cfg = SimConfig(config.seed, config.n_paths, config.grid_steps, t)
        return sim_regulated_poisson(spec.lam, reg, cfg)
    if spec.c == 0.0 and reg.n == 0.0:
        rng = _marginal_rng(config)
        return rng.gamma(shape=spec.a * t, scale=1.0 / spec.b, size=config.n_paths)
    xs, cdf = _tabulate_clock_cdf(spec, reg, t, cdf_tol)
    rng = _marginal_rng(config)
    u = rng.random(config.n_paths)
    return np.interp(u, cdf, xs)


def _tabulate_clock_cdf(spec, reg, t, tol, n_grid=3000):
    from .densities import ClockDensity

    mean, var, _, ekurt = regulated_moments(spec, reg, t)
    sd = math.sqrt(var)
    spread = 12.0 + 2.0 * max(0.0, ekurt) ** 0.5
    hi = mean + spread * sd
    dens = ClockDensity(spec, reg, t, rel_tol=min(1e-7, tol * 1e-2))
    # geometric head toward the (possibly steep) origin, linear body
    x_min = 1e-6 * mean
    for _ in range(3):
        if dens.pdf(x_min) * x_min <= 1e-8:
            break
        x_min *= 1e-2
    head = np.geomspace(x_min, 0.5 * mean, 600, endpoint=False)
    body = np.linspace(0.5 * mean, hi, n_grid)
    xs = np.unique(np.concatenate([head, body]))
    pdf = dens.pdf_batch(xs)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(xs))])
    total = cdf[-1]
    if abs(total - 1.0) > 1e-3:
        raise DomainError(
            f"clock CDF tabulation mass {total:.6f} too far from 1; "
            "widen the grid or lower the tolerance"
        )
    cdf /= total
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return xs[keep], cdf[keep]


def sim_type2_marginal(spec, n, t, config, *, cdf_tol=1e-6):
    """Marginal draws of the type II regulated clock (no pathwise
    representation exists beyond degree 1)."""
    return sim_clock_marginal(spec, Regulation(RegType.TYPE_II, n), t, config,
                              cdf_tol=cdf_tol)


# --------------------------------------------------------------------------
# Gaussian mixtures


def sim_gaussian_mixture(mix, spec, reg, config, *, approx_ok=False, clock=None):
    """Draws of mu*t + theta*tau + sqrt(tau) Z at the horizon, with tau the
    regulated clock time.  ``clock`` optionally injects precomputed clock
    draws (pricing reuses tabulated marginals this way)."""
    if not isinstance(mix, GaussianMixture):
        raise UnsupportedError("Gaussian-mixture sampler needs a GaussianMixture")
    t = config.horizon
    if clock is None:
        clock = sim_clock_marginal(spec, reg, t, config)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((config.seed, 0x5A11)))
    )
    z = rng.standard_normal(len(clock))
    return mix.mu * t + mix.theta * clock + np.sqrt(clock) * z
