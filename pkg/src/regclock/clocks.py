"""Base (unregulated) subordinator families: Laplace exponents, Levy
measures, cumulants and the Blumenthal-Getoor path-activity index.

Two families are supported as stochastic clocks: the Poisson process with
intensity ``lam`` and the one-sided tempered stable subordinator with
shape ``a``, rate ``b`` and family parameter ``c`` in [0, 1) (c = 0 is the
gamma process, c = 1/2 the inverse Gaussian).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from . import _kernels
from .errors import BranchCutError, DomainError
from .quadrature import adaptive_panels


@dataclass(frozen=True)
class Poisson:
    """Poisson clock with intensity ``lam > 0``; log LT is lam*(e^-u - 1)."""

    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"Poisson intensity must be positive, got {self.lam}")

    @property
    def family_code(self):
        return _kernels.FAMILY_POISSON

    @property
    def kernel_params(self):
        return (self.lam, 0.0, 0.0)

    @property
    def cut_start(self):
        return math.inf  # entire transform, no cut


@dataclass(frozen=True)
class TemperedStable:
    """Tempered stable clock {a, b, c}; Levy density a exp(-b z) / z^(c+1)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise DomainError(f"shape a must be positive, got {self.a}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise DomainError(f"rate b must be positive, got {self.b}")
        if not (0.0 <= self.c < 1.0):
            raise DomainError(f"family parameter c must lie in [0, 1), got {self.c}")

    @property
    def family_code(self):
        return _kernels.FAMILY_TEMPERED_STABLE

    @property
    def kernel_params(self):
        return (self.a, self.b, self.c)

    @property
    def cut_start(self):
        return self.b  # transform analytic off (-inf, -b]


Clock = Poisson | TemperedStable


@dataclass(frozen=True)
class CumulantSet:
    """First four cumulants of a random variable at horizon ``t``."""

    k1: float
    k2: float
    k3: float
    k4: float
    t: float

    @property
    def mean(self):
        return self.k1

    @property
    def variance(self):
        return self.k2

    @property
    def skewness(self):
        return self.k3 / self.k2**1.5

    @property
    def excess_kurtosis(self):
        return self.k4 / self.k2**2


@dataclass(frozen=True)
class LevyMeasureView:
    """Levy measure as atoms and/or a density on (0, inf).

    For density measures the integrability requirement
    int (z ^ 1) nu(dz) < inf is spot-checked numerically at construction.
    """

    atoms: tuple = ()
    density: object = None
    _trunc_integral: float = field(default=None, compare=False)

    def __post_init__(self):
        if self.density is not None:
            val = _check_truncated_mass(self.density)
            object.__setattr__(self, "_trunc_integral", val)

    def truncated_mass(self):
        """Numerical value of int (z ^ 1) nu(dz)."""
        total = sum(min(z, 1.0) * m for z, m in self.atoms)
        if self._trunc_integral is not None:
            total += self._trunc_integral
        return total


def _check_truncated_mass(density):
    # int_0^1 z rho(z) dz + int_1^inf rho(z) dz, the near piece probed on a
    # shrinking dyadic grid to catch a non-integrable origin.
    def near(z):
        return z * density(z)

    pts = [2.0**-k for k in range(40, -1, -1)]
    near_val, _ = adaptive_panels(np.vectorize(near), pts, rel_tol=1e-6)

    def far(z):
        return density(z)

    far_pts = [1.0, 2.0, 5.0, 15.0, 40.0, 100.0]
    far_val, _ = adaptive_panels(np.vectorize(far), far_pts, rel_tol=1e-6)
    total = near_val + far_val
    if not math.isfinite(total):
        raise DomainError("Levy density fails the (z ^ 1) integrability check")
    return total


def _on_cut(spec, u):
    cut = spec.cut_start
    if not math.isfinite(cut):
        return False
    re = complex(u).real
    im = complex(u).imag
    return im == 0.0 and re <= -cut


def laplace_exponent(spec, u, *, upper_edge=False):
    """Log Laplace transform of the clock at unit time, log E exp(-u X_1).

    ``upper_edge=True`` interprets a positive real ``u`` as the magnitude v
    of the argument e^{i pi} v on the upper edge of the branch cut (the
    keyhole-inversion convention).
    """
    p0, p1, p2 = spec.kernel_params
    if upper_edge:
        v = float(u)
        if v <= 0:
            raise DomainError("upper-edge evaluation expects a positive magnitude")
        return complex(
            _kernels.psi_upper_edge(spec.family_code, p0, p1, p2, np.array([v]))[0]
        )
    u = complex(u)
    if _on_cut(spec, u):
        raise BranchCutError(
            f"argument {u} lies on the branch cut (-inf, {-spec.cut_start}]"
        )
    val = _kernels.psi_principal(spec.family_code, p0, p1, p2, np.array([u]))[0]
    if u.imag == 0.0:
        re = float(val.real)
        return complex(re, 0.0)
    return complex(val)


def base_cumulants(spec, t):
    """Exact first four cumulants of X_t."""
    if not t > 0:
        raise DomainError(f"horizon must be positive, got {t}")
    if isinstance(spec, Poisson):
        k = spec.lam * t
        return CumulantSet(k, k, k, k, t)
    a, b, c = spec.a, spec.b, spec.c
    k1 = sc.gamma(1.0 - c) * a * t / b ** (1.0 - c)
    k2 = (1.0 - c) * k1 / b
    k3 = (2.0 - c) * (1.0 - c) * k1 / b**2
    k4 = (3.0 - c) * (2.0 - c) * (1.0 - c) * k1 / b**3
    return CumulantSet(k1, k2, k3, k4, t)


def base_levy_measure(spec):
    """Levy measure of the clock: a unit atom for Poisson, a density for
    the tempered stable family."""
    if isinstance(spec, Poisson):
        return LevyMeasureView(atoms=((1.0, spec.lam),))
    a, b, c = spec.a, spec.b, spec.c

    def density(z):
        z = np.asarray(z, dtype=float)
        return a * np.exp(-b * z) / z ** (c + 1.0)

    return LevyMeasureView(density=density)


def bg_index(spec):
    """Blumenthal-Getoor index: 0 for finite activity, c for tempered stable."""
    if isinstance(spec, Poisson):
        return 0.0
    return spec.c
