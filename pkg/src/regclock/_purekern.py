"""Pure numpy implementation of the hot numerical kernels.

Two families of kernels sit inside every quadrature panel of the library:

* the regulating jump transform tau(u) mapping a standard uniform to a
  distorted jump amplitude (one variant per regulation type), and
* the base Laplace exponent psi evaluated on arrays of (complex)
  arguments, either on the principal branch or on the upper edge of the
  negative-axis branch cut.

The compiled twin (``regclock._fastkern``) exposes the same functions with
identical semantics; :mod:`regclock._kernels` picks one at import time.
"""

import numpy as np
from scipy import special as sc

BACKEND_NAME = "python"

# family codes shared with the compiled backend
FAMILY_POISSON = 0
FAMILY_TEMPERED_STABLE = 1

# regulation type codes
RT_I = 1
RT_II = 2
RT_III = 3


def jump_transform_values(rtype, n, u01):
    """Distorted jump amplitudes tau(u01) for a regulation of degree ``n``.

    ``u01`` is an array of standard-uniform variates in the open interval
    (0, 1).  Degree 0 returns the unregulated amplitude 1 for every input.
    """
    u01 = np.asarray(u01, dtype=float)
    if n == 0.0:
        return np.ones_like(u01)
    if rtype == RT_I:
        return sc.gammainc(n, -np.log(u01))
    if rtype == RT_II:
        return np.exp(-sc.gammainccinv(n, 1.0 - u01))
    if rtype == RT_III:
        return (1.0 - u01) ** n / sc.gamma(n + 1.0)
    raise ValueError(f"unknown regulation type code {rtype}")


def psi_principal(family, p0, p1, p2, z):
    """Base Laplace exponent log E exp(-z X_1) on the principal branch.

    ``z`` is a complex array assumed off the branch cut; behaviour exactly
    on the cut follows numpy's signed-zero convention and is not relied on.
    """
    z = np.asarray(z, dtype=complex)
    if family == FAMILY_POISSON:
        return p0 * np.expm1(-z)
    if family == FAMILY_TEMPERED_STABLE:
        a, b, c = p0, p1, p2
        if c == 0.0:
            return -a * np.log1p(z / b)
        return a * sc.gamma(-c) * ((z + b) ** c - b**c)
    raise ValueError(f"unknown family code {family}")


def psi_upper_edge(family, p0, p1, p2, v):
    """Base Laplace exponent at exp(i*pi)*v on the upper edge of the cut.

    ``v`` is a real positive array.  Arguments left of the branch point
    (v > b for the tempered stable family) pick up the e^{i*pi*c} phase of
    the principal branch approached from above.
    """
    v = np.asarray(v, dtype=float)
    if family == FAMILY_POISSON:
        return (p0 * np.expm1(v)).astype(complex)
    a, b, c = p0, p1, p2
    w = b - v
    out = np.empty(v.shape, dtype=complex)
    right = w > 0.0
    left = ~right
    # keep a quadrature node that rounds onto the branch point finite
    aw_left = np.maximum(-w[left], 1e-30)
    if c == 0.0:
        out[right] = -a * np.log(w[right] / b)
        out[left] = -a * (np.log(aw_left / b) + 1j * np.pi)
    else:
        g = a * sc.gamma(-c)
        bc = b**c
        out[right] = g * (w[right] ** c - bc)
        phase = complex(np.cos(np.pi * c), np.sin(np.pi * c))
        out[left] = g * (aw_left**c * phase - bc)
    return out
