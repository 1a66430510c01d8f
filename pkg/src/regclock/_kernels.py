"""Backend selection for the hot kernels.

The compiled extension is preferred when importable; set
``REGCLOCK_BACKEND=python`` to force the pure numpy fallback (or
``REGCLOCK_BACKEND=c`` to require the extension).
"""

import os

from . import _purekern

_choice = os.environ.get("REGCLOCK_BACKEND", "auto").lower()

if _choice in ("auto", "c", "compiled"):
    try:
        from . import _fastkern as _impl

        _impl.jump_transform_values  # noqa: B018 - probe the interface
    except (ImportError, AttributeError):
        if _choice != "auto":
            raise
        _impl = _purekern
elif _choice in ("python", "py", "pure"):
    _impl = _purekern
else:
    raise ValueError(f"unrecognized REGCLOCK_BACKEND={_choice!r}")

BACKEND_NAME = _impl.BACKEND_NAME
FAMILY_POISSON = _purekern.FAMILY_POISSON
FAMILY_TEMPERED_STABLE = _purekern.FAMILY_TEMPERED_STABLE
RT_I = _purekern.RT_I
RT_II = _purekern.RT_II
RT_III = _purekern.RT_III

jump_transform_values = _impl.jump_transform_values
psi_principal = _impl.psi_principal
psi_upper_edge = _impl.psi_upper_edge
