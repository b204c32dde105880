"""Backend selection for the sampling kernels.

The compiled extension is used when it was built; set ``TPBS_PURE_PYTHON=1``
to force the numpy reference implementation.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("TPBS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
sample_z_batch = _impl.sample_z_batch
klein = _impl.klein
SamplerFailure = _pykernels.SamplerFailure


def backends() -> dict:
    """All importable backends, keyed by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
