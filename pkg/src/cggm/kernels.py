"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
reference kernels take over.  Set ``CGGM_BACKEND=python`` to force the
fallback.
"""

import os

from . import _pykernels

if os.environ.get("CGGM_BACKEND", "").lower() == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

EPS = _pykernels.EPS
RJ = _pykernels.RJ
DRJ = _pykernels.DRJ

complete = _impl.complete
log_density = _impl.log_density
mh_sweeps = _impl.mh_sweeps
pair_chain = _impl.pair_chain


def get_backend(name):
    """Return the kernel module called ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
