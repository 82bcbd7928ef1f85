"""Hot-loop kernels: Slater-Condon matrix assembly and statevector gates.

The compiled extension is used when importable; the numpy fallback otherwise.
Set QSCI_KERNELS=python (or =cython) to force a backend.
"""

import os

_forced = os.environ.get("QSCI_KERNELS", "").lower()

if _forced in ("", "cython", "c"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _forced:
            raise
        from . import _pykernels as _impl
elif _forced in ("python", "py"):
    from . import _pykernels as _impl
else:
    raise ValueError(f"unknown QSCI_KERNELS value {_forced!r}")

BACKEND = _impl.BACKEND
sc_matrix = _impl.sc_matrix
sc_block = _impl.sc_block
apply_1q = _impl.apply_1q
apply_cnot = _impl.apply_cnot
apply_cz = _impl.apply_cz
apply_givens = _impl.apply_givens
