"""Backend selection for the hot loops.

Imports the compiled extension when present, otherwise the numpy fallback.
Set LYLAB_FORCE_FALLBACK=1 to skip the extension (used by the benchmark and
the backend-agreement tests).
"""

import os

if os.environ.get("LYLAB_FORCE_FALLBACK", "") in ("1", "true", "yes"):
    from . import _kernels_fallback as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_fallback as _impl

gray_subset_energies = _impl.gray_subset_energies
dd_exp_arrays = _impl.dd_exp_arrays
aberth_refine = _impl.aberth_refine


def backend_name():
    return _impl.BACKEND_NAME
