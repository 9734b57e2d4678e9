"""Backend selection for the solver's hot kernels.

The numba-jitted kernels are used when available; setting the environment
variable ``AERISIM_NUMBA=0`` (or ``false``/``off``) before import forces
the pure-numpy fallback. ``AERISIM_NUMBA=1`` demands numba and raises if
it cannot be imported. Both backends implement the same functions; see
``benchmarks/bench_backends.py`` for a timing comparison.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_FLAG = os.environ.get("AERISIM_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "false", "off", "no"):
    _impl = _kernels_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl
        BACKEND = "numba"
    except ImportError:
        if _FLAG in ("1", "true", "on", "yes"):
            raise
        _impl = _kernels_numpy
        BACKEND = "numpy"

effective_gains = _impl.effective_gains
effective_channels = _impl.effective_channels
wmmse_update = _impl.wmmse_update
mse_vector = _impl.mse_vector
precoder_update = _impl.precoder_update
surface_update = _impl.surface_update
aux_amplitude_update = _impl.aux_amplitude_update
aux_phase_update = _impl.aux_phase_update
penalty_value = _impl.penalty_value


def backend_name() -> str:
    return BACKEND
