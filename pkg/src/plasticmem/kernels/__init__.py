"""Hot-kernel backend selection.

The compiled Cython core is used when importable; set
``PLASTICMEM_PURE_PYTHON=1`` to force the numpy fallback.  Both backends
expose the same functions; ``backend_name()`` reports which one is active.
"""

import os

from . import _pure

if os.environ.get("PLASTICMEM_PURE_PYTHON") == "1":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

softmax = _impl.softmax
lstm_cell_forward = _impl.lstm_cell_forward
lstm_cell_backward = _impl.lstm_cell_backward
hebb_forward = _impl.hebb_forward
hebb_backward = _impl.hebb_backward
write_forward = _impl.write_forward
write_backward = _impl.write_backward
plastic_cell_sequence = _impl.plastic_cell_sequence
lstm_sequence = _impl.lstm_sequence
baseline_cell_sequence = _impl.baseline_cell_sequence

pure = _pure


def backend_name() -> str:
    return _impl.BACKEND


def get_backend(name: str):
    """Return a backend module by name ("pure" or "compiled")."""
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")
