"""Kernel backend selection.

The hot inner loops (tree split scans, group-similarity scans, the pairwise
dual solver) exist twice: a compiled Cython extension (``_core``) and a pure
numpy twin (``_pure``) with identical semantics. The compiled module is used
when importable; set ``POWERMOD_KERNELS=pure`` or ``POWERMOD_KERNELS=cython``
to pin a backend (``auto`` is the default). ``benchmarks/kernel_bench.py``
compares the two.
"""

import os

_requested = os.environ.get("POWERMOD_KERNELS", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pure as _impl

        BACKEND = "pure"
elif _requested == "cython":
    from . import _core as _impl

    BACKEND = "cython"
elif _requested == "pure":
    from . import _pure as _impl

    BACKEND = "pure"
else:
    raise ImportError(f"unknown POWERMOD_KERNELS value {_requested!r}")

scan_split = _impl.scan_split
first_accepting_group = _impl.first_accepting_group
smo_solve = _impl.smo_solve

__all__ = ["BACKEND", "scan_split", "first_accepting_group", "smo_solve"]
