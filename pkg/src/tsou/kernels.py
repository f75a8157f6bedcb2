"""Kernel backend selection.

Imports the compiled Cython kernels when available, otherwise the
pure-Python reference implementation. ``TSOU_BACKEND=python`` forces the
fallback (useful for the equivalence tests and the benchmark).
"""
from __future__ import annotations

import os

if os.environ.get("TSOU_BACKEND", "").lower() in ("python", "py"):
    from tsou import _kernels_py as impl
else:
    try:
        from tsou import _kernels as impl   # type: ignore[no-redef]
    except ImportError:
        from tsou import _kernels_py as impl

BACKEND: str = impl.BACKEND
Stream = impl.Stream
uniforms = impl.uniforms
normals = impl.normals
gammas = impl.gammas
poissons = impl.poissons
ts_draws = impl.ts_draws
ig_draws = impl.ig_draws
v_draws = impl.v_draws
ou_paths = impl.ou_paths
nts_path_increments = impl.nts_path_increments


def get_backend(name: str | None = None):
    """Return a kernel module by name ('cython', 'python' or None=active)."""
    if name is None:
        return impl
    if name in ("python", "py"):
        from tsou import _kernels_py
        return _kernels_py
    if name in ("cython", "cy", "c"):
        from tsou import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
