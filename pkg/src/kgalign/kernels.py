"""Hot numeric kernels: compiled core with a pure-numpy fallback.

The compiled extension ``kgalign._ckernels`` is used when importable,
otherwise the numpy implementations below take over. The selection can be
overridden explicitly with :func:`use_backend` (no environment variables are
consulted). ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "trilinear_forward",
    "trilinear_backward",
    "rows_dot",
    "active_backend",
    "available_backends",
    "use_backend",
]


def _np_trilinear_forward(ent, rel, h, r, t):
    return np.einsum("ij,ij,ij->i", ent[h], rel[r], ent[t])


def _np_trilinear_backward(ent, rel, h, r, t, coeff, grad_ent, grad_rel):
    c = coeff[:, None]
    eh = ent[h]
    wr = rel[r]
    et = ent[t]
    # np.add.at: unbuffered scatter-add, required because indexes repeat
    np.add.at(grad_ent, h, c * wr * et)
    np.add.at(grad_ent, t, c * wr * eh)
    np.add.at(grad_rel, r, c * eh * et)


def _np_rows_dot(a, ia, b, ib):
    return np.einsum("ij,ij->i", a[ia], b[ib])


_NUMPY_IMPL = {
    "trilinear_forward": _np_trilinear_forward,
    "trilinear_backward": _np_trilinear_backward,
    "rows_dot": _np_rows_dot,
}

_BACKENDS = {"numpy": _NUMPY_IMPL}

try:
    from kgalign import _ckernels as _compiled
except ImportError:
    _compiled = None

if _compiled is not None:
    _BACKENDS["cython"] = {
        "trilinear_forward": _compiled.trilinear_forward,
        "trilinear_backward": _compiled.trilinear_backward,
        "rows_dot": _compiled.rows_dot,
    }

_active_name = "cython" if _compiled is not None else "numpy"
_active = _BACKENDS[_active_name]


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active_name


def use_backend(name: str) -> str:
    """Select a kernel backend by name; returns the previously active one."""
    global _active, _active_name
    if name == "auto":
        name = "cython" if "cython" in _BACKENDS else "numpy"
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; have {available_backends()}")
    previous = _active_name
    _active_name = name
    _active = _BACKENDS[name]
    return previous


def _as_idx(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.int64)


def _as_f64(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def trilinear_forward(ent, rel, h, r, t) -> np.ndarray:
    """Diagonal trilinear scores sum_j ent[h]*rel[r]*ent[t] per row."""
    return _active["trilinear_forward"](_as_f64(ent), _as_f64(rel),
                                        _as_idx(h), _as_idx(r), _as_idx(t))


def trilinear_backward(ent, rel, h, r, t, coeff, grad_ent, grad_rel) -> None:
    """Accumulate coeff-weighted gradients of trilinear scores in place."""
    _active["trilinear_backward"](_as_f64(ent), _as_f64(rel),
                                  _as_idx(h), _as_idx(r), _as_idx(t),
                                  _as_f64(coeff), grad_ent, grad_rel)


def rows_dot(a, ia, b, ib) -> np.ndarray:
    """Per-row dot products a[ia[i]] . b[ib[i]]."""
    return _active["rows_dot"](_as_f64(a), _as_idx(ia), _as_f64(b), _as_idx(ib))
