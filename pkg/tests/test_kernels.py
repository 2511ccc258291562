import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgalign import kernels


requires_compiled = pytest.mark.skipif(
    "cython" not in kernels.available_backends(),
    reason="compiled kernel extension not built")


@pytest.fixture
def arrays(rng):
    n_ent, n_rel, k, n = 17, 5, 6, 40
    ent = rng.normal(size=(n_ent, k))
    rel = rng.normal(size=(n_rel, k))
    h = rng.integers(0, n_ent, size=n)
    r = rng.integers(0, n_rel, size=n)
    t = rng.integers(0, n_ent, size=n)
    coeff = rng.normal(size=n)
    return ent, rel, h, r, t, coeff


def reference_forward(ent, rel, h, r, t):
    return np.array([float(np.sum(ent[hi] * rel[ri] * ent[ti]))
                     for hi, ri, ti in zip(h, r, t)])


def reference_backward(ent, rel, h, r, t, coeff):
    grad_ent = np.zeros_like(ent)
    grad_rel = np.zeros_like(rel)
    for hi, ri, ti, c in zip(h, r, t, coeff):
        grad_ent[hi] += c * rel[ri] * ent[ti]
        grad_ent[ti] += c * rel[ri] * ent[hi]
        grad_rel[ri] += c * ent[hi] * ent[ti]
    return grad_ent, grad_rel


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_forward_matches_reference(arrays, backend):
    ent, rel, h, r, t, _ = arrays
    previous = kernels.use_backend(backend)
    try:
        got = kernels.trilinear_forward(ent, rel, h, r, t)
    finally:
        kernels.use_backend(previous)
    assert np.allclose(got, reference_forward(ent, rel, h, r, t), atol=1e-12)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_backward_matches_reference(arrays, backend):
    ent, rel, h, r, t, coeff = arrays
    grad_ent = np.zeros_like(ent)
    grad_rel = np.zeros_like(rel)
    previous = kernels.use_backend(backend)
    try:
        kernels.trilinear_backward(ent, rel, h, r, t, coeff, grad_ent, grad_rel)
    finally:
        kernels.use_backend(previous)
    exp_ent, exp_rel = reference_backward(ent, rel, h, r, t, coeff)
    assert np.allclose(grad_ent, exp_ent, atol=1e-12)
    assert np.allclose(grad_rel, exp_rel, atol=1e-12)


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_rows_dot(arrays, rng, backend):
    a = rng.normal(size=(9, 7))
    b = rng.normal(size=(11, 7))
    ia = rng.integers(0, 9, size=25)
    ib = rng.integers(0, 11, size=25)
    previous = kernels.use_backend(backend)
    try:
        got = kernels.rows_dot(a, ia, b, ib)
    finally:
        kernels.use_backend(previous)
    expected = np.array([float(a[i] @ b[j]) for i, j in zip(ia, ib)])
    assert np.allclose(got, expected, atol=1e-12)


@requires_compiled
@given(seed=st.integers(0, 2**31), n=st.integers(1, 60), k=st.integers(1, 12))
@settings(max_examples=40)
def test_backends_agree(seed, n, k):
    rng = np.random.Generator(np.random.PCG64(seed))
    ent = rng.normal(size=(8, k))
    rel = rng.normal(size=(3, k))
    h = rng.integers(0, 8, size=n)
    r = rng.integers(0, 3, size=n)
    t = rng.integers(0, 8, size=n)
    coeff = rng.normal(size=n)
    entry_backend = kernels.active_backend()
    results = {}
    try:
        for backend in ("numpy", "cython"):
            kernels.use_backend(backend)
            fwd = kernels.trilinear_forward(ent, rel, h, r, t)
            ge = np.zeros_like(ent)
            gr = np.zeros_like(rel)
            kernels.trilinear_backward(ent, rel, h, r, t, coeff, ge, gr)
            results[backend] = (fwd, ge, gr)
    finally:
        kernels.use_backend(entry_backend)
    for a, b in zip(results["numpy"], results["cython"]):
        assert np.allclose(a, b, atol=1e-10)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_use_backend_returns_previous():
    current = kernels.active_backend()
    previous = kernels.use_backend("numpy")
    assert previous == current
    assert kernels.active_backend() == "numpy"
    kernels.use_backend(previous)
    assert kernels.active_backend() == current
