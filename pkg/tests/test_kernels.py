import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathmark import _pykernels, kernels

MASK = (1 << 64) - 1


def ref_mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def ref_uniform(seed, index):
    key = ref_mix(seed & MASK)
    z = ref_mix((key + (index + 1) * 0x9E3779B97F4A7C15) & MASK)
    return (z >> 11) * 2.0 ** -53


BACKENDS = sorted(kernels.BACKENDS)


def test_splitmix_known_value():
    # first output of the reference SplitMix64 generator seeded with 0
    assert ref_mix(0x9E3779B97F4A7C15) == 0xE220A8397B1DCDAF


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("seed", [0, 1, 42, 2 ** 63 + 5, 2 ** 64 - 1])
def test_uniforms_match_integer_reference(name, seed):
    kern = kernels.get_backend(name)
    got = kern.uniforms(seed, 1000, 64)
    want = [ref_uniform(seed, 1000 + i) for i in range(64)]
    assert got.tolist() == want


@pytest.mark.parametrize("name", BACKENDS)
def test_uniform_range(name):
    u = kernels.get_backend(name).uniforms(3, 0, 100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 5 * (1 / 12 / len(u)) ** 0.5


@pytest.mark.parametrize("name", BACKENDS)
def test_random_access(name):
    kern = kernels.get_backend(name)
    whole = kern.uniforms(9, 0, 1000)
    assert np.array_equal(whole[500:700], kern.uniforms(9, 500, 200))


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")
def test_backends_bit_identical():
    c, p = kernels.get_backend("cython"), kernels.get_backend("python")
    cdf = np.cumsum([0.1, 0.0, 0.3, 0.25, 0.0, 0.35])
    cdf[-1] = 1.0
    for seed in (0, 7, 2 ** 64 - 1):
        assert np.array_equal(c.uniforms(seed, 123, 5000), p.uniforms(seed, 123, 5000))
        assert np.array_equal(c.categorical(seed, 123, 5000, cdf), p.categorical(seed, 123, 5000, cdf))
    rng = np.random.default_rng(0)
    eh = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    ev = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    a, b = (0.6 + 0.1j, -0.2 + 0.77j)
    assert np.allclose(c.projected_intensity(eh, ev, a, b), p.projected_intensity(eh, ev, a, b),
                       rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("name", BACKENDS)
def test_categorical_never_draws_zero_bins(name):
    p = np.array([0.0, 0.5, 0.0, 0.5, 0.0])
    cdf = np.cumsum(p)
    cdf[3:] = 1.0
    codes = kernels.get_backend(name).categorical(1, 0, 200_000, cdf)
    counts = np.bincount(codes, minlength=5)
    assert counts[0] == counts[2] == counts[4] == 0
    assert counts.sum() == 200_000


@pytest.mark.parametrize("name", BACKENDS)
def test_categorical_inverts_cdf(name):
    kern = kernels.get_backend(name)
    cdf = np.array([0.2, 0.5, 1.0])
    u = kern.uniforms(5, 0, 1000)
    codes = kern.categorical(5, 0, 1000, cdf)
    assert np.array_equal(codes, np.searchsorted(cdf, u, side="right"))


@pytest.mark.parametrize("name", BACKENDS)
def test_projected_intensity(name):
    kern = kernels.get_backend(name)
    eh = np.array([1, 0, 1], dtype=complex) / np.sqrt(2)
    ev = np.array([0, 1, -1j], dtype=complex) / np.sqrt(2)
    s = 1 / np.sqrt(2)
    # third sample is |L>/sqrt2
    assert np.allclose(kern.projected_intensity(eh, ev, 1, 0), [0.5, 0, 0.5])
    assert np.allclose(kern.projected_intensity(eh, ev, s, -1j * s), [0.25, 0.25, 1.0])
    assert np.allclose(kern.projected_intensity(eh, ev, s, 1j * s), [0.25, 0.25, 0.0], atol=1e-15)


def test_read_only_inputs_accepted():
    arr = np.ones(8, dtype=complex)
    arr.setflags(write=False)
    for name in BACKENDS:
        assert kernels.get_backend(name).projected_intensity(arr, arr, 1, 0).sum() == 8


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_default_backend_selected():
    assert kernels.BACKEND in kernels.BACKENDS
    assert kernels.get_backend() is kernels.backend


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 2 ** 40))
def test_fallback_matches_reference_anywhere(seed, start):
    got = _pykernels.uniforms(seed, start, 3).tolist()
    assert got == [ref_uniform(seed, start + i) for i in range(3)]


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, PATHMARK_PURE_PYTHON="1")
    res = subprocess.run([sys.executable, "-c", "from pathmark import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "python"
