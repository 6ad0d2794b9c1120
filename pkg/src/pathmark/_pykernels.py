"""NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is missing or disabled.  The
sampling kernels produce bit-identical output to the compiled versions.
"""
import numpy as np

NAME = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_UNIT = 2.0 ** -53


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed):
    return int(_mix64(np.array([seed], dtype=np.uint64))[0])


def uniforms(seed, start, n):
    """Uniform doubles in [0, 1) for counters start .. start+n-1."""
    key = np.array([stream_key(seed)], dtype=np.uint64)
    counters = np.arange(n, dtype=np.uint64) + np.uint64(start) + np.uint64(1)
    z = _mix64(key + counters * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _UNIT


def categorical(seed, start, n, cdf):
    """Category index i with cdf[i-1] <= u < cdf[i] for each counter."""
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    u = uniforms(seed, start, n)
    return np.searchsorted(cdf, u, side="right").astype(np.int8)


def projected_intensity(e_h, e_v, a, b):
    """|conj(a) e_h + conj(b) e_v|^2 pointwise."""
    p = np.conj(a) * e_h + np.conj(b) * e_v
    return p.real * p.real + p.imag * p.imag
