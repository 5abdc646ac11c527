"""Counter-based random numbers (vectorized Philox4x64-10).

Every draw is a pure function of ``(seed, lane, block)``, so a batch of
one million paths produces the same numbers whether it is generated in
one call, in chunks, or by eight workers racing each other.  ``lane``
indexes the path and ``block`` the step within the path; block 0 also
feeds single-shot terminal sampling.

The generator is the Philox 4x64 bijection with 10 rounds.  numpy ships
the same algorithm (``np.random.Philox``), but its ``Generator`` layer
consumes a data-dependent number of raw words per normal variate, which
breaks the pure-function contract; here the raw words are mapped to
normals through the inverse CDF instead.  The numpy bit generator is
kept as a cross-check oracle in the test suite.
"""

from __future__ import annotations

import numpy as np

from .normal import std_normal_quantile

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_U64_MASK = 0xFFFFFFFFFFFFFFFF
_TO_UNIT = float(2.0 ** -53)


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # 64x64 -> 128 bit product via 32-bit limbs; everything wraps mod 2^64.
    lo = a * b
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    t = a_lo * b_lo
    mid = a_hi * b_lo + (t >> _S32)
    mid2 = a_lo * b_hi + (mid & _MASK32)
    hi = a_hi * b_hi + (mid >> _S32) + (mid2 >> _S32)
    return hi, lo


def philox4x64(counter, key) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Philox4x64-10 block function.

    ``counter`` is a 4-tuple and ``key`` a 2-tuple of uint64 scalars or
    equally-shaped arrays; returns the four output words.
    """
    # atleast_1d: array (not scalar) integer arithmetic wraps mod 2^64
    # silently, which is exactly what the algorithm needs.
    words = np.broadcast_arrays(*(np.asarray(c, dtype=np.uint64) for c in counter))
    shape = words[0].shape
    x0, x1, x2, x3 = (np.atleast_1d(w) for w in words)
    k0 = int(key[0]) & _U64_MASK
    k1 = int(key[1]) & _U64_MASK
    for _ in range(10):
        hi0, lo0 = _mulhilo(_M0, x0)
        hi1, lo1 = _mulhilo(_M1, x2)
        x0, x1, x2, x3 = hi1 ^ x1 ^ np.uint64(k0), lo1, hi0 ^ x3 ^ np.uint64(k1), lo0
        k0 = (k0 + _W0) & _U64_MASK
        k1 = (k1 + _W1) & _U64_MASK
    return tuple(w.reshape(shape) for w in (x0, x1, x2, x3))


def _to_unit(words: np.ndarray) -> np.ndarray:
    # 53-bit uniform strictly inside (0, 1); never returns 0 or 1.
    return ((words >> _S11).astype(np.float64) + 0.5) * _TO_UNIT


def uniform_pairs(seed: int, lane, block=0) -> np.ndarray:
    """Two open-interval uniforms per (seed, lane, block), shape (..., 2)."""
    lane_arr, block_arr = np.broadcast_arrays(
        np.asarray(lane, dtype=np.uint64), np.asarray(block, dtype=np.uint64)
    )
    zeros = np.zeros_like(lane_arr)
    w0, w1, _, _ = philox4x64((block_arr, lane_arr, zeros, zeros), (seed, 0))
    return np.stack([_to_unit(w0), _to_unit(w1)], axis=-1)


def normal_pairs(seed: int, lane, block=0) -> np.ndarray:
    """Two independent N(0,1) variates per (seed, lane, block), shape (..., 2)."""
    u = uniform_pairs(seed, lane, block)
    return np.asarray(std_normal_quantile(u))
