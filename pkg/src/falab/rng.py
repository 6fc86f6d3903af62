"""Deterministic, stream-splittable Gaussian sampling.

Generator layout (fixed so any conforming implementation reproduces the same
bits):

* stream seed = FNV-1a 64-bit hash of the master seed (8 bytes, little
  endian) followed by the UTF-8 bytes of the stream label;
* xoshiro256++ state = four successive SplitMix64 outputs from that seed;
* uniforms: ``(next_u64 >> 11) * 2**-53`` in [0, 1);
* Gaussians: Box-Muller on consecutive uniform pairs,
  ``r = sqrt(-2 ln(1 - u1))``, ``z0 = r cos(2 pi u2)``, ``z1 = r sin(2 pi u2)``;
  an odd request consumes a full pair and drops the second value.

Named streams keep a p-sweep from perturbing the data: "X", "W0", "beta0",
"b", "teacher_W", "teacher_beta", with a "/rep{k}" suffix per repeat.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, fallback for safety
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(master_seed, label):
    h = _FNV_OFFSET
    data = int(master_seed & _MASK64).to_bytes(8, "little") + label.encode("utf-8")
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


@njit(cache=True)
def _fill_uniform(s, out):
    s0, s1, s2, s3 = s[0], s[1], s[2], s[3]
    for i in range(out.shape[0]):
        tmp = s0 + s3
        result = ((tmp << np.uint64(23)) | (tmp >> np.uint64(41))) + s0
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
        out[i] = (result >> np.uint64(11)) * (2.0 ** -53)
    s[0], s[1], s[2], s[3] = s0, s1, s2, s3


@njit(cache=True)
def _box_muller(u, out):
    two_pi = 2.0 * np.pi
    half = out.shape[0] // 2
    for k in range(half):
        r = np.sqrt(-2.0 * np.log(1.0 - u[2 * k]))
        phi = two_pi * u[2 * k + 1]
        out[2 * k] = r * np.cos(phi)
        out[2 * k + 1] = r * np.sin(phi)


class RngStream:
    """Single-owner xoshiro256++ stream identified by (master_seed, label)."""

    def __init__(self, state, label):
        self.state = np.asarray(state, dtype=np.uint64)
        self.label = label

    def uniform(self, count):
        out = np.empty(int(count), dtype=np.float64)
        _fill_uniform(self.state, out)
        return out

    def gaussian(self, count, std=1.0):
        """count i.i.d. draws from N(0, std^2)."""
        if std <= 0:
            raise ValueError("std must be positive")
        count = int(count)
        pairs = count + (count & 1)
        u = self.uniform(pairs)
        out = np.empty(pairs, dtype=np.float64)
        _box_muller(u, out)
        if std != 1.0:
            out *= std
        return out[:count]

    def gaussian_matrix(self, rows, cols, std=1.0):
        return self.gaussian(rows * cols, std).reshape(rows, cols)


def derive_stream(master_seed, label):
    """Deterministically derive an independent stream from (seed, label)."""
    seed = _fnv1a(master_seed, label)
    state = []
    for _ in range(4):
        seed, z = _splitmix64(seed)
        state.append(z)
    if not any(state):  # xoshiro must not start from the all-zero state
        state[0] = 1
    return RngStream(np.array(state, dtype=np.uint64), label)
