"""Counter-based, splittable random streams.

A stream is a 64-bit key. Children are derived by hashing the parent key with
an integer label, and the k-th draw of a stream is a pure function of
``(key, k)``. Because nothing is stateful, a walk's randomness depends only on
its (trial, round, vertex, particle) label and never on how work is batched
or scheduled across processes.

The mixing function is the SplitMix64 finalizer, applied elementwise on
``uint64`` arrays so that thousands of streams advance in one numpy call.
"""

from __future__ import annotations

import hashlib

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SALT_CHILD = np.uint64(0x6A09E667F3BCC909)
_SALT_DRAW = np.uint64(0xBB67AE8584CAA73B)
_S30, _S27, _S31, _S11 = (np.uint64(k) for k in (30, 27, 31, 11))
_INV53 = 1.0 / (1 << 53)
MASK64 = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def child_keys(keys, label) -> np.ndarray:
    """Derive child stream keys; ``keys`` and ``label`` broadcast."""
    keys = np.asarray(keys, dtype=np.uint64)
    label = np.asarray(label).astype(np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return mix64(keys ^ mix64(label * _GOLDEN + _SALT_CHILD))


def draw_bits(keys, counter) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    counter = np.asarray(counter).astype(np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(keys ^ mix64(counter * _GOLDEN + _SALT_DRAW)) + keys)


def draw_uniform(keys, counter) -> np.ndarray:
    """Uniforms on the open interval (0, 1), one per broadcast element."""
    bits = draw_bits(keys, counter) >> _S11
    return (bits.astype(np.float64) + 0.5) * _INV53


def seed_digest(*parts) -> int:
    """Stable 128-bit hash of the given parts (ints/strings)."""
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


class Stream:
    """A named random stream. ``Stream(seed).child(3).child(7)`` is reproducible."""

    __slots__ = ("key",)

    def __init__(self, seed: int = 0, *, _key: int | None = None):
        if _key is None:
            # fold a (possibly 128-bit) seed into 64 bits through the mixer
            lo, hi = seed & MASK64, (seed >> 64) & MASK64
            _key = int(mix64(np.array([lo ^ int(mix64(np.array([hi], dtype=np.uint64))[0])],
                                      dtype=np.uint64))[0])
        self.key = int(_key) & MASK64

    def child(self, *labels: int) -> "Stream":
        k = np.array([self.key], dtype=np.uint64)
        for lab in labels:
            k = child_keys(k, lab)
        return Stream(_key=int(k[0]))

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return draw_uniform(np.uint64(self.key), np.arange(start, start + count))

    def uniform(self, counter: int = 0) -> float:
        return float(draw_uniform(np.array([self.key], dtype=np.uint64), counter)[0])

    def __eq__(self, other):
        return isinstance(other, Stream) and other.key == self.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Stream(key=0x{self.key:016x})"


def trial_seed(master_seed: int, experiment: str, n: int, trial: int) -> int:
    """Per-trial 128-bit seed; independent of how trials are scheduled."""
    return seed_digest(int(master_seed), str(experiment), int(n), int(trial))


def trial_keys(master_seed: int, experiment: str, n: int, trials, start: int = 0) -> np.ndarray:
    """Stream keys of trials ``start .. start + trials - 1``."""
    return np.array([Stream(trial_seed(master_seed, experiment, n, t)).key
                     for t in range(start, start + trials)], dtype=np.uint64)
