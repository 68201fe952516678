"""Constant-size graph sketches from signed string hashes.

A hash family holds ``sketch_bits`` independent functions mapping a chunk
to +1 or -1. Each function is a multilinear form over random 64-bit
coefficients: for a chunk ``c`` of length n, coefficient 0 plus the sum of
coefficient i+1 times the ASCII code of character i, all in wrapping
64-bit arithmetic, reduced mod 2 and mapped to {-1, +1}. Wrapping is
exact here because 2**64 is even, so the parity of the wrapped sum equals
the parity of the true sum.

A graph's projection vector accumulates, per function, the signed count
of chunks hashed so far; its sketch is the sign pattern of the projection
with sign(0) = +1. Projections are additive, so the sketch of a union of
graphs is the sign of the sum of their projections.

Coefficients are drawn from numpy's seeded default generator (PCG64),
which is a fixed, portable algorithm: a family is fully determined by
``(sketch_bits, max_chunk_len, seed)``.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping

import numpy as np

from .shingles import ChunkDelta

# Hash-value cache entries kept per family before the cache is reset.
_CACHE_LIMIT = 1 << 18


class HashFamily:
    """Immutable family of ±1-valued chunk hash functions."""

    __slots__ = ("coefficients", "sketch_bits", "max_chunk_len", "seed", "_cache")

    def __init__(self, coefficients: np.ndarray, seed: int):
        if coefficients.ndim != 2 or coefficients.shape[1] < 2:
            raise ValueError("coefficient table must be L x (max_chunk_len + 1)")
        self.coefficients = np.ascontiguousarray(coefficients, dtype=np.uint64)
        self.sketch_bits = int(coefficients.shape[0])
        self.max_chunk_len = int(coefficients.shape[1]) - 1
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    @classmethod
    def generate(cls, sketch_bits: int, max_chunk_len: int, seed: int) -> "HashFamily":
        if sketch_bits < 1:
            raise ValueError("sketch_bits must be at least 1")
        if max_chunk_len < 1:
            raise ValueError("max_chunk_len must be at least 1")
        rng = np.random.default_rng(seed)
        table = rng.integers(
            0, 2**64, size=(sketch_bits, max_chunk_len + 1), dtype=np.uint64
        )
        return cls(table, seed)

    def hash_chunk(self, function_index: int, chunk: str) -> int:
        """Evaluate one function on one chunk; reference scalar path."""
        if len(chunk) > self.max_chunk_len:
            raise ValueError(
                f"chunk of length {len(chunk)} exceeds max_chunk_len {self.max_chunk_len}"
            )
        if not chunk:
            raise ValueError("chunk must not be empty")
        row = self.coefficients[function_index]
        total = int(row[0])
        for i, char in enumerate(chunk):
            total += int(row[i + 1]) * ord(char)
        return 2 * (total % 2) - 1

    def hash_values(self, chunk: str) -> np.ndarray:
        """±1 values of every function on ``chunk`` (int8, cached, read-only)."""
        values = self._cache.get(chunk)
        if values is None:
            n = len(chunk)
            if n > self.max_chunk_len:
                raise ValueError(
                    f"chunk of length {n} exceeds max_chunk_len {self.max_chunk_len}"
                )
            if n == 0:
                raise ValueError("chunk must not be empty")
            codes = np.frombuffer(chunk.encode("ascii"), dtype=np.uint8).astype(np.uint64)
            totals = self.coefficients[:, 0] + self.coefficients[:, 1 : n + 1] @ codes
            values = 2 * (totals & np.uint64(1)).astype(np.int8) - 1
            values.flags.writeable = False
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache.clear()
            self._cache[chunk] = values
        return values


def new_family(sketch_bits: int, max_chunk_len: int, seed: int) -> HashFamily:
    return HashFamily.generate(sketch_bits, max_chunk_len, seed)


_PLUS_ONE = np.int8(1)
_MINUS_ONE = np.int8(-1)


def sign_bits(projection: np.ndarray) -> np.ndarray:
    """±1 sign pattern of a projection, with sign(0) = +1."""
    return np.where(projection >= 0, _PLUS_ONE, _MINUS_ONE)


class SketchState:
    """A graph's projection vector plus its derived sign sketch."""

    __slots__ = ("projection", "_sketch")

    def __init__(self, projection: np.ndarray):
        self.projection = projection
        self._sketch: np.ndarray | None = None

    @property
    def sketch(self) -> np.ndarray:
        if self._sketch is None:
            self._sketch = sign_bits(self.projection)
        return self._sketch

    @property
    def sketch_bits(self) -> int:
        return int(self.projection.shape[0])

    def copy(self) -> "SketchState":
        return SketchState(self.projection.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SketchState):
            return NotImplemented
        return bool(np.array_equal(self.projection, other.projection))


def fresh_state(sketch_bits: int) -> SketchState:
    """State of an empty graph: zero projection, all-ones sketch."""
    return SketchState(np.zeros(sketch_bits, dtype=np.int64))


def apply_delta(state: SketchState, family: HashFamily, delta: ChunkDelta) -> SketchState:
    """Fold a chunk delta into the projection in place; returns ``state``."""
    projection = state.projection
    for chunk, count in delta.incoming.items():
        values = family.hash_values(chunk)
        projection += values if count == 1 else values.astype(np.int64) * count
    for chunk, count in delta.outgoing.items():
        values = family.hash_values(chunk)
        projection -= values if count == 1 else values.astype(np.int64) * count
    state._sketch = None
    return state


def batch_projection(counts: Mapping[str, int], family: HashFamily) -> SketchState:
    """Project a whole chunk-frequency vector at once; oracle for apply_delta."""
    projection = np.zeros(family.sketch_bits, dtype=np.int64)
    for chunk, count in counts.items():
        values = family.hash_values(chunk)
        projection += values if count == 1 else values.astype(np.int64) * count
    return SketchState(projection)


def merge(a: SketchState, b: SketchState) -> SketchState:
    """State of the union of two graphs: projections add."""
    if a.sketch_bits != b.sketch_bits:
        raise ValueError("cannot merge sketches of different widths")
    return SketchState(a.projection + b.projection)


def _match_fraction(xa: np.ndarray, xb: np.ndarray) -> float:
    if xa.shape != xb.shape:
        raise ValueError("sketches have different widths")
    return float(np.count_nonzero(xa == xb)) / xa.shape[0]


def estimate_cosine(xa: np.ndarray, xb: np.ndarray) -> float:
    """Cosine similarity estimated from two sign sketches.

    With match fraction f over the sketch bits, the estimate is
    cos(pi * (1 - f)): identical sketches give 1.0, half-matching ones 0.
    """
    return math.cos(math.pi * (1.0 - _match_fraction(xa, xb)))


def cosine_distance(xa: np.ndarray, xb: np.ndarray) -> float:
    """1 - estimate_cosine; the distance used for clustering and scoring."""
    return 1.0 - estimate_cosine(xa, xb)


def dump_projection(family: HashFamily, state: SketchState) -> str:
    """Debug dump: sketch width, family seed, then the projection entries."""
    lines = [str(family.sketch_bits), str(family.seed)]
    lines.extend(str(int(v)) for v in state.projection)
    return "\n".join(lines) + "\n"


def vector_sum(a: Counter, b: Counter) -> Counter:
    """Elementwise sum of two chunk-frequency vectors."""
    total = Counter(a)
    total.update(b)
    return total
