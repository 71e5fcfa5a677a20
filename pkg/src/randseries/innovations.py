"""Independent symmetric unit-variance innovations and sign patterns.

Randomness is keyed by ``(seed, stream)``: every stream gets its own
``numpy.random.Generator`` derived through ``SeedSequence`` spawn keys, so
streams are statistically independent and a fixed key reproduces the same
draws bit for bit (within one numpy build).
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int

DISTRIBUTIONS = ("rademacher", "gaussian", "uniform")
EMBEDDINGS = ("scalar", "axis-cycling", "isotropic")

DEFAULT_ENUM_CAP = 20
MAX_ENUM_CAP = 24

# Replica r draws from stream r // REPLICA_BLOCK; fixed so results never depend
# on how blocks are scheduled.
REPLICA_BLOCK = 2048

_SQRT3 = math.sqrt(3.0)


class EnumerationCapError(ValueError):
    """Raised when exhaustive enumeration is requested beyond the cap."""


@dataclass(frozen=True)
class InnovationSpec:
    """Distribution and Hilbert-space embedding of the innovations ``Z_n``.

    ``scalar`` needs ``dim == 1``.  ``axis-cycling`` puts the scalar draw on
    coordinate ``((n - 1) mod dim) + 1``; ``isotropic`` draws every coordinate
    independently with variance ``1 / dim``.  Each embedding has
    ``E ||Z_n||^2 = 1``.
    """

    distribution: str = "gaussian"
    dim: int = 1
    embedding: str = "scalar"

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.embedding not in EMBEDDINGS:
            raise ValueError(f"embedding must be one of {EMBEDDINGS}")
        check_positive_int(self.dim, "dim")
        if self.embedding == "scalar" and self.dim != 1:
            raise ValueError("scalar embedding requires dim == 1")

    @property
    def is_scalar(self):
        return self.dim == 1

    @property
    def is_rademacher_scalar(self):
        return self.distribution == "rademacher" and self.dim == 1


@dataclass(frozen=True)
class SignPattern:
    """Deterministic signs ``eps_n`` in {-1, +1}."""

    signs: tuple

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be exactly +1 or -1")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_rule(cls, rule, N):
        return cls(tuple(rule(n) for n in range(1, N + 1)))

    def as_array(self, N):
        if len(self.signs) < N:
            raise ValueError(f"sign pattern has {len(self.signs)} entries, need {N}")
        return np.array(self.signs[:N], dtype=np.float64)


def generator(seed, stream=0):
    """Independent generator for ``(seed, stream)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def _draw_scalar(rng, distribution, shape):
    if distribution == "rademacher":
        return 2.0 * rng.integers(0, 2, size=shape).astype(np.float64) - 1.0
    if distribution == "gaussian":
        return rng.standard_normal(shape)
    return rng.uniform(-_SQRT3, _SQRT3, size=shape)


def _embed(spec, xi, first_index=1):
    # xi has shape (..., N) for scalar / axis-cycling and (..., N, d) for isotropic
    if spec.embedding == "scalar":
        return xi[..., None]
    if spec.embedding == "isotropic":
        return xi / math.sqrt(spec.dim)
    N = xi.shape[-1]
    out = np.zeros(xi.shape + (spec.dim,))
    axes = (np.arange(first_index, first_index + N) - 1) % spec.dim
    out[..., np.arange(N), axes] = xi
    return out


def sample_block(spec, N, count, seed, stream):
    """``count`` independent innovation paths of length ``N`` from one stream.

    Returns an array of shape ``(count, N, dim)``.
    """
    rng = generator(seed, stream)
    shape = (count, N, spec.dim) if spec.embedding == "isotropic" else (count, N)
    return _embed(spec, _draw_scalar(rng, spec.distribution, shape))


def sample_innovations(spec, N, seed, stream=0):
    """One innovation path ``Z_1..Z_N`` as an ``(N, dim)`` array.

    Deterministic in ``(seed, stream)``; distinct streams are independent.
    """
    N = check_positive_int(N, "N")
    return sample_block(spec, N, 1, seed, stream)[0]


def replica_blocks(replicas):
    """Deterministic replica-to-stream map: ``(stream, start, count)`` triples."""
    return [(b, start, min(REPLICA_BLOCK, replicas - start))
            for b, start in enumerate(range(0, replicas, REPLICA_BLOCK))]


def run_replicas(fn, spec, N, replicas, seed, threads=1):
    """Evaluate ``fn`` on every replica's innovations and return the stacked results.

    ``fn`` maps a ``(count, N, dim)`` innovation block to an array whose first
    axis indexes replicas.  Output is identical for any ``threads``.
    """
    replicas = check_positive_int(replicas, "replicas")
    blocks = replica_blocks(replicas)

    def work(block):
        stream, _, count = block
        return np.asarray(fn(sample_block(spec, N, count, seed, stream)))

    if threads and threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    return np.concatenate(parts, axis=0)


def enumeration_cap():
    """Current cap: ``HSL_ENUM_CAP`` if set (at most 24), else 20."""
    raw = os.environ.get("HSL_ENUM_CAP")
    if raw is None:
        return DEFAULT_ENUM_CAP
    cap = int(raw)
    if not 1 <= cap <= MAX_ENUM_CAP:
        raise ValueError(f"HSL_ENUM_CAP must lie in [1, {MAX_ENUM_CAP}], got {cap}")
    return cap


def _check_cap(N, cap):
    cap = enumeration_cap() if cap is None else min(int(cap), MAX_ENUM_CAP)
    if N > cap:
        raise EnumerationCapError(
            f"exhaustive enumeration of 2^{N} outcomes refused: cap is {cap}")


def enumerate_rademacher(N, cap=None):
    """Stream every sign tuple in ``{+1, -1}^N`` exactly once, ``+1`` first."""
    N = check_positive_int(N, "N")
    _check_cap(N, cap)
    return itertools.product((1, -1), repeat=N)


def rademacher_chunks(N, cap=None, chunk_bits=16):
    """All ``2^N`` sign tuples as float arrays of at most ``2^chunk_bits`` rows.

    Row order matches :func:`enumerate_rademacher`.
    """
    N = check_positive_int(N, "N")
    _check_cap(N, cap)
    total = 1 << N
    step = 1 << min(chunk_bits, N)
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, step):
        idx = np.arange(start, start + step, dtype=np.int64)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        yield 1.0 - 2.0 * bits


def exact_innovation_chunks(spec, N, cap=None):
    """Equiprobable innovation outcomes for exhaustive expectation, chunked.

    Supported for Rademacher draws with ``scalar`` or ``axis-cycling``
    embedding; yields ``(count, N, dim)`` arrays covering all ``2^N`` outcomes.
    """
    if spec is None:
        spec = InnovationSpec("rademacher")
    if spec.distribution != "rademacher" or spec.embedding == "isotropic":
        raise ValueError("exact enumeration needs Rademacher innovations with "
                         "scalar or axis-cycling embedding")
    for signs in rademacher_chunks(N, cap):
        yield _embed(spec, signs)
