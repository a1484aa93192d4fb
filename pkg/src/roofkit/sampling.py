"""Seeded random state generation for tests and the CLI.

All randomness flows from a single 64-bit seed through named substreams, so
results are reproducible regardless of execution order.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Tuple

import numpy as np

from .measures import SchmidtCorrelated, embed_mc
from .states import DensityMatrix, Ensemble, KrausChannel, PureState, validate_density

FULL_RANK_EIG_FLOOR = 1e-3


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``label`` derived from the master seed."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    tag = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(int(seed) & 0xFFFFFFFFFFFFFFFF, tag))
    )


def ginibre(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Normalized ``G G'`` for a complex Gaussian ``dim x rank`` matrix."""
    cols = dim if rank is None else rank
    g = rng.standard_normal((dim, cols)) + 1j * rng.standard_normal((dim, cols))
    mat = g @ g.conj().T
    return validate_density(mat / mat.trace().real)


def ginibre_full_rank(
    dim: int, rng: np.random.Generator, eig_floor: float = FULL_RANK_EIG_FLOOR
) -> DensityMatrix:
    """Full-rank Ginibre state, resampled until the smallest eigenvalue
    clears ``eig_floor`` (full rank at test tolerance)."""
    while True:
        state = ginibre(dim, rng)
        if np.linalg.eigvalsh(state.mat).min() >= eig_floor:
            return state


def haar_pure(dim: int, rng: np.random.Generator) -> PureState:
    amp = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(amp / np.linalg.norm(amp))


def random_schmidt_correlated(
    dim: int,
    rng: np.random.Generator,
    eig_floor: float = FULL_RANK_EIG_FLOOR,
    rank: Optional[int] = None,
) -> SchmidtCorrelated:
    if rank is not None and rank < dim:
        return embed_mc(ginibre(dim, rng, rank))
    return embed_mc(ginibre_full_rank(dim, rng, eig_floor))


def maximally_coherent_pure(dim: int, rng: np.random.Generator) -> PureState:
    phases = np.exp(2j * np.pi * rng.random(dim))
    return PureState(phases / np.sqrt(dim))


def amc_witnessed(
    dim: int, rng: np.random.Generator, count: Optional[int] = None
) -> Tuple[DensityMatrix, Ensemble]:
    """Random mixture of maximally coherent pure states, with the generating
    ensemble recorded as the witness."""
    count = count if count is not None else dim + 1
    if count < dim:
        raise ValueError(f"need at least {dim} members for a generic mixture")
    weights = rng.dirichlet(np.ones(count))
    states = [maximally_coherent_pure(dim, rng) for _ in range(count)]
    mixture = sum(w * psi.projector() for w, psi in zip(weights, states))
    target = validate_density(mixture)
    ensemble = Ensemble(
        target=target, members=tuple(zip(map(float, weights), states))
    )
    return target, ensemble


def balanced_flip_channel() -> KrausChannel:
    """Equal mixture of the identity and the qubit flip; incoherent, and the
    standard example of assistance increasing under an incoherent operation."""
    k1 = np.eye(2) / np.sqrt(2.0)
    k2 = np.array([[0.0, 1.0], [1.0, 0.0]]) / np.sqrt(2.0)
    return KrausChannel(kraus=(k1, k2))
