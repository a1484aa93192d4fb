"""Symmetric concave functions on the probability simplex.

Every quantity in this package is indexed by one such function ``f`` with
``f(1, 0, ..., 0) = 0``.  The three built-ins are ``shannon`` (entropy, base
2), ``l1`` (``sum_{i!=j} sqrt(p_i p_j)``) and ``concurrence``
(``sqrt(2 (1 - sum_i p_i^2))``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class SimplexFunction:
    """A candidate member of the admissible function class.

    ``fn`` maps arrays of shape ``(..., n)`` of simplex points to values of
    shape ``(...,)`` when ``vectorized``; otherwise it is called point by
    point.  ``max_value(n)`` is the value at the uniform vector, which is the
    global maximum for symmetric concave functions.  ``weighted_fn``, when
    present, computes ``p * f(q / p)`` directly from an unnormalized
    nonnegative vector ``q`` with total ``p`` (the roof optimizer's hot path);
    it must return 0 for ``q = 0``.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    max_value: Callable[[int], float]
    vectorized: bool = True
    weighted_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = None

    def __call__(self, p) -> float:
        return float(self.fn(np.asarray(p, dtype=float)))

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.vectorized:
            return np.asarray(self.fn(pts), dtype=float)
        flat = pts.reshape(-1, pts.shape[-1])
        out = np.array([float(self.fn(row)) for row in flat])
        return out.reshape(pts.shape[:-1])


def _shannon(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > 0.0, p, 1.0)
    return -(p * np.log2(safe)).sum(axis=-1)


def _l1(p: np.ndarray) -> np.ndarray:
    root = np.sqrt(np.clip(p, 0.0, None)).sum(axis=-1)
    return root**2 - 1.0


def _concurrence(p: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(2.0 * (1.0 - (p**2).sum(axis=-1)), 0.0, None))


def _shannon_weighted(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    safe = np.where(q > 0.0, q, 1.0)
    return -(q * np.log2(safe)).sum(axis=-1) + p * np.log2(np.maximum(p, 1e-300))


def _l1_weighted(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(q, 0.0, None)).sum(axis=-1) ** 2 - p


def _concurrence_weighted(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(2.0 * (p**2 - (q**2).sum(axis=-1)), 0.0, None))


SHANNON = SimplexFunction(
    "shannon", _shannon, lambda n: float(np.log2(n)), weighted_fn=_shannon_weighted
)
L1 = SimplexFunction(
    "l1", _l1, lambda n: float(n - 1), weighted_fn=_l1_weighted
)
CONCURRENCE = SimplexFunction(
    "concurrence",
    _concurrence,
    lambda n: float(np.sqrt(2.0 * (1.0 - 1.0 / n))),
    weighted_fn=_concurrence_weighted,
)

BUILTINS = {f.name: f for f in (SHANNON, L1, CONCURRENCE)}


def get(name: str) -> SimplexFunction:
    try:
        return BUILTINS[name]
    except KeyError:
        raise KeyError(
            f"unknown simplex function {name!r}; built-ins: {sorted(BUILTINS)}"
        ) from None


@dataclass(frozen=True)
class MembershipReport:
    """Worst residuals from randomized admissibility checks."""

    name: str
    dim: int
    trials: int
    symmetry_residual: float
    concavity_violation: float
    origin_value: float
    uniform_value: float

    @property
    def passed(self) -> bool:
        # The identically-zero function is excluded from the class, hence the
        # nonzero requirement on the value at the uniform vector.
        return (
            self.symmetry_residual <= MEMBERSHIP_TOL
            and self.concavity_violation <= MEMBERSHIP_TOL
            and abs(self.origin_value) <= MEMBERSHIP_TOL
            and self.uniform_value > MEMBERSHIP_TOL
        )


def check_membership(
    f: SimplexFunction, dim: int, trials: int = 1000, seed: int = 0
) -> MembershipReport:
    """Spot-test symmetry, concavity and the vanishing-vertex condition.

    Samples ``trials`` uniform simplex points, random permutations and random
    convex combinations; the report passes when every residual is at most
    ``MEMBERSHIP_TOL`` and the function is not identically zero.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    pts = rng.dirichlet(np.ones(dim), size=trials)
    vals = f.eval_many(pts)

    perms = np.argsort(rng.random((trials, dim)), axis=-1)
    perm_vals = f.eval_many(np.take_along_axis(pts, perms, axis=-1))
    symmetry = float(np.abs(vals - perm_vals).max())

    other = rng.dirichlet(np.ones(dim), size=trials)
    t = rng.random((trials, 1))
    mixed = f.eval_many(t * pts + (1.0 - t) * other)
    chord = t[:, 0] * vals + (1.0 - t[:, 0]) * f.eval_many(other)
    concavity = float(np.clip(chord - mixed, 0.0, None).max())

    e1 = np.zeros(dim)
    e1[0] = 1.0
    return MembershipReport(
        name=f.name,
        dim=dim,
        trials=trials,
        symmetry_residual=symmetry,
        concavity_violation=concavity,
        origin_value=float(f(e1)),
        uniform_value=float(f(np.full(dim, 1.0 / dim))),
    )
