"""The named coherence and entanglement quantities.

For a simplex function ``f`` the pure-state measures are ``f`` of the
coherence vector (coherence) or of the squared Schmidt vector
(entanglement).  Mixed-state extensions are the convex roof (minimum
ensemble average) and the assistance value (maximum ensemble average),
both delegated to the roof solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .roofs import Budget, Direction, RoofProblem, RoofResult, solve_roof
from .simplexfn import BUILTINS, SimplexFunction, check_membership
from .states import (
    BipartiteState,
    DensityMatrix,
    Ensemble,
    PureState,
    ValidationError,
    coherence_vector,
    pure_density,
    reduced_a,
    schmidt,
    support_decomposition,
    validate_density,
)

SCHMIDT_PATTERN_TOL = 1e-10

# ids understood by the compiled pair-search kernels
_KERNEL_F_IDS = {"shannon": 0, "l1": 1, "concurrence": 2}


def _builtin_id(f: SimplexFunction):
    fid = _KERNEL_F_IDS.get(f.name)
    if fid is not None and BUILTINS.get(f.name) is f:
        return fid
    return None


class Flavor(Enum):
    COHERENCE = "coherence"
    ENTANGLEMENT = "entanglement"


class Extension(Enum):
    PURE = "pure"
    CONVEX_ROOF = "convex"
    ASSISTANCE = "assist"


@dataclass(frozen=True)
class MeasureSpec:
    """A fully specified quantity: one admissible ``f``, flavor, extension."""

    f: SimplexFunction
    flavor: Flavor
    extension: Extension

    def __post_init__(self):
        report = check_membership(self.f, dim=4, trials=256, seed=0)
        if not report.passed:
            raise ValidationError(
                f"simplex function {self.f.name!r} failed admissibility: "
                f"symmetry={report.symmetry_residual:.2e} "
                f"concavity={report.concavity_violation:.2e} "
                f"origin={report.origin_value:.2e} "
                f"uniform={report.uniform_value:.2e}"
            )


class CoherenceObjective:
    """``f`` of the squared amplitude magnitudes of a pure state."""

    def __init__(self, f: SimplexFunction):
        self.f = f

    def __call__(self, amp) -> float:
        return float(self.batch(np.asarray(amp, dtype=complex)[None, :])[0])

    def batch(self, amps: np.ndarray) -> np.ndarray:
        mu = np.abs(amps) ** 2
        mu = mu / mu.sum(axis=-1, keepdims=True)
        return self.f.eval_many(mu)

    def weighted(self, rows: np.ndarray) -> np.ndarray:
        """``||w||^2 f(mu(w/||w||))`` per unnormalized row; 0 for zero rows."""
        q = rows.real**2 + rows.imag**2
        p = q.sum(axis=-1)
        if self.f.weighted_fn is not None:
            return self.f.weighted_fn(q, p)
        safe = np.maximum(p, 1e-300)
        vals = p * self.f.eval_many(q / safe[..., None])
        return np.where(p > 1e-30, vals, 0.0)

    @property
    def kernel_spec(self):
        fid = _builtin_id(self.f)
        if fid is None:
            return None
        return (0, fid, 0, 0)


def _gram_eigs_2(g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of 2x2 Hermitian PSD matrices, closed form."""
    tr = (g[..., 0, 0] + g[..., 1, 1]).real
    det = (g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]).real
    disc = np.sqrt(np.clip(tr**2 - 4.0 * det, 0.0, None))
    return np.stack([(tr + disc) / 2.0, (tr - disc) / 2.0], axis=-1)


def _gram_eigs_3(g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of 3x3 Hermitian PSD matrices via the
    trigonometric solution of the characteristic cubic."""
    a00, a11, a22 = g[..., 0, 0].real, g[..., 1, 1].real, g[..., 2, 2].real
    off = (
        np.abs(g[..., 0, 1]) ** 2
        + np.abs(g[..., 0, 2]) ** 2
        + np.abs(g[..., 1, 2]) ** 2
    )
    q = (a00 + a11 + a22) / 3.0
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * off
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    b = (g - q[..., None, None] * np.eye(3)) / np.maximum(p, 1e-300)[..., None, None]
    detb = (
        b[..., 0, 0] * (b[..., 1, 1] * b[..., 2, 2] - b[..., 1, 2] * b[..., 2, 1])
        - b[..., 0, 1] * (b[..., 1, 0] * b[..., 2, 2] - b[..., 1, 2] * b[..., 2, 0])
        + b[..., 0, 2] * (b[..., 1, 0] * b[..., 2, 1] - b[..., 1, 1] * b[..., 2, 0])
    ).real
    phi = np.arccos(np.clip(detb / 2.0, -1.0, 1.0)) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    return np.stack([hi, mid, lo], axis=-1)


class EntanglementObjective:
    """``f`` of the squared Schmidt coefficients of a bipartite pure state.

    Unequal local dimensions are handled by zero-padding the Schmidt vector
    to ``max(dim_a, dim_b)``; the padding is immaterial by symmetry of ``f``.
    """

    def __init__(self, f: SimplexFunction, dim_a: int, dim_b: int):
        self.f = f
        self.dim_a = dim_a
        self.dim_b = dim_b

    def __call__(self, amp) -> float:
        return float(self.batch(np.asarray(amp, dtype=complex)[None, :])[0])

    def _squared_singulars(self, amps: np.ndarray) -> np.ndarray:
        m = amps.reshape(amps.shape[:-1] + (self.dim_a, self.dim_b))
        k = min(self.dim_a, self.dim_b)
        # Work with the Gram matrix on the smaller side; sizes 2 and 3 have
        # closed-form spectra, which keeps the optimizer loop off LAPACK.
        if k <= 3:
            if self.dim_a <= self.dim_b:
                gram = m @ np.swapaxes(m.conj(), -2, -1)
            else:
                gram = np.swapaxes(m.conj(), -2, -1) @ m
            if k == 1:
                lam = gram[..., 0, 0].real[..., None]
            elif k == 2:
                lam = np.clip(_gram_eigs_2(gram), 0.0, None)
            else:
                lam = np.clip(_gram_eigs_3(gram), 0.0, None)
        else:
            s = np.linalg.svd(m, compute_uv=False)
            lam = s**2
        width = max(self.dim_a, self.dim_b)
        if lam.shape[-1] < width:
            pad = np.zeros(lam.shape[:-1] + (width - lam.shape[-1],))
            lam = np.concatenate([lam, pad], axis=-1)
        return lam

    def batch(self, amps: np.ndarray) -> np.ndarray:
        lam = self._squared_singulars(amps)
        lam = lam / lam.sum(axis=-1, keepdims=True)
        return self.f.eval_many(lam)

    def weighted(self, rows: np.ndarray) -> np.ndarray:
        """``||w||^2 f(lambda(w/||w||))``; squared singular values scale with
        the squared norm, so the unnormalized spectrum feeds ``f`` directly."""
        q = self._squared_singulars(rows)
        p = q.sum(axis=-1)
        if self.f.weighted_fn is not None:
            return self.f.weighted_fn(q, p)
        safe = np.maximum(p, 1e-300)
        vals = p * self.f.eval_many(q / safe[..., None])
        return np.where(p > 1e-30, vals, 0.0)

    @property
    def kernel_spec(self):
        fid = _builtin_id(self.f)
        if fid is None or min(self.dim_a, self.dim_b) > 3:
            return None
        return (1, fid, self.dim_a, self.dim_b)


def c_pure(psi: PureState, f: SimplexFunction) -> float:
    """Pure-state coherence: ``f`` of the coherence vector."""
    return float(f(coherence_vector(psi)))


def e_pure(psi: BipartiteState, f: SimplexFunction) -> float:
    """Pure-state entanglement: ``f`` of the squared Schmidt vector."""
    lam, _, _ = schmidt(psi)
    width = max(psi.dim_a, psi.dim_b)
    padded = np.zeros(width)
    padded[: lam.size] = lam
    return float(f(padded))


def _pure_result(rho: DensityMatrix, value: float) -> RoofResult:
    evals, evecs = support_decomposition(rho)
    witness = Ensemble(target=rho, members=((1.0, PureState(evecs[:, 0])),))
    return RoofResult(value, witness, value, True, 0)


def coherence(
    rho: DensityMatrix,
    f: SimplexFunction,
    extension: Extension,
    budget: Budget = Budget(),
    cardinality: Optional[int] = None,
) -> RoofResult:
    """Coherence of ``rho``: pure-state value, convex roof, or assistance.

    The assistance result carries the concavity bound ``f(diag rho)`` as its
    bracket; the convex roof carries the trivial lower bracket 0.
    """
    objective = CoherenceObjective(f)
    if extension is Extension.PURE:
        evals, evecs = support_decomposition(rho)
        if evals.size != 1:
            raise ValidationError("pure extension requires a rank-1 state")
        return _pure_result(rho, float(objective(evecs[:, 0])))
    if extension is Extension.CONVEX_ROOF:
        prob = RoofProblem(rho, objective, Direction.MIN, cardinality, budget)
        return solve_roof(prob, bracket=0.0)
    prob = RoofProblem(rho, objective, Direction.MAX, cardinality, budget)
    return solve_roof(prob, bracket=float(f(rho.diagonal())))


def entanglement(
    rho: BipartiteState,
    f: SimplexFunction,
    extension: Extension,
    budget: Budget = Budget(),
    cardinality: Optional[int] = None,
) -> RoofResult:
    """Entanglement of a bipartite state under the chosen extension.

    For the assistance extension with the concurrence-type ``f`` the bracket
    is ``sqrt(2 (1 - tr rho_A^2))``; no analytic bracket is attached for the
    other built-ins.
    """
    objective = EntanglementObjective(f, rho.dim_a, rho.dim_b)
    if extension is Extension.PURE:
        if not rho.is_pure:
            raise ValidationError("pure extension requires a pure bipartite state")
        return _pure_result(pure_density(rho.value), e_pure(rho, f))
    dense = pure_density(rho.value) if rho.is_pure else rho.value
    if extension is Extension.CONVEX_ROOF:
        prob = RoofProblem(dense, objective, Direction.MIN, cardinality, budget)
        return solve_roof(prob, bracket=0.0)
    bracket = None
    if f.name == "concurrence":
        red = reduced_a(rho)
        purity = float(np.trace(red.mat @ red.mat).real)
        bracket = float(np.sqrt(max(0.0, 2.0 * (1.0 - purity))))
    prob = RoofProblem(dense, objective, Direction.MAX, cardinality, budget)
    return solve_roof(prob, bracket=bracket)


# --- Schmidt-correlated states ----------------------------------------------


@dataclass(frozen=True)
class SchmidtCorrelated:
    """Bipartite state supported on ``|ii><jj|`` with coefficient matrix ``coeff``.

    The embedding ``sum_ij coeff_ij |ii><jj|`` is a valid density matrix
    exactly when ``coeff`` itself is one.
    """

    coeff: DensityMatrix

    @property
    def dim(self) -> int:
        return self.coeff.dim

    def embedded(self) -> BipartiteState:
        n = self.dim
        mat = np.zeros((n * n, n * n), dtype=complex)
        idx = np.arange(n) * n + np.arange(n)
        mat[np.ix_(idx, idx)] = self.coeff.mat
        return BipartiteState(n, n, validate_density(mat))


def compress_mc(state: SchmidtCorrelated) -> DensityMatrix:
    """Coefficient matrix of a Schmidt-correlated state as an n-dim state."""
    return state.coeff


def embed_mc(rho: DensityMatrix) -> SchmidtCorrelated:
    """Embed an n-dim state as the Schmidt-correlated ``sum_ij rho_ij |ii><jj|``."""
    return SchmidtCorrelated(coeff=rho)


def as_schmidt_correlated(state: BipartiteState) -> Optional[SchmidtCorrelated]:
    """Recognize the Schmidt-correlated pattern; None when it does not match."""
    if state.dim_a != state.dim_b:
        return None
    n = state.dim_a
    mat = state.value.projector() if state.is_pure else state.value.mat
    idx = np.arange(n) * n + np.arange(n)
    off = np.abs(mat).copy()
    off[np.ix_(idx, idx)] = 0.0
    if off.max() > SCHMIDT_PATTERN_TOL:
        return None
    return SchmidtCorrelated(coeff=validate_density(mat[np.ix_(idx, idx)]))
