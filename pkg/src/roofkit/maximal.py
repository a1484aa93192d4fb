"""Construction and certification of assisted-maximal states.

A state is AMC when it is a convex mixture of maximally coherent pure states
(uniform coherence vector), AME when it mixes maximally entangled pure states
(uniform Schmidt vector).  Equal diagonals ``1/n`` are necessary for AMC and,
in dimensions 2 and 3, also sufficient; those two cases get constructive
decompositions, everything else goes through the assistance optimizer plus an
alternating-projection polish that turns a near-optimal witness into an exact
one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .measures import (
    CoherenceObjective,
    EntanglementObjective,
    as_schmidt_correlated,
    compress_mc,
)
from .roofs import Budget, Direction, RoofProblem, haar_isometry, solve_roof
from .simplexfn import SHANNON
from .states import (
    BipartiteState,
    DensityMatrix,
    DimensionMismatch,
    Ensemble,
    PureState,
    ValidationError,
    ensemble_from_rows,
    state_to_dict,
    support_decomposition,
    validate_density,
    HERMITICITY_TOL,
)

DIAGONAL_TOL = 1e-9
WITNESS_UNIFORMITY_TOL = 1e-7
VALUE_MAXIMALITY_TOL = 1e-6
_POLISH_ITERS = 600
_POLISH_TARGET = 1e-12
_EXTRA_POLISH_STARTS = 12


class InvalidCorrelation(ValidationError):
    pass


class PreconditionFailed(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


@dataclass(frozen=True)
class CorrelationMatrix:
    """Hermitian PSD matrix with unit diagonal."""

    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidCorrelation(f"expected a square matrix, got shape {arr.shape}")
        herm = np.abs(arr - arr.conj().T).max()
        if herm > HERMITICITY_TOL:
            raise InvalidCorrelation(f"not Hermitian: residual {herm:.3e}")
        diag = np.abs(arr.diagonal() - 1.0).max()
        if diag > DIAGONAL_TOL:
            raise InvalidCorrelation(f"diagonal deviates from 1 by {diag:.3e}")
        low = np.linalg.eigvalsh(arr).min()
        if low < -DIAGONAL_TOL:
            raise InvalidCorrelation(f"smallest eigenvalue {low:.3e}")
        out = np.array(arr)
        out.setflags(write=False)
        object.__setattr__(self, "mat", out)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


class Verdict(Enum):
    AMC = "AMC"
    NOT_AMC = "NotAMC"
    AME = "AME"
    NOT_AME = "NotAME"
    INCONCLUSIVE = "Inconclusive"


class Reason(Enum):
    DIAGONAL_TEST = "DiagonalTest"
    CONSTRUCTIVE = "ConstructiveDecomposition"
    NUMERICAL = "NumericalSearch"


@dataclass(frozen=True)
class Certificate:
    verdict: Verdict
    reason: Reason
    witness: Optional[Ensemble]
    residual: float

    @property
    def positive(self) -> bool:
        return self.verdict in (Verdict.AMC, Verdict.AME)

    def to_dict(self) -> dict:
        payload = {
            "verdict": self.verdict.value,
            "reason": self.reason.value,
            "residual": self.residual,
            "witness": None,
        }
        if self.witness is not None:
            payload["witness"] = [
                {"weight": w, "state": state_to_dict(psi)}
                for w, psi in self.witness.members
            ]
        return payload


def fourier_ensemble(n: int) -> Ensemble:
    """Equal mixture of the n mutually orthogonal uniform-modulus states
    ``(1/sqrt(n)) sum_j exp(2 pi i k j / n) |j>``; reconstructs ``I/n``."""
    if n < 2:
        raise ValueError("need dimension at least 2")
    j = np.arange(n)
    members = []
    for k in range(n):
        amp = np.exp(2j * np.pi * k * j / n) / np.sqrt(n)
        members.append((1.0 / n, PureState(amp)))
    target = validate_density(np.eye(n) / n)
    return Ensemble(target=target, members=tuple(members))


def _rank1_correlation(alpha: float) -> CorrelationMatrix:
    return CorrelationMatrix(
        np.array([[1.0, np.exp(1j * alpha)], [np.exp(-1j * alpha), 1.0]])
    )


def decompose_correlation_2(
    corr: CorrelationMatrix,
) -> List[Tuple[float, CorrelationMatrix]]:
    """Convex decomposition of a 2x2 correlation matrix into rank-1 terms.

    With off-diagonal ``c = |c| e^{i phi}`` the three terms are
    ``(|c|, R(phi))`` and ``((1-|c|)/2, R(0)), ((1-|c|)/2, R(pi))`` where
    ``R(alpha)`` has off-diagonal ``e^{i alpha}``.  Zero weights are dropped.
    """
    if corr.dim != 2:
        raise InvalidCorrelation(f"expected dimension 2, got {corr.dim}")
    c = complex(corr.mat[0, 1])
    mag = min(abs(c), 1.0)
    phi = float(np.angle(c)) if mag > 0 else 0.0
    terms = [
        (mag, _rank1_correlation(phi)),
        ((1.0 - mag) / 2.0, _rank1_correlation(0.0)),
        ((1.0 - mag) / 2.0, _rank1_correlation(np.pi)),
    ]
    return [(w, r) for w, r in terms if w > 1e-15]


_SIGN_PATTERNS = np.array(
    [[1, 1, 1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=float
)


def decompose_3dim_real(rho: DensityMatrix) -> Optional[Ensemble]:
    """Four-member maximally coherent decomposition of a real qutrit state
    with diagonal ``1/3``.

    The weights are affine in the off-diagonals scaled to correlation form
    (``c_ij = 3 rho_ij``), paired with the four sign-pattern states
    ``(+-1, +-1, +-1)/sqrt(3)``; the pairing below reproduces the input
    identically in the off-diagonals.  Returns None when a weight is negative
    (the affine formulas do not cover every real correlation matrix).
    """
    if rho.dim != 3:
        raise PreconditionFailed(f"expected dimension 3, got {rho.dim}")
    if np.abs(rho.mat.imag).max() > DIAGONAL_TOL:
        raise PreconditionFailed(
            f"entries must be real; max imaginary part {np.abs(rho.mat.imag).max():.3e}"
        )
    diag_dev = np.abs(rho.mat.diagonal().real - 1.0 / 3.0).max()
    if diag_dev > DIAGONAL_TOL:
        raise PreconditionFailed(f"diagonal deviates from 1/3 by {diag_dev:.3e}")
    c12, c13, c23 = (
        3.0 * rho.mat[0, 1].real,
        3.0 * rho.mat[0, 2].real,
        3.0 * rho.mat[1, 2].real,
    )
    weights = np.array(
        [
            1.0 + c12 + c13 + c23,
            1.0 - c12 - c13 + c23,
            1.0 - c12 + c13 - c23,
            1.0 + c12 - c13 - c23,
        ]
    ) / 4.0
    if weights.min() < -1e-12:
        return None
    weights = np.clip(weights, 0.0, None)
    members = tuple(
        (float(w), PureState(pattern / np.sqrt(3.0)))
        for w, pattern in zip(weights, _SIGN_PATTERNS)
        if w > 1e-15
    )
    return Ensemble(target=rho, members=members)


# --- numerical certification ------------------------------------------------


def _flatten_coherent(rows: np.ndarray) -> np.ndarray:
    """Project each row onto the cone of maximally coherent rays (same norm)."""
    n = rows.shape[1]
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    mags = np.abs(rows)
    with np.errstate(invalid="ignore", divide="ignore"):
        phases = np.where(mags > 0, rows / mags, 1.0)
    return np.where(norms > 1e-12, norms * phases / np.sqrt(n), 0.0)


def _flatten_entangled(dim_a: int, dim_b: int):
    def flatten(rows: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rows)
        n = min(dim_a, dim_b)
        for k, row in enumerate(rows):
            norm = np.linalg.norm(row)
            if norm <= 1e-12:
                continue
            u, _, vh = np.linalg.svd(row.reshape(dim_a, dim_b))
            flat = (u[:, :n] / np.sqrt(n)) @ vh[:n, :]
            out[k] = norm * flat.reshape(-1)
        return out

    return flatten


def _uniformity_residual(rows: np.ndarray, spectrum) -> float:
    worst = 0.0
    for row in rows:
        p = float(np.vdot(row, row).real)
        if p < 1e-14:
            continue
        lam = spectrum(row / np.sqrt(p))
        worst = max(worst, float(np.abs(lam - 1.0 / lam.size).max()))
    return worst


def _polish_rows(rho: DensityMatrix, rows: np.ndarray, flatten, spectrum):
    """Alternate between exact decompositions of ``rho`` and flat members.

    One half-step projects every member to the nearest maximally
    coherent/entangled ray; the other re-fits the closest exact decomposition
    (a Procrustes polar factor on the isometry parametrization).  Returns the
    refitted rows and their uniformity residual.
    """
    evals, evecs = support_decomposition(rho)
    amps = (evecs * np.sqrt(evals)).T  # (r, n)
    a_conj = amps.conj().T  # (n, r)
    w = rows
    best_resid = np.inf
    stall = 0
    for _ in range(_POLISH_ITERS):
        target = flatten(w)
        u, _, vh = np.linalg.svd(target @ a_conj, full_matrices=False)
        w = (u @ vh) @ amps
        resid = _uniformity_residual(w, spectrum)
        if resid < _POLISH_TARGET:
            break
        if resid > best_resid * 0.999:
            stall += 1
            if stall > 25:
                break
        else:
            stall = 0
        best_resid = min(best_resid, resid)
    return w, _uniformity_residual(w, spectrum)


def _numerical_certificate(
    rho: DensityMatrix,
    budget: Budget,
    objective,
    flatten,
    spectrum,
    positive: Verdict,
) -> Certificate:
    prob = RoofProblem(rho, objective, Direction.MAX, None, budget)
    result = solve_roof(prob)
    rows = np.stack(
        [np.sqrt(wgt) * psi.amp for wgt, psi in result.witness.members]
    )
    polished, resid = _polish_rows(rho, rows, flatten, spectrum)

    if resid > WITNESS_UNIFORMITY_TOL:
        # Retry the cheap polish from fresh random decompositions before
        # giving up; the sweep optimizer may have stopped in a poor basin.
        evals, evecs = support_decomposition(rho)
        amps = (evecs * np.sqrt(evals)).T
        m = rows.shape[0]
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(int(budget.seed) & 0xFFFFFFFFFFFFFFFF, 0x9E37))
        )
        for _ in range(_EXTRA_POLISH_STARTS):
            cand, cand_resid = _polish_rows(
                rho, haar_isometry(rng, m, evals.size) @ amps, flatten, spectrum
            )
            if cand_resid < resid:
                polished, resid = cand, cand_resid
            if resid <= WITNESS_UNIFORMITY_TOL:
                break

    if resid <= WITNESS_UNIFORMITY_TOL:
        witness = ensemble_from_rows(rho, polished)
        return Certificate(positive, Reason.NUMERICAL, witness, resid)
    return Certificate(Verdict.INCONCLUSIVE, Reason.NUMERICAL, None, resid)


def certify_amc(rho: DensityMatrix, budget: Budget = Budget()) -> Certificate:
    """Decide whether ``rho`` is a mixture of maximally coherent pure states.

    Diagonals different from ``1/n`` refute immediately.  Dimension 2 and
    real dimension 3 get exact constructive witnesses; all other cases run
    the assistance optimizer and polish its witness.  A failed search yields
    Inconclusive (for dimension at least 4 the diagonal condition is only
    necessary, so no refutation is implied).
    """
    n = rho.dim
    diag_dev = float(np.abs(rho.diagonal() - 1.0 / n).max())
    if diag_dev > DIAGONAL_TOL:
        return Certificate(Verdict.NOT_AMC, Reason.DIAGONAL_TEST, None, diag_dev)

    if n == 2:
        corr = CorrelationMatrix(rho.mat * 2.0)
        members = []
        for w, term in decompose_correlation_2(corr):
            alpha = float(np.angle(term.mat[0, 1]))
            amp = np.array([1.0, np.exp(-1j * alpha)]) / np.sqrt(2.0)
            members.append((w, PureState(amp)))
        witness = Ensemble(target=rho, members=tuple(members))
        resid = _uniformity_residual(
            np.stack([np.sqrt(w) * psi.amp for w, psi in members]),
            lambda amp: np.abs(amp) ** 2,
        )
        return Certificate(Verdict.AMC, Reason.CONSTRUCTIVE, witness, resid)

    if n == 3 and np.abs(rho.mat.imag).max() <= DIAGONAL_TOL:
        witness = decompose_3dim_real(rho)
        if witness is not None:
            resid = _uniformity_residual(
                np.stack([np.sqrt(w) * psi.amp for w, psi in witness.members]),
                lambda amp: np.abs(amp) ** 2,
            )
            return Certificate(Verdict.AMC, Reason.CONSTRUCTIVE, witness, resid)

    return _numerical_certificate(
        rho,
        budget,
        CoherenceObjective(SHANNON),
        _flatten_coherent,
        lambda amp: np.abs(amp) ** 2,
        Verdict.AMC,
    )


def generalized_bell(n: int, s: int, t: int) -> BipartiteState:
    """Maximally entangled basis state indexed by shift ``t`` and phase ``s``."""
    if not (0 <= s <= n - 1 and 0 <= t <= n - 1):
        raise IndexOutOfRange(f"need 0 <= s, t <= {n - 1}, got ({s}, {t})")
    omega = np.exp(-2j * np.pi / n)
    g = np.diag(omega ** np.arange(n))
    h = np.zeros((n, n), dtype=complex)
    h[(np.arange(n) + 1) % n, np.arange(n)] = 1.0
    u = np.linalg.matrix_power(h, t) @ np.linalg.matrix_power(g, s)
    amp = (u.conj().T / np.sqrt(n)).reshape(-1)
    return BipartiteState(n, n, PureState(amp))


def certify_ame(state: BipartiteState, budget: Budget = Budget()) -> Certificate:
    """Decide whether a bipartite state mixes maximally entangled pure states.

    Schmidt-correlated states reduce to the coherence problem on their
    coefficient matrix, with the witness lifted back member by member;
    everything else runs the assistance optimizer with polish.
    """
    if state.dim_a != state.dim_b:
        raise DimensionMismatch(
            f"need equal local dimensions, got {state.dim_a} x {state.dim_b}"
        )
    n = state.dim_a
    sc = as_schmidt_correlated(state)
    if sc is not None:
        inner = certify_amc(compress_mc(sc), budget)
        verdict = {
            Verdict.AMC: Verdict.AME,
            Verdict.NOT_AMC: Verdict.NOT_AME,
            Verdict.INCONCLUSIVE: Verdict.INCONCLUSIVE,
        }[inner.verdict]
        witness = None
        if inner.witness is not None:
            target = sc.embedded()
            lifted = []
            for w, psi in inner.witness.members:
                amp = np.zeros(n * n, dtype=complex)
                amp[np.arange(n) * n + np.arange(n)] = psi.amp
                lifted.append((w, PureState(amp)))
            witness = Ensemble(target=target.value, members=tuple(lifted))
        return Certificate(verdict, inner.reason, witness, inner.residual)

    dense = state.value.projector() if state.is_pure else state.value.mat
    rho = validate_density(dense)
    objective = EntanglementObjective(SHANNON, n, n)

    def spectrum(amp):
        s = np.linalg.svd(amp.reshape(n, n), compute_uv=False)
        return s**2

    return _numerical_certificate(
        rho,
        budget,
        objective,
        _flatten_entangled(n, n),
        spectrum,
        Verdict.AME,
    )
