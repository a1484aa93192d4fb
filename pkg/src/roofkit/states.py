"""Core quantum-state types, validation, Schmidt machinery and Kraus channels.

The incoherent reference basis is always the computational basis of the flat
vector space.  Bipartite systems use the flat index convention
``|i>_A |j>_B -> i * dim_b + j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

# Tolerance budget (double-precision eigensolver noise): 1e-9 for matrix
# validation, 1e-8 for ensemble reconstruction, 1e-12 for vector norms.
HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9
PSD_TOL = 1e-9
PURE_NORM_TOL = 1e-12
PROB_SUM_TOL = 1e-9
ENSEMBLE_RECON_TOL = 1e-8
ISOMETRY_TOL = 1e-9
RANK_EIG_CUTOFF = 1e-10
MEMBER_WEIGHT_CUTOFF = 1e-14


class ValidationError(ValueError):
    """An input violated one of the documented invariants."""


class NotSquare(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotUnitTrace(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class NotIsometry(ValidationError):
    pass


class RankMismatch(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace complex matrix."""

    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", _frozen(np.asarray(self.mat, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def diagonal(self) -> np.ndarray:
        """Real diagonal (populations in the reference basis)."""
        return self.mat.diagonal().real.copy()


@dataclass(frozen=True)
class PureState:
    """Unit-norm complex state vector."""

    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(amp)
        if abs(nrm - 1.0) > PURE_NORM_TOL:
            raise ValidationError(
                f"pure state is not unit norm: |norm - 1| = {abs(nrm - 1.0):.3e} "
                f"exceeds {PURE_NORM_TOL}"
            )
        object.__setattr__(self, "amp", _frozen(amp))

    @property
    def dim(self) -> int:
        return self.amp.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amp, self.amp.conj())


@dataclass(frozen=True)
class BipartiteState:
    """State on A (x) B with flat index i * dim_b + j."""

    dim_a: int
    dim_b: int
    value: Union[PureState, DensityMatrix]

    def __post_init__(self):
        if self.value.dim != self.dim_a * self.dim_b:
            raise DimensionMismatch(
                f"flat dimension {self.value.dim} != dim_a * dim_b = "
                f"{self.dim_a * self.dim_b}"
            )

    @property
    def is_pure(self) -> bool:
        return isinstance(self.value, PureState)


@dataclass(frozen=True)
class Ensemble:
    """Weighted pure states whose mixture reconstructs ``target``."""

    target: DensityMatrix
    members: tuple

    def __post_init__(self):
        members = tuple((float(w), psi) for w, psi in self.members)
        weights = np.array([w for w, _ in members])
        if weights.size == 0:
            raise ValidationError("ensemble has no members")
        if np.any(weights < 0):
            raise ValidationError(f"negative ensemble weight {weights.min():.3e}")
        if abs(weights.sum() - 1.0) > PROB_SUM_TOL:
            raise ValidationError(
                f"ensemble weights sum to {weights.sum():.12f}, "
                f"off by more than {PROB_SUM_TOL}"
            )
        object.__setattr__(self, "members", members)
        resid = np.abs(self.mixture() - self.target.mat).max()
        if resid > ENSEMBLE_RECON_TOL:
            raise ValidationError(
                f"ensemble mixture deviates from target by {resid:.3e} "
                f"(max-abs), tolerance {ENSEMBLE_RECON_TOL}"
            )

    def mixture(self) -> np.ndarray:
        amps = np.stack([psi.amp for _, psi in self.members])
        weights = np.array([w for w, _ in self.members])
        return np.einsum("k,ki,kj->ij", weights, amps, amps.conj())

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    kraus: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ValidationError("channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        for k in ops:
            if k.shape != (dim, dim):
                raise DimensionMismatch("Kraus operators must share one square shape")
        total = sum(k.conj().T @ k for k in ops)
        resid = np.abs(total - np.eye(dim)).max()
        if resid > HERMITICITY_TOL:
            raise ValidationError(
                f"Kraus completeness violated: ||sum K'K - I||_max = {resid:.3e}"
            )
        object.__setattr__(self, "kraus", tuple(_frozen(k) for k in ops))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]


def probability_vector(p, tol: float = 1e-12) -> np.ndarray:
    """Clamp tiny negatives to zero and check normalization."""
    vec = np.asarray(p, dtype=float).reshape(-1).copy()
    if vec.min() < -tol:
        raise ValidationError(f"probability entry {vec.min():.3e} below -{tol}")
    np.clip(vec, 0.0, None, out=vec)
    if abs(vec.sum() - 1.0) > PROB_SUM_TOL:
        raise ValidationError(
            f"probabilities sum to {vec.sum():.12f}, off by more than {PROB_SUM_TOL}"
        )
    return vec


def validate_density(mat) -> DensityMatrix:
    """Validate Hermiticity, unit trace and positivity of a candidate matrix.

    Raises NotSquare / NotHermitian / NotUnitTrace / NotPSD naming the
    measured residual.  Eigenvalues within ``-PSD_TOL`` of zero are accepted
    (they are treated as exact zeros by rank computations downstream).
    """
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {arr.shape}")
    herm = np.abs(arr - arr.conj().T).max()
    if herm > HERMITICITY_TOL:
        raise NotHermitian(f"||mat - mat'||_max = {herm:.3e} exceeds {HERMITICITY_TOL}")
    tr = arr.trace()
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotUnitTrace(f"|trace - 1| = {abs(tr - 1.0):.3e} exceeds {TRACE_TOL}")
    low = np.linalg.eigvalsh(arr).min()
    if low < -PSD_TOL:
        raise NotPSD(f"smallest eigenvalue {low:.3e} below -{PSD_TOL}")
    return DensityMatrix((arr + arr.conj().T) / 2.0)


def pure_density(psi: PureState) -> DensityMatrix:
    return DensityMatrix(psi.projector())


def support_decomposition(rho: DensityMatrix):
    """Positive eigenpairs of ``rho``: (evals desc, evecs as columns).

    Eigenvalues in ``[-PSD_TOL, RANK_EIG_CUTOFF]`` are clamped to zero and
    dropped, so the rank is stable under validation-level noise.  Each
    eigenvector's phase is fixed by making its largest-magnitude entry real
    positive, so downstream decompositions are deterministic and equivariant
    under embeddings that permute or pad the basis.
    """
    evals, evecs = np.linalg.eigh(rho.mat)
    keep = evals > RANK_EIG_CUTOFF
    evals, evecs = evals[keep][::-1], np.array(evecs[:, keep][:, ::-1])
    for j in range(evals.size):
        evecs[:, j], _ = _phase_fixed(evecs[:, j])
    return evals, evecs


def rank(rho: DensityMatrix) -> int:
    return int(support_decomposition(rho)[0].size)


def coherence_vector(psi: PureState) -> np.ndarray:
    """Squared amplitude magnitudes in the reference basis."""
    mu = np.abs(psi.amp) ** 2
    return mu / mu.sum()


def _phase_fixed(vec: np.ndarray):
    """Rotate so the largest-magnitude entry is real positive; return phase used."""
    k = int(np.argmax(np.abs(vec)))
    z = vec[k]
    phase = z / abs(z) if abs(z) > 0 else 1.0
    return vec / phase, phase


def schmidt(psi: BipartiteState):
    """Schmidt decomposition of a bipartite pure state.

    Returns ``(lam, basis_a, basis_b)`` where ``lam`` are the squared Schmidt
    coefficients sorted descending and ``sum_i sqrt(lam_i) |a_i>|b_i>``
    reproduces the input.  Basis phases are fixed by making the
    largest-magnitude amplitude of each A-side vector real positive.
    """
    if not psi.is_pure:
        raise ValidationError("schmidt decomposition needs a pure state")
    m = psi.value.amp.reshape(psi.dim_a, psi.dim_b)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    lam = probability_vector(s**2)
    basis_a, basis_b = [], []
    for i in range(s.size):
        a, phase = _phase_fixed(u[:, i])
        b = vh[i, :] * phase
        basis_a.append(PureState(a / np.linalg.norm(a)))
        basis_b.append(PureState(b / np.linalg.norm(b)))
    return lam, basis_a, basis_b


def schmidt_vector(amp: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Squared singular values of the amplitude matrix, zero-padded to
    ``max(dim_a, dim_b)`` so symmetric simplex functions apply uniformly."""
    s = np.linalg.svd(np.asarray(amp).reshape(dim_a, dim_b), compute_uv=False)
    lam = np.zeros(max(dim_a, dim_b))
    lam[: s.size] = s**2
    return lam / lam.sum()


def ensemble_from_isometry(rho: DensityMatrix, isometry) -> Ensemble:
    """Pure-state decomposition of ``rho`` selected by an ``m x r`` isometry.

    The rows of the isometry mix the weighted eigenvectors of ``rho``; every
    decomposition of cardinality ``m`` arises this way.  Members with weight
    below ``MEMBER_WEIGHT_CUTOFF`` are dropped.
    """
    v = np.asarray(isometry, dtype=complex)
    if v.ndim != 2:
        raise NotIsometry(f"expected a 2-d array, got shape {v.shape}")
    evals, evecs = support_decomposition(rho)
    r = evals.size
    if v.shape[1] != r:
        raise RankMismatch(f"isometry has {v.shape[1]} columns, rank(rho) = {r}")
    if v.shape[0] < r:
        raise RankMismatch(f"need at least {r} rows, got {v.shape[0]}")
    resid = np.abs(v.conj().T @ v - np.eye(r)).max()
    if resid > ISOMETRY_TOL:
        raise NotIsometry(f"||V'V - I||_max = {resid:.3e} exceeds {ISOMETRY_TOL}")
    # w_k = sum_j V_kj sqrt(eval_j) |e_j>
    unnorm = v @ (evecs * np.sqrt(evals)).T
    weights = np.einsum("ki,ki->k", unnorm, unnorm.conj()).real
    members = [
        (float(w), PureState(row / np.sqrt(w)))
        for w, row in zip(weights, unnorm)
        if w >= MEMBER_WEIGHT_CUTOFF
    ]
    total = sum(w for w, _ in members)
    members = [(w / total, psi) for w, psi in members]
    return Ensemble(target=rho, members=tuple(members))


def ensemble_from_rows(rho: DensityMatrix, rows: np.ndarray) -> Ensemble:
    """Ensemble whose members are the (unnormalized) rows of ``rows``.

    Rows with squared norm below ``MEMBER_WEIGHT_CUTOFF`` are dropped and the
    remaining weights renormalized.
    """
    weights = np.einsum("ki,ki->k", rows, rows.conj()).real
    members = [
        (float(w), PureState(row / np.sqrt(w)))
        for w, row in zip(weights, rows)
        if w >= MEMBER_WEIGHT_CUTOFF
    ]
    total = sum(w for w, _ in members)
    return Ensemble(target=rho, members=tuple((w / total, psi) for w, psi in members))


def apply_channel(rho: DensityMatrix, channel: KrausChannel) -> DensityMatrix:
    """Apply ``sum_l K_l rho K_l'`` and re-validate the output."""
    if channel.dim != rho.dim:
        raise DimensionMismatch(
            f"channel dimension {channel.dim} != state dimension {rho.dim}"
        )
    out = sum(k @ rho.mat @ k.conj().T for k in channel.kraus)
    return validate_density(out)


def reduced_a(rho: BipartiteState) -> DensityMatrix:
    """Partial trace over the B subsystem."""
    mat = rho.value.projector() if rho.is_pure else rho.value.mat
    t = mat.reshape(rho.dim_a, rho.dim_b, rho.dim_a, rho.dim_b)
    return validate_density(np.einsum("ijkj->ik", t))


# --- JSON state files -------------------------------------------------------
#
# {"kind": "density" | "pure", "dims": [n] or [nA, nB],
#  "data": nested arrays of [re, im] pairs}


def _pairs_to_complex(data, expect_ndim: int) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != expect_ndim + 1 or arr.shape[-1] != 2:
        raise ValidationError(
            "state data must be nested arrays of [re, im] pairs "
            f"with {expect_ndim} leading dimension(s), got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def _complex_to_pairs(arr: np.ndarray):
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def state_to_dict(state) -> dict:
    if isinstance(state, BipartiteState):
        inner = state_to_dict(state.value)
        inner["dims"] = [state.dim_a, state.dim_b]
        return inner
    if isinstance(state, DensityMatrix):
        return {
            "kind": "density",
            "dims": [state.dim],
            "data": _complex_to_pairs(np.asarray(state.mat)),
        }
    if isinstance(state, PureState):
        return {
            "kind": "pure",
            "dims": [state.dim],
            "data": _complex_to_pairs(np.asarray(state.amp)),
        }
    raise TypeError(f"cannot serialize {type(state).__name__}")


def state_from_dict(payload: dict):
    kind = payload.get("kind")
    dims = payload.get("dims")
    if kind not in ("density", "pure"):
        raise ValidationError(f"unknown state kind {kind!r}")
    if not isinstance(dims, (list, tuple)) or len(dims) not in (1, 2):
        raise ValidationError(f"dims must be [n] or [nA, nB], got {dims!r}")
    dims = [int(d) for d in dims]
    flat = int(np.prod(dims))
    if kind == "density":
        mat = _pairs_to_complex(payload.get("data"), 2)
        if mat.shape != (flat, flat):
            raise DimensionMismatch(
                f"data shape {mat.shape} does not match dims {dims}"
            )
        state = validate_density(mat)
    else:
        amp = _pairs_to_complex(payload.get("data"), 1)
        if amp.shape != (flat,):
            raise DimensionMismatch(
                f"data length {amp.shape[0]} does not match dims {dims}"
            )
        state = PureState(amp)
    if len(dims) == 2:
        return BipartiteState(dims[0], dims[1], state)
    return state


def save_state(path, state) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(state), fh)


def load_state(path):
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def ensemble_to_dict(ensemble: Ensemble) -> dict:
    return {
        "kind": "ensemble",
        "target": state_to_dict(ensemble.target),
        "members": [
            {"weight": w, "state": state_to_dict(psi)} for w, psi in ensemble.members
        ],
    }


def ensemble_from_dict(payload: dict) -> Ensemble:
    if payload.get("kind") != "ensemble":
        raise ValidationError(f"expected an ensemble payload, got {payload.get('kind')!r}")
    target = state_from_dict(payload["target"])
    if not isinstance(target, DensityMatrix):
        raise ValidationError("ensemble target must be a density matrix")
    members = tuple(
        (float(item["weight"]), state_from_dict(item["state"]))
        for item in payload["members"]
    )
    return Ensemble(target=target, members=members)
