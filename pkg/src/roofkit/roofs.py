"""Extremization of ensemble averages over pure-state decompositions.

``solve_roof`` computes the convex roof (direction ``MIN``) or the least
concave majorant / assistance value (direction ``MAX``) of an objective over
all pure-state decompositions of a density matrix, by local search on the
isometry parametrization of the decomposition set.  ``oracle_roof`` is a
brute-force check for small instances.

Objectives are callables mapping a unit-norm complex amplitude vector to a
nonnegative float.  An objective may expose a vectorized ``batch(amps)``
method taking an ``(..., n)`` array of unit vectors; the solver uses it when
present and falls back to a scalar loop otherwise.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .states import (
    DensityMatrix,
    Ensemble,
    PureState,
    RankMismatch,
    ensemble_from_rows,
    support_decomposition,
)

SWEEP_CONVERGENCE_TOL = 1e-9
BRACKET_TIGHT_TOL = 1e-6
DEFAULT_CARDINALITY_CAP = 16
_GSS_ITERS = 48
_GSS_COARSE_ITERS = 32
_REFINE_CYCLES = 3
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0
_PHASE_GRID = np.arange(8) * (np.pi / 4.0)
_NEGLIGIBLE_WEIGHT = 1e-30


class BudgetZero(ValueError):
    """Raised when the search budget has no restarts or no sweeps."""


class ObjectiveNaN(ValueError):
    """Raised when the objective returns a non-finite value on a witness."""


class Direction(Enum):
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class Budget:
    restarts: int = 32
    sweeps: int = 200
    seed: int = 0


@dataclass(frozen=True)
class RoofProblem:
    rho: DensityMatrix
    objective: Callable
    direction: Direction
    cardinality: Optional[int] = None
    budget: Budget = Budget()


@dataclass(frozen=True)
class RoofResult:
    """Extremal ensemble average with its witness decomposition.

    ``value`` is certified one-sided: a lower bound on the true maximum for
    direction MAX, an upper bound on the true minimum for MIN (the witness is
    always a feasible decomposition).  ``bracket``, when set, is an analytic
    bound closing the other side.
    """

    value: float
    witness: Ensemble
    bracket: Optional[float]
    converged: bool
    iterations: int

    @property
    def tight(self) -> bool:
        return self.bracket is not None and abs(self.value - self.bracket) <= BRACKET_TIGHT_TOL

    def with_bracket(self, bracket: Optional[float]) -> "RoofResult":
        return replace(self, bracket=bracket)


def default_cardinality(r: int) -> int:
    """Default decomposition size: r^2 capped at 16, never below the rank."""
    return max(r, min(r * r, DEFAULT_CARDINALITY_CAP))


def haar_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-distributed isometry via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


class _BatchObjective:
    """Adapter giving every objective a vectorized unnormalized-row value."""

    def __init__(self, objective):
        self._single = objective
        self._batch = getattr(objective, "batch", None)
        self._weighted = getattr(objective, "weighted", None)

    def unit(self, amps: np.ndarray) -> np.ndarray:
        if self._batch is not None:
            return np.asarray(self._batch(amps), dtype=float)
        flat = amps.reshape(-1, amps.shape[-1])
        vals = np.array([float(self._single(row)) for row in flat])
        return vals.reshape(amps.shape[:-1])

    def weighted(self, rows: np.ndarray) -> np.ndarray:
        """``||w||^2 * objective(w / ||w||)`` per row; zero rows contribute 0."""
        if self._weighted is not None:
            return np.asarray(self._weighted(rows), dtype=float)
        p = np.einsum("...i,...i->...", rows, rows.conj()).real
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = rows / np.sqrt(np.maximum(p, _NEGLIGIBLE_WEIGHT))[..., None]
            vals = p * self.unit(unit)
        return np.where(p > _NEGLIGIBLE_WEIGHT, vals, 0.0)


def _golden_min(fun, lo: np.ndarray, hi: np.ndarray, iters: int):
    """Lockstep golden-section minimization over a batch of brackets."""
    a, b = lo.astype(float).copy(), hi.astype(float).copy()
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        left = f1 < f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        old_x1, old_f1, old_x2, old_f2 = x1, f1, x2, f2
        span = b - a
        x1 = np.where(left, b - _INVPHI * span, old_x2)
        x2 = np.where(left, old_x1, a + _INVPHI * span)
        x_eval = np.where(left, x1, x2)
        f_eval = fun(x_eval)
        f1 = np.where(left, f_eval, old_f2)
        f2 = np.where(left, old_f1, f_eval)
    pick = f1 < f2
    return np.where(pick, x1, x2), np.where(pick, f1, f2)


def _round_robin(m: int):
    """Circle-method schedule: every unordered pair exactly once per sweep,
    grouped into rounds of disjoint pairs that can be optimized in lockstep.
    Returns an int array of shape ``(rounds, 2, pairs_per_round)``."""
    players = list(range(m)) + ([None] if m % 2 else [])
    k = len(players)
    rounds = []
    for _ in range(k - 1):
        pairs = [
            (players[i], players[k - 1 - i])
            for i in range(k // 2)
            if players[i] is not None and players[k - 1 - i] is not None
        ]
        rounds.append([[p[0] for p in pairs], [p[1] for p in pairs]])
        players = [players[0], players[-1]] + players[1:-1]
    return np.array(rounds)


def _rotate(wk: np.ndarray, wl: np.ndarray, theta: np.ndarray, phi: np.ndarray):
    c = np.cos(theta)[..., None]
    se = (np.sin(theta) * np.exp(1j * phi))[..., None]
    return c * wk + se * wl, -np.conj(se) * wk + c * wl


def _pair_value_fn(wk, wl, obj: _BatchObjective, sign: float):
    wk = wk[..., None, :]
    wl = wl[..., None, :]

    def value(theta, phi):
        top, bot = _rotate(wk, wl, theta, phi)
        vals = obj.weighted(np.stack([top, bot]))
        return sign * (vals[0] + vals[1])

    return value


def _optimize_pairs_numpy(wk, wl, base, obj: _BatchObjective, sign: float):
    """Vectorized three-stage golden-section search; returns per-pair
    candidate mask and the winning (theta, phi)."""
    value = _pair_value_fn(wk, wl, obj, sign)
    shape = base.shape + (_PHASE_GRID.size,)
    phases = np.broadcast_to(_PHASE_GRID, shape)
    th, fv = _golden_min(
        lambda t: value(t, phases),
        np.zeros(shape),
        np.full(shape, np.pi / 2.0),
        _GSS_COARSE_ITERS,
    )
    lane = fv.argmin(axis=-1)[..., None]
    theta0 = np.take_along_axis(th, lane, axis=-1)
    best = np.take_along_axis(fv, lane, axis=-1)
    phi0 = _PHASE_GRID[lane[..., 0]][..., None]

    # Only pairs whose coarse scan already beats the identity rotation are
    # worth refining; late sweeps drop most pairs here.
    cand = best[..., 0] < base - 1e-14
    if not cand.any():
        return cand, None, None
    sel = np.nonzero(cand)
    wk_c, wl_c = wk[sel], wl[sel]
    theta0, phi0, best = theta0[sel], phi0[sel], best[sel]
    value = _pair_value_fn(wk_c, wl_c, obj, sign)

    phi1, f1 = _golden_min(
        lambda p: value(np.broadcast_to(theta0, p.shape), p),
        phi0 - np.pi / 4.0,
        phi0 + np.pi / 4.0,
        _GSS_ITERS,
    )
    take = f1 < best
    phi_best = np.where(take, phi1, phi0)
    best = np.where(take, f1, best)

    th1, f2 = _golden_min(
        lambda t: value(t, np.broadcast_to(phi_best, t.shape)),
        np.zeros_like(theta0),
        np.full_like(theta0, np.pi / 2.0),
        _GSS_ITERS,
    )
    take = f2 < best
    theta_best = np.where(take, th1, theta0)
    return cand, theta_best[:, 0], phi_best[:, 0]


def _optimize_pairs_kernel(wk, wl, base, kernel_spec, sign: float, eps2: float):
    from . import _kernels

    kind, f_id, da, db = kernel_spec
    flat_k = wk.reshape(-1, wk.shape[-1])
    flat_l = wl.reshape(-1, wl.shape[-1])
    vals, thetas, phis = _kernels.round_pairs(
        flat_k, flat_l, sign, kind, f_id, da, db, _GSS_COARSE_ITERS, _GSS_ITERS, eps2,
        _REFINE_CYCLES,
    )
    cand = (vals < base.reshape(-1) - 1e-14).reshape(base.shape)
    if not cand.any():
        return cand, None, None
    flat_cand = cand.reshape(-1)
    return cand, thetas[flat_cand], phis[flat_cand]


def _weighted_members(rows, obj: _BatchObjective, kernel_spec, eps2: float):
    """Row values under the active evaluation path (kernel or numpy)."""
    if kernel_spec is not None:
        from . import _kernels

        kind, f_id, da, db = kernel_spec
        flat = rows.reshape(-1, rows.shape[-1])
        vals = _kernels.weighted_rows(flat, kind, f_id, da, db, eps2)
        return vals.reshape(rows.shape[:-1])
    return obj.weighted(rows)


def _round_step(
    W, member_vals, k_idx, l_idx, obj: _BatchObjective, sign: float, active,
    kernel_spec, eps2: float = 0.0,
) -> np.ndarray:
    """Optimize one round of disjoint row pairs, lockstep across restarts.

    Mutates ``W``/``member_vals`` in place (only restarts flagged ``active``)
    and returns the per-restart gain.
    """
    nrestarts = W.shape[0]
    gains_out = np.zeros(nrestarts)
    act = np.nonzero(active)[0]
    if act.size == 0:
        return gains_out
    # k_idx / l_idx hold one pair column per restart (restarts follow
    # independent schedules); gather that restart's own pair of rows
    arows = act[:, None]
    k_act, l_act = k_idx[act], l_idx[act]  # (A, P)
    wk, wl = W[arows, k_act], W[arows, l_act]  # (A, P, n)
    base = member_vals[arows, k_act] + member_vals[arows, l_act]  # (A, P)

    if kernel_spec is not None:
        cand, theta_best, phi_best = _optimize_pairs_kernel(
            wk, wl, base, kernel_spec, sign, eps2
        )
    else:
        cand, theta_best, phi_best = _optimize_pairs_numpy(wk, wl, base, obj, sign)
    if theta_best is None:
        return gains_out
    rs, ps = np.nonzero(cand)

    new_k, new_l = _rotate(wk[rs, ps], wl[rs, ps], theta_best, phi_best)
    fresh = sign * _weighted_members(
        np.stack([new_k, new_l]), obj, kernel_spec, eps2
    )
    gains = (base[rs, ps]) - (fresh[0] + fresh[1])
    keep = gains > 0.0
    if not keep.any():
        return gains_out
    sel_r = act[rs[keep]]
    sel_k = k_act[rs[keep], ps[keep]]
    sel_l = l_act[rs[keep], ps[keep]]
    W[sel_r, sel_k] = new_k[keep]
    W[sel_r, sel_l] = new_l[keep]
    member_vals[sel_r, sel_k] = fresh[0][keep]
    member_vals[sel_r, sel_l] = fresh[1][keep]
    np.add.at(gains_out, sel_r, gains[keep])
    return gains_out


def _resolve_kernel(objective):
    """Compiled-path descriptor for built-in objectives, None otherwise."""
    spec = getattr(objective, "kernel_spec", None)
    if spec is None:
        return None
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return None
    return spec


def _refine_rows(
    W: np.ndarray,
    obj: _BatchObjective,
    sign: float,
    max_sweeps: int,
    schedule_seed: int,
    restart_ids,
    kernel_spec=None,
):
    """Sweep all row pairs of every restart until each restart's full sweep
    improves by less than the tolerance (that restart then freezes).

    Each restart reshuffles its pair schedule every sweep from its own
    derived stream, which breaks the zigzag patterns of a fixed cyclic order
    and decorrelates the basins the restarts settle into.  A restart's
    trajectory depends only on its own identity and executed sweep count, so
    results do not depend on how restarts are batched or threaded.  ``W`` has
    shape ``(restarts, m, n)`` and is refined in place.  Returns per-restart
    ``(signed_totals, sweeps_done, converged)``.
    """
    nrestarts, m = W.shape[0], W.shape[1]
    seed = int(schedule_seed) & 0xFFFFFFFFFFFFFFFF
    canonical = _round_robin(m)  # (rounds, 2, P)
    schedulers = [
        np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0x5C4ED, int(rid))))
        for rid in restart_ids
    ]
    member_vals = sign * _weighted_members(W, obj, kernel_spec, 0.0)
    active = np.ones(nrestarts, dtype=bool)
    sweeps_done = np.zeros(nrestarts, dtype=int)
    perms = np.tile(np.arange(m), (nrestarts, 1))
    for sweep in range(max_sweeps):
        if sweep > 0:
            for r in np.nonzero(active)[0]:
                perms[r] = schedulers[r].permutation(m)
        schedule = perms[:, canonical]  # (R, rounds, 2, P)
        gains = np.zeros(nrestarts)
        for rnd in range(canonical.shape[0]):
            gains += _round_step(
                W, member_vals, schedule[:, rnd, 0], schedule[:, rnd, 1],
                obj, sign, active, kernel_spec, 0.0,
            )
        sweeps_done[active] += 1
        active &= ~(gains < SWEEP_CONVERGENCE_TOL)
        if not active.any():
            break
    totals = (sign * _weighted_members(W, obj, kernel_spec, 0.0)).sum(axis=-1)
    return totals, sweeps_done, ~active


def _restart_plan(budget: Budget):
    if budget.restarts < 1 or budget.sweeps < 1:
        raise BudgetZero(
            f"need restarts >= 1 and sweeps >= 1, got {budget.restarts}, {budget.sweeps}"
        )
    seed = int(budget.seed) & 0xFFFFFFFFFFFFFFFF
    return [np.random.SeedSequence(entropy=(seed, idx)) for idx in range(budget.restarts)]


def _thread_count() -> int:
    raw = os.environ.get("ROOFKIT_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(n, 0)


def solve_roof(prob: RoofProblem, bracket: Optional[float] = None) -> RoofResult:
    """Extremize the decomposition average of ``prob.objective`` over ``prob.rho``.

    Each restart starts from a Haar-random isometry and refines it by
    two-row Givens rotations, optimizing the rotation angle by golden-section
    search crossed over an eight-point phase grid with golden-section phase
    refinement.  Identical ``(prob, seed)`` inputs give bit-identical results;
    restarts use independent derived seed streams, so parallel execution
    (``ROOFKIT_THREADS``) does not change the outcome.
    """
    obj = _BatchObjective(prob.objective)
    evals, evecs = support_decomposition(prob.rho)
    r = evals.size
    m = prob.cardinality if prob.cardinality is not None else default_cardinality(r)
    if m < r:
        raise RankMismatch(f"cardinality {m} below rank {r}")
    seeds = _restart_plan(prob.budget)
    amps = (evecs * np.sqrt(evals)).T  # row j = sqrt(eval_j) e_j

    if r == 1:
        psi = evecs[:, 0]
        value = float(obj.unit(psi[None, :])[0])
        if not np.isfinite(value):
            raise ObjectiveNaN("objective returned a non-finite value")
        witness = Ensemble(target=prob.rho, members=((1.0, PureState(psi)),))
        return RoofResult(value, witness, bracket, True, 0)

    sign = 1.0 if prob.direction is Direction.MIN else -1.0
    kernel_spec = _resolve_kernel(prob.objective)
    W = np.stack(
        [haar_isometry(np.random.default_rng(s), m, r) for s in seeds]
    ) @ amps  # (restarts, m, n)

    threads = _thread_count()
    if threads > 1:
        chunks = np.array_split(np.arange(len(seeds)), min(threads, len(seeds)))
        chunks = [c for c in chunks if c.size]

        def run_chunk(idx):
            part = W[idx]  # fancy indexing copies; refined in place below
            stats = _refine_rows(
                part, obj, sign, prob.budget.sweeps, prob.budget.seed, idx, kernel_spec
            )
            return (part,) + stats

        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(run_chunk, chunks))
        W = np.concatenate([p[0] for p in parts])
        totals = np.concatenate([p[1] for p in parts])
        sweeps_done = np.concatenate([p[2] for p in parts])
        conv = np.concatenate([p[3] for p in parts])
    else:
        totals, sweeps_done, conv = _refine_rows(
            W, obj, sign, prob.budget.sweeps, prob.budget.seed,
            np.arange(len(seeds)), kernel_spec,
        )

    best_idx = int(np.argmin(totals))  # first occurrence wins ties
    witness = ensemble_from_rows(prob.rho, W[best_idx])
    converged = bool(conv[best_idx])
    sweeps_count = int(sweeps_done[best_idx])
    member_vals = obj.unit(np.stack([psi.amp for _, psi in witness.members]))
    if not np.all(np.isfinite(member_vals)):
        raise ObjectiveNaN("objective returned a non-finite value on a witness state")
    weights = np.array([w for w, _ in witness.members])
    value = float(weights @ member_vals)
    return RoofResult(value, witness, bracket, converged, sweeps_count)


def _grid_extremum(amps2: np.ndarray, obj: _BatchObjective, direction: Direction,
                   samples: int) -> float:
    """Exhaustive scan of all cardinality-2 decompositions of a rank-2 state.

    The two-member decompositions are exactly the two-parameter family of
    2x2 unitaries (up to immaterial row phases), gridded as
    ``theta in [0, pi/2]`` by ``phi in [0, 2pi)``.
    """
    thetas = np.linspace(0.0, np.pi / 2.0, samples)
    phis = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    e = np.exp(1j * phis)
    a1, a2 = amps2[0], amps2[1]
    extremum = np.inf if direction is Direction.MIN else -np.inf
    chunk = max(1, int(4.0e6 / (samples * amps2.shape[1])))
    for start in range(0, samples, chunk):
        th = thetas[start : start + chunk]
        c, s = np.cos(th), np.sin(th)
        se = s[:, None] * e[None, :]
        top = c[:, None, None] * a1 + se[:, :, None] * a2
        bot = -np.conj(se)[:, :, None] * a1 + c[:, None, None] * a2
        vals = obj.weighted(top) + obj.weighted(bot)
        block = vals.min() if direction is Direction.MIN else vals.max()
        extremum = min(extremum, block) if direction is Direction.MIN else max(extremum, block)
    return float(extremum)


def oracle_roof(
    rho: DensityMatrix,
    objective,
    direction: Direction,
    samples: int = 721,
    seed: int = 0,
) -> float:
    """Brute-force roof estimate, independent of the sweep optimizer.

    Rank-2 states are scanned over the full two-parameter grid of
    cardinality-2 decompositions (``samples`` points per axis).  Higher ranks
    fall back to the extremum over ``samples`` Haar-random isometries of
    cardinality ``rank^2``.
    """
    obj = _BatchObjective(objective)
    evals, evecs = support_decomposition(rho)
    r = evals.size
    amps = (evecs * np.sqrt(evals)).T
    if r == 1:
        return float(obj.unit(evecs[:, 0][None, :])[0])
    if r == 2:
        return _grid_extremum(amps, obj, direction, samples)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    m = r * r
    best = np.inf if direction is Direction.MIN else -np.inf
    for _ in range(samples):
        W = haar_isometry(rng, m, r) @ amps
        val = float(obj.weighted(W).sum())
        best = min(best, val) if direction is Direction.MIN else max(best, val)
    return best
