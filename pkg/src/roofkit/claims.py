"""The built-in claim suite: analytic statements the library must reproduce.

Each claim runs a self-contained numerical check and reports a pass/fail row
with its headline residual or margin.  The suite backs both the
``verify-paper`` CLI subcommand and the acceptance test module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .maximal import decompose_3dim_real, fourier_ensemble, generalized_bell
from .measures import Extension, coherence, compress_mc, entanglement
from .roofs import Budget
from .sampling import balanced_flip_channel, ginibre_full_rank, random_schmidt_correlated, substream
from .simplexfn import BUILTINS
from .states import (
    BipartiteState,
    apply_channel,
    schmidt,
    validate_density,
)

GAP_THRESHOLD = 1e-3
SATURATION_TOL = 1e-6
EQUALITY_TOL = 2e-4
BRACKET_SLACK = 1e-8


@dataclass(frozen=True)
class ClaimResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str


def _row_budget(seed: int, label: str, restarts: int, sweeps: int,
                override: Optional[Budget]) -> Budget:
    if override is not None:
        return Budget(override.restarts, override.sweeps, seed=override.seed)
    sub = substream(seed, label)
    return Budget(restarts=restarts, sweeps=sweeps, seed=int(sub.integers(2**63)))


def claim_fourier_reconstruction(max_dim: int = 6) -> ClaimResult:
    worst = 0.0
    for n in range(2, max_dim + 1):
        ens = fourier_ensemble(n)
        recon = np.abs(ens.mixture() - np.eye(n) / n).max()
        flat = max(
            np.abs(np.abs(psi.amp) ** 2 - 1.0 / n).max() for _, psi in ens.members
        )
        worst = max(worst, float(recon), float(flat))
    return ClaimResult(
        "fourier-reconstruction",
        worst <= 1e-12,
        worst,
        1e-12,
        f"uniform-modulus basis mixtures reproduce I/n for n=2..{max_dim}",
    )


def claim_assistance_saturation(
    seed: int, bracket_ledger: List[float], budget: Optional[Budget] = None
) -> ClaimResult:
    worst = 0.0
    rows = []
    for n in (2, 3):
        rho = validate_density(np.eye(n) / n)
        for name, f in sorted(BUILTINS.items()):
            b = _row_budget(seed, f"saturation/{n}/{name}", 8, 400, budget)
            res = coherence(rho, f, Extension.ASSISTANCE, b)
            deficit = f.max_value(n) - res.value
            bracket_ledger.append(res.value - res.bracket)
            worst = max(worst, deficit, abs(res.value - res.bracket))
            rows.append(f"{name}(n={n})={res.value:.9f}")
    return ClaimResult(
        "assistance-saturation",
        worst <= SATURATION_TOL,
        worst,
        SATURATION_TOL,
        "; ".join(rows),
    )


def claim_assistance_nonmonotonic(
    seed: int, bracket_ledger: List[float], budget: Optional[Budget] = None
) -> ClaimResult:
    ground = validate_density(np.diag([1.0, 0.0]))
    mixed = apply_channel(ground, balanced_flip_channel())
    worst = 0.0
    details = []
    for name, f in sorted(BUILTINS.items()):
        b = _row_budget(seed, f"nonmonotonic/{name}", 6, 300, budget)
        before = coherence(ground, f, Extension.ASSISTANCE, b)
        after = coherence(mixed, f, Extension.ASSISTANCE, b)
        bracket_ledger.append(after.value - after.bracket)
        deficit = f.max_value(2) - after.value
        worst = max(worst, abs(before.value), deficit)
        details.append(f"{name}: {before.value:.1e} -> {after.value:.6f}")
    return ClaimResult(
        "assistance-nonmonotonic",
        worst <= SATURATION_TOL,
        worst,
        SATURATION_TOL,
        "; ".join(details),
    )


def claim_coherence_gap(
    seed: int,
    bracket_ledger: List[float],
    count: int = 50,
    budget: Optional[Budget] = None,
) -> ClaimResult:
    rng = substream(seed, "coherence-gap/states")
    min_gap = np.inf
    for idx in range(count):
        rho = ginibre_full_rank(2, rng)
        for name, f in sorted(BUILTINS.items()):
            b = _row_budget(seed, f"coherence-gap/{idx}/{name}", 4, 120, budget)
            upper = coherence(rho, f, Extension.CONVEX_ROOF, b)
            lower = coherence(rho, f, Extension.ASSISTANCE, b)
            bracket_ledger.append(lower.value - lower.bracket)
            min_gap = min(min_gap, lower.value - upper.value)

    # Analytic instance: the maximally mixed qubit has assistance 1 and
    # convex roof 0 under the l1-type function.
    rho = validate_density(np.eye(2) / 2)
    b = _row_budget(seed, "coherence-gap/analytic", 6, 300, budget)
    hi = coherence(rho, BUILTINS["l1"], Extension.ASSISTANCE, b)
    lo = coherence(rho, BUILTINS["l1"], Extension.CONVEX_ROOF, b)
    analytic_err = max(abs(hi.value - 1.0), abs(lo.value))
    passed = min_gap > GAP_THRESHOLD and analytic_err <= SATURATION_TOL
    return ClaimResult(
        "coherence-gap",
        passed,
        float(min_gap),
        GAP_THRESHOLD,
        f"min gap over {count} full-rank qubit states and all built-ins; "
        f"analytic instance error {analytic_err:.2e}",
    )


def claim_entanglement_gap(
    seed: int,
    bracket_ledger: List[float],
    count: int = 25,
    budget: Optional[Budget] = None,
) -> ClaimResult:
    rng = substream(seed, "entanglement-gap/states")
    f = BUILTINS["concurrence"]
    min_gap = np.inf
    for idx in range(count):
        rho = BipartiteState(2, 2, ginibre_full_rank(4, rng))
        b = _row_budget(seed, f"entanglement-gap/{idx}", 3, 40, budget)
        upper = entanglement(rho, f, Extension.CONVEX_ROOF, b, cardinality=4)
        lower = entanglement(rho, f, Extension.ASSISTANCE, b, cardinality=4)
        bracket_ledger.append(lower.value - lower.bracket)
        min_gap = min(min_gap, lower.value - upper.value)
    return ClaimResult(
        "entanglement-gap",
        min_gap > GAP_THRESHOLD,
        float(min_gap),
        GAP_THRESHOLD,
        f"min assistance/convex-roof gap over {count} full-rank two-qubit states",
    )


def claim_schmidt_correlated_equality(
    seed: int, count: int = 20, budget: Optional[Budget] = None
) -> ClaimResult:
    # Dimension-3 instances use rank-2 coefficient matrices: on rank-2
    # supports the sweep optimizer reliably finds the global roof (the grid
    # oracle class), so the comparison tests the correspondence rather than
    # residual search noise.
    rng = substream(seed, "schmidt-correlated/states")
    worst = 0.0
    for idx in range(count):
        n = 2 if idx % 2 == 0 else 3
        sc = random_schmidt_correlated(n, rng, rank=min(n, 2))
        compressed = compress_mc(sc)
        embedded = sc.embedded()
        for name, f in sorted(BUILTINS.items()):
            for ext in (Extension.ASSISTANCE, Extension.CONVEX_ROOF):
                b = _row_budget(
                    seed, f"schmidt-correlated/{idx}/{name}/{ext.value}", 8, 300, budget
                )
                ent = entanglement(embedded, f, ext, b)
                coh = coherence(compressed, f, ext, b)
                worst = max(worst, abs(ent.value - coh.value))
    return ClaimResult(
        "schmidt-correlated-equality",
        worst <= EQUALITY_TOL,
        worst,
        EQUALITY_TOL,
        f"max |entanglement - coherence| over {count} Schmidt-correlated states "
        "(both extensions, all built-ins)",
    )


def random_flat_diagonal_qutrit(rng: np.random.Generator):
    """Random real state with diagonal 1/3 admitting the four-member
    sign-pattern decomposition (resampled until all weights are nonnegative)."""
    while True:
        v = rng.standard_normal((3, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        rho = validate_density(v @ v.T / 3.0)
        ens = decompose_3dim_real(rho)
        if ens is not None:
            return rho, ens


def claim_real_qutrit_decomposition(seed: int, count: int = 20) -> ClaimResult:
    rng = substream(seed, "real-qutrit/states")
    worst_recon = 0.0
    worst_flat = 0.0
    for _ in range(count):
        rho, ens = random_flat_diagonal_qutrit(rng)
        worst_recon = max(worst_recon, float(np.abs(ens.mixture() - rho.mat).max()))
        worst_flat = max(
            worst_flat,
            max(float(np.abs(np.abs(psi.amp) ** 2 - 1.0 / 3).max()) for _, psi in ens.members),
        )
    passed = worst_recon <= 1e-10 and worst_flat <= 1e-12
    return ClaimResult(
        "real-qutrit-decomposition",
        passed,
        max(worst_recon, worst_flat),
        1e-10,
        f"reconstruction residual {worst_recon:.2e}, member flatness {worst_flat:.2e} "
        f"over {count} real flat-diagonal qutrits",
    )


def claim_bell_average(dims: Tuple[int, ...] = (2, 3)) -> ClaimResult:
    worst = 0.0
    for n in dims:
        total = np.zeros((n * n, n * n), dtype=complex)
        for s in range(n):
            for t in range(n):
                bell = generalized_bell(n, s, t)
                total += bell.value.projector() / (n * n)
                lam, _, _ = schmidt(bell)
                worst = max(worst, float(np.abs(lam - 1.0 / n).max()))
        worst = max(worst, float(np.abs(total - np.eye(n * n) / (n * n)).max()))
    return ClaimResult(
        "bell-average",
        worst <= 1e-12,
        worst,
        1e-12,
        f"uniform mixtures of shifted-phase maximally entangled bases give I/n^2, n={dims}",
    )


def claim_bracket_compliance(bracket_ledger: List[float]) -> ClaimResult:
    excess = max(bracket_ledger) if bracket_ledger else 0.0
    return ClaimResult(
        "bracket-compliance",
        excess <= BRACKET_SLACK,
        float(excess),
        BRACKET_SLACK,
        f"max assistance value minus analytic bound over {len(bracket_ledger)} runs",
    )


def run_claim_suite(
    seed: int = 0,
    budget: Optional[Budget] = None,
    gap_states: int = 50,
    ent_gap_states: int = 25,
    sc_states: int = 20,
) -> List[ClaimResult]:
    """Run every claim row in order; ``budget`` overrides the per-row tuning."""
    ledger: List[float] = []
    rows = [
        claim_fourier_reconstruction(),
        claim_assistance_saturation(seed, ledger, budget),
        claim_assistance_nonmonotonic(seed, ledger, budget),
        claim_coherence_gap(seed, ledger, gap_states, budget),
        claim_entanglement_gap(seed, ledger, ent_gap_states, budget),
        claim_schmidt_correlated_equality(seed, sc_states, budget),
        claim_real_qutrit_decomposition(seed),
        claim_bell_average(),
        claim_bracket_compliance(ledger),
    ]
    return rows
