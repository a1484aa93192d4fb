"""Command-line front end.

``roofkit compute`` evaluates a quantity on a state file, ``certify`` decides
assisted maximality, ``random`` writes seeded test states, and
``verify-paper`` runs the bundled claim suite.  Reports are byte-identical
for identical command lines and seeds; wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .claims import ClaimResult, run_claim_suite
from .maximal import certify_amc, certify_ame
from .measures import Extension, Flavor, MeasureSpec, coherence, entanglement
from .roofs import Budget, BudgetZero, ObjectiveNaN, RoofResult
from .sampling import (
    amc_witnessed,
    ginibre_full_rank,
    haar_pure,
    random_schmidt_correlated,
    substream,
)
from .simplexfn import get as get_simplex_function
from .states import (
    BipartiteState,
    DensityMatrix,
    PureState,
    ValidationError,
    ensemble_to_dict,
    load_state,
    pure_density,
    save_state,
    state_to_dict,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_NEGATIVE = 4
EXIT_INCONCLUSIVE = 5


@dataclass
class ReportRow:
    name: str
    value: float
    bracket: Optional[float]
    tolerance: Optional[float]
    passed: Optional[bool]
    detail: str = ""


@dataclass
class RunReport:
    command: str
    inputs_digest: str
    seed: int
    results: List[ReportRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "seed": self.seed,
            "results": [asdict(r) for r in self.results],
        }

    def render(self, as_json: bool, as_csv: bool) -> str:
        if as_json:
            return json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if as_csv:
            lines = ["name,value,bracket,tolerance,passed,detail"]
            for r in self.results:
                bracket = "" if r.bracket is None else repr(r.bracket)
                tol = "" if r.tolerance is None else repr(r.tolerance)
                passed = "" if r.passed is None else str(r.passed).lower()
                detail = r.detail.replace(",", ";")
                lines.append(f"{r.name},{r.value!r},{bracket},{tol},{passed},{detail}")
            return "\n".join(lines)
        lines = [f"command: {self.command}", f"inputs: {self.inputs_digest}",
                 f"seed: {self.seed}"]
        for r in self.results:
            status = "" if r.passed is None else ("  [pass]" if r.passed else "  [FAIL]")
            bracket = "" if r.bracket is None else f"  bracket={r.bracket:.9f}"
            lines.append(f"{r.name}: {r.value:.9f}{bracket}{status}")
            if r.detail:
                lines.append(f"    {r.detail}")
        return "\n".join(lines)


def _digest(path: Optional[str]) -> str:
    if path is None:
        return "-"
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _budget_args(parser: argparse.ArgumentParser, defaults: bool = True) -> None:
    parser.add_argument("--restarts", type=int, default=32 if defaults else None,
                        help="independent random restarts")
    parser.add_argument("--sweeps", type=int, default=200 if defaults else None,
                        help="maximum refinement sweeps per restart")
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument("--cardinality", type=int, default=None,
                        help="decomposition size (default: rank^2 capped at 16)")


def _output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--csv", action="store_true", help="CSV output")


def _emit(report: RunReport, args, started: float) -> None:
    sys.stdout.write(report.render(args.json, getattr(args, "csv", False)) + "\n")
    sys.stderr.write(f"wall time: {time.monotonic() - started:.2f}s\n")


def _load(path: str):
    return load_state(path)


def _flat_density(state) -> DensityMatrix:
    if isinstance(state, BipartiteState):
        state = state.value
    if isinstance(state, PureState):
        return pure_density(state)
    return state


def _cmd_compute(args) -> int:
    started = time.monotonic()
    state = _load(args.state)
    f = get_simplex_function(args.f)
    extension = Extension(args.extension)
    budget = Budget(args.restarts, args.sweeps, args.seed)
    MeasureSpec(
        f,
        Flavor.COHERENCE if args.measure == "coherence" else Flavor.ENTANGLEMENT,
        extension,
    )  # rejects inadmissible plug-ins; built-ins always pass

    if args.measure == "entanglement":
        if not isinstance(state, BipartiteState):
            raise ValidationError("entanglement needs a state file with dims [nA, nB]")
        result: RoofResult = entanglement(state, f, extension, budget, args.cardinality)
    else:
        result = coherence(_flat_density(state), f, extension, budget, args.cardinality)

    if args.emit_witness:
        with open(args.emit_witness, "w") as fh:
            json.dump(ensemble_to_dict(result.witness), fh)

    name = f"{args.measure}/{args.f}/{args.extension}"
    detail = f"converged={result.converged} iterations={result.iterations}"
    if result.bracket is not None and extension is Extension.ASSISTANCE:
        detail += f" tight={result.tight}"
    report = RunReport(
        command=_echo(args), inputs_digest=_digest(args.state), seed=args.seed,
        results=[ReportRow(name, result.value, result.bracket, None, None, detail)],
    )
    _emit(report, args, started)
    return EXIT_OK


def _cmd_certify(args) -> int:
    started = time.monotonic()
    state = _load(args.state)
    budget = Budget(args.restarts, args.sweeps, args.seed)
    if args.ame:
        if not isinstance(state, BipartiteState):
            raise ValidationError("--ame needs a state file with dims [nA, nB]")
        if state.is_pure:
            state = BipartiteState(state.dim_a, state.dim_b, pure_density(state.value))
        cert = certify_ame(state, budget)
    else:
        cert = certify_amc(_flat_density(state), budget)
    payload = cert.to_dict()
    payload["command"] = _echo(args)
    payload["inputs_digest"] = _digest(args.state)
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    sys.stderr.write(f"wall time: {time.monotonic() - started:.2f}s\n")
    if cert.positive:
        return EXIT_OK
    if cert.verdict.value.startswith("Not"):
        return EXIT_NEGATIVE
    return EXIT_INCONCLUSIVE


def _cmd_random(args) -> int:
    rng = substream(args.seed, f"random/{args.kind}/{args.dim}")
    if args.kind == "ginibre-full-rank":
        state = ginibre_full_rank(args.dim, rng)
    elif args.kind == "haar-pure":
        state = haar_pure(args.dim, rng)
    elif args.kind == "schmidt-correlated":
        state = random_schmidt_correlated(args.dim, rng).embedded()
    else:  # amc-witnessed
        state, ensemble = amc_witnessed(args.dim, rng, args.count)
        if args.record_ensemble:
            with open(args.record_ensemble, "w") as fh:
                json.dump(ensemble_to_dict(ensemble), fh)
    save_state(args.out, state)
    sys.stderr.write(f"wrote {args.kind} state (dim {args.dim}) to {args.out}\n")
    return EXIT_OK


def _cmd_verify(args) -> int:
    started = time.monotonic()
    budget = None
    if args.restarts is not None or args.sweeps is not None:
        budget = Budget(args.restarts or 32, args.sweeps or 200, args.seed)
    rows = run_claim_suite(
        seed=args.seed,
        budget=budget,
        gap_states=args.gap_states,
        ent_gap_states=args.ent_gap_states,
        sc_states=args.sc_states,
    )
    report = RunReport(
        command=_echo(args), inputs_digest="-", seed=args.seed,
        results=[
            ReportRow(r.name, r.value, None, r.tolerance, r.passed, r.detail)
            for r in rows
        ],
    )
    _emit(report, args, started)
    failing = [r for r in rows if not r.passed]
    if failing:
        sys.stderr.write(f"first failing row: {failing[0].name}\n")
        return EXIT_FAIL
    return EXIT_OK


def _echo(args) -> str:
    return " ".join(args._argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roofkit",
        description="Roof-extension coherence and entanglement quantities "
        "of finite-dimensional quantum states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="evaluate a quantity on a state file")
    p.add_argument("state", help="state JSON file")
    p.add_argument("--measure", choices=("coherence", "entanglement"),
                   default="coherence")
    p.add_argument("--f", choices=("shannon", "l1", "concurrence"),
                   default="shannon", help="simplex function")
    p.add_argument("--extension", choices=("pure", "convex", "assist"),
                   default="convex")
    _budget_args(p)
    p.add_argument("--emit-witness", default=None, metavar="PATH",
                   help="write the witness ensemble as JSON")
    _output_args(p)
    p.set_defaults(run=_cmd_compute)

    p = sub.add_parser("certify", help="certify assisted maximality")
    p.add_argument("state")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--amc", action="store_true")
    group.add_argument("--ame", action="store_true")
    _budget_args(p)
    _output_args(p)
    p.set_defaults(run=_cmd_certify)

    p = sub.add_parser("random", help="write a seeded random state file")
    p.add_argument("--kind", required=True, choices=(
        "ginibre-full-rank", "haar-pure", "schmidt-correlated", "amc-witnessed"))
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None,
                   help="ensemble size for amc-witnessed (default dim+1)")
    p.add_argument("--record-ensemble", default=None, metavar="PATH")
    p.add_argument("out")
    p.set_defaults(run=_cmd_random)

    p = sub.add_parser("verify-paper", help="run the bundled claim suite")
    _budget_args(p, defaults=False)
    p.add_argument("--gap-states", type=int, default=50)
    p.add_argument("--ent-gap-states", type=int, default=25)
    p.add_argument("--sc-states", type=int, default=20)
    _output_args(p)
    p.set_defaults(run=_cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = ["roofkit"] + argv
    try:
        return args.run(args)
    except (BudgetZero, ObjectiveNaN) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BUDGET
    except ValidationError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
