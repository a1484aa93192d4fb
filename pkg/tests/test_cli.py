import json

import numpy as np
import pytest

from roofkit import cli
from roofkit.measures import as_schmidt_correlated
from roofkit.states import ensemble_from_dict, load_state, save_state, validate_density, PureState, BipartiteState


@pytest.fixture
def mixed_qubit_file(tmp_path):
    path = tmp_path / "i2.json"
    save_state(path, validate_density(np.eye(2) / 2))
    return str(path)


@pytest.fixture
def bell_file(tmp_path):
    amp = np.array([1, 0, 0, 1]) / np.sqrt(2)
    path = tmp_path / "bell.json"
    save_state(path, BipartiteState(2, 2, PureState(amp)))
    return str(path)


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCompute:
    def test_assistance_of_maximally_mixed(self, capsys, mixed_qubit_file):
        code, out, _ = run_cli(
            capsys,
            ["compute", mixed_qubit_file, "--measure", "coherence", "--f", "l1",
             "--extension", "assist", "--restarts", "4", "--sweeps", "60",
             "--seed", "1"],
        )
        assert code == 0
        assert "1.000000000" in out
        assert "tight=True" in out

    def test_pure_entanglement_of_bell(self, capsys, bell_file):
        code, out, _ = run_cli(
            capsys,
            ["compute", bell_file, "--measure", "entanglement", "--f",
             "concurrence", "--extension", "pure"],
        )
        assert code == 0
        assert "entanglement/concurrence/pure: 1.000000000" in out

    def test_diagonal_convex_roof_is_zero(self, capsys, tmp_path):
        path = tmp_path / "diag.json"
        save_state(path, validate_density(np.diag([0.5, 0.5])))
        code, out, _ = run_cli(
            capsys,
            ["compute", str(path), "--f", "shannon", "--extension", "convex",
             "--restarts", "4", "--sweeps", "60"],
        )
        assert code == 0
        value = float(out.split("coherence/shannon/convex: ")[1].split()[0])
        assert abs(value) < 1e-6

    def test_witness_file_revalidates(self, capsys, mixed_qubit_file, tmp_path):
        witness_path = tmp_path / "witness.json"
        code, _, _ = run_cli(
            capsys,
            ["compute", mixed_qubit_file, "--f", "l1", "--extension", "assist",
             "--restarts", "4", "--sweeps", "60", "--emit-witness",
             str(witness_path)],
        )
        assert code == 0
        with open(witness_path) as fh:
            ens = ensemble_from_dict(json.load(fh))
        assert ens.size >= 2

    def test_byte_identical_reports(self, capsys, mixed_qubit_file):
        argv = ["compute", mixed_qubit_file, "--f", "shannon", "--extension",
                "assist", "--restarts", "4", "--sweeps", "50", "--seed", "9",
                "--json"]
        _, out1, _ = run_cli(capsys, argv)
        _, out2, _ = run_cli(capsys, argv)
        assert out1 == out2

    def test_validation_failure_exit_code(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        with open(path, "w") as fh:
            json.dump({"kind": "density", "dims": [2],
                       "data": [[[0.5, 0], [0.6, 0]], [[0.6, 0], [0.5, 0]]]}, fh)
        code, _, err = run_cli(capsys, ["compute", str(path)])
        assert code == 2
        assert "NotPSD" in err

    def test_budget_error_exit_code(self, capsys, mixed_qubit_file):
        code, _, _ = run_cli(
            capsys, ["compute", mixed_qubit_file, "--restarts", "0"])
        assert code == 3

    def test_entanglement_needs_bipartite(self, capsys, mixed_qubit_file):
        code, _, err = run_cli(
            capsys, ["compute", mixed_qubit_file, "--measure", "entanglement"])
        assert code == 2

    def test_csv_output(self, capsys, mixed_qubit_file):
        code, out, _ = run_cli(
            capsys,
            ["compute", mixed_qubit_file, "--f", "l1", "--extension", "assist",
             "--restarts", "2", "--sweeps", "30", "--csv"],
        )
        assert code == 0
        assert out.splitlines()[0] == "name,value,bracket,tolerance,passed,detail"


class TestCertify:
    def test_maximally_mixed_amc(self, capsys, mixed_qubit_file):
        code, out, _ = run_cli(capsys, ["certify", mixed_qubit_file, "--amc"])
        assert code == 0
        assert json.loads(out)["verdict"] == "AMC"

    def test_unbalanced_diagonal_exit_four(self, capsys, tmp_path):
        path = tmp_path / "unbalanced.json"
        save_state(path, validate_density(np.diag([0.5, 0.25, 0.25])))
        code, out, _ = run_cli(capsys, ["certify", str(path), "--amc"])
        assert code == 4
        assert json.loads(out)["verdict"] == "NotAMC"

    def test_bell_mixture_ame(self, capsys, tmp_path):
        psi1 = np.array([1, 0, 0, 1]) / np.sqrt(2)
        psi2 = np.array([0, 1, 1, 0]) / np.sqrt(2)
        rho = validate_density(
            0.3 * np.outer(psi1, psi1) + 0.7 * np.outer(psi2, psi2))
        path = tmp_path / "bellmix.json"
        save_state(path, BipartiteState(2, 2, rho))
        code, out, _ = run_cli(
            capsys, ["certify", str(path), "--ame", "--restarts", "8"])
        assert code == 0
        assert json.loads(out)["verdict"] == "AME"

    def test_ame_requires_bipartite_dims(self, capsys, mixed_qubit_file):
        code, _, _ = run_cli(capsys, ["certify", mixed_qubit_file, "--ame"])
        assert code == 2


class TestRandom:
    def test_ginibre_deterministic(self, capsys, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(capsys, ["random", "--kind", "ginibre-full-rank", "--dim", "2",
                         "--seed", "7", str(out1)])
        run_cli(capsys, ["random", "--kind", "ginibre-full-rank", "--dim", "2",
                         "--seed", "7", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()
        rho = load_state(out1)
        assert np.linalg.eigvalsh(rho.mat).min() >= 1e-3

    def test_amc_witnessed_certifies(self, capsys, tmp_path):
        path = tmp_path / "amc.json"
        code, _, _ = run_cli(
            capsys, ["random", "--kind", "amc-witnessed", "--dim", "3",
                     "--seed", "3", str(path)])
        assert code == 0
        code, out, _ = run_cli(capsys, ["certify", str(path), "--amc"])
        assert code == 0

    def test_schmidt_correlated_pattern(self, capsys, tmp_path):
        path = tmp_path / "sc.json"
        run_cli(capsys, ["random", "--kind", "schmidt-correlated", "--dim", "2",
                         "--seed", "5", str(path)])
        state = load_state(path)
        assert as_schmidt_correlated(state) is not None

    def test_haar_pure_normalized(self, capsys, tmp_path):
        path = tmp_path / "pure.json"
        run_cli(capsys, ["random", "--kind", "haar-pure", "--dim", "4",
                         "--seed", "1", str(path)])
        psi = load_state(path)
        assert abs(np.linalg.norm(psi.amp) - 1) < 1e-12

    def test_record_ensemble(self, capsys, tmp_path):
        path = tmp_path / "amc.json"
        ens_path = tmp_path / "ens.json"
        run_cli(capsys, ["random", "--kind", "amc-witnessed", "--dim", "2",
                         "--seed", "3", "--record-ensemble", str(ens_path),
                         str(path)])
        with open(ens_path) as fh:
            ens = ensemble_from_dict(json.load(fh))
        target = load_state(path)
        assert np.abs(ens.target.mat - target.mat).max() < 1e-12


class TestVerifySuite:
    def test_starved_budget_fails(self, capsys):
        code, out, err = run_cli(
            capsys,
            ["verify-paper", "--restarts", "1", "--sweeps", "1",
             "--gap-states", "2", "--ent-gap-states", "1", "--sc-states", "1"],
        )
        assert code == 1
        assert "first failing row" in err

    def test_quick_pass_with_tuned_budgets(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["verify-paper", "--gap-states", "2", "--ent-gap-states", "1",
             "--sc-states", "2", "--seed", "0"],
        )
        assert code == 0
        assert "[pass]" in out
        assert "[FAIL]" not in out
