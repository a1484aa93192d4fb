import numpy as np
import pytest

from roofkit.maximal import (
    Certificate,
    CorrelationMatrix,
    IndexOutOfRange,
    InvalidCorrelation,
    PreconditionFailed,
    Reason,
    Verdict,
    certify_amc,
    certify_ame,
    decompose_3dim_real,
    decompose_correlation_2,
    fourier_ensemble,
    generalized_bell,
)
from roofkit.measures import embed_mc
from roofkit.roofs import Budget
from roofkit.sampling import amc_witnessed, maximally_coherent_pure, substream
from roofkit.states import BipartiteState, PureState, schmidt, validate_density

CERT_BUDGET = Budget(restarts=8, sweeps=300, seed=0)


def flat_qutrit(c12, c13, c23):
    """Real qutrit with diagonal 1/3 and given correlation entries."""
    mat = np.array(
        [
            [1.0, c12, c13],
            [c12, 1.0, c23],
            [c13, c23, 1.0],
        ]
    ) / 3.0
    return validate_density(mat)


def witness_is_sound(cert: Certificate, kind: str, tol: float = 1e-7) -> bool:
    """Independent re-validation: reconstruction and member uniformity."""
    ens = cert.witness
    resid = np.abs(ens.mixture() - ens.target.mat).max()
    if resid > 1e-8:
        return False
    for _, psi in ens.members:
        if kind == "amc":
            lam = np.abs(psi.amp) ** 2
        else:
            n = int(round(np.sqrt(psi.dim)))
            s = np.linalg.svd(psi.amp.reshape(n, n), compute_uv=False)
            lam = s**2
        if np.abs(lam - 1.0 / lam.size).max() > tol:
            return False
    return True


class TestFourierEnsemble:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_reconstructs_maximally_mixed(self, n):
        ens = fourier_ensemble(n)
        assert np.abs(ens.mixture() - np.eye(n) / n).max() < 1e-12

    def test_qubit_members_are_plus_minus(self):
        ens = fourier_ensemble(2)
        amps = sorted(tuple(np.round(p.amp.real, 9)) for _, p in ens.members)
        root = 1 / np.sqrt(2)
        assert np.allclose(amps[0], (root, -root))
        assert np.allclose(amps[1], (root, root))

    @pytest.mark.parametrize("n", [3, 4])
    def test_members_uniform_modulus(self, n):
        for _, psi in fourier_ensemble(n).members:
            assert np.abs(np.abs(psi.amp) ** 2 - 1.0 / n).max() < 1e-12

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_gram_matrix_is_identity(self, n):
        amps = np.stack([p.amp for _, p in fourier_ensemble(n).members])
        gram = amps @ amps.conj().T
        assert np.abs(gram - np.eye(n)).max() < 1e-12

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            fourier_ensemble(1)


class TestCorrelationDecomposition:
    def test_rank_one_input(self):
        corr = CorrelationMatrix(np.ones((2, 2)))
        terms = decompose_correlation_2(corr)
        assert len(terms) == 1
        weight, term = terms[0]
        assert weight == pytest.approx(1.0)
        assert np.allclose(term.mat, np.ones((2, 2)))

    def test_identity_input(self):
        terms = decompose_correlation_2(CorrelationMatrix(np.eye(2)))
        assert len(terms) == 2
        assert all(w == pytest.approx(0.5) for w, _ in terms)

    def test_imaginary_off_diagonal(self):
        corr = CorrelationMatrix(np.array([[1.0, 0.6j], [-0.6j, 1.0]]))
        terms = decompose_correlation_2(corr)
        weights = sorted(w for w, _ in terms)
        assert np.allclose(weights, [0.2, 0.2, 0.6])
        rebuilt = sum(w * t.mat for w, t in terms)
        assert np.abs(rebuilt - corr.mat).max() < 1e-10

    def test_random_inputs_reconstruct(self):
        rng = np.random.default_rng(77)
        for _ in range(1000):
            z = np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            corr = CorrelationMatrix(np.array([[1.0, z], [np.conj(z), 1.0]]))
            terms = decompose_correlation_2(corr)
            weights = np.array([w for w, _ in terms])
            assert weights.min() >= 0.0
            assert abs(weights.sum() - 1.0) <= 1e-12
            rebuilt = sum(w * t.mat for w, t in terms)
            assert np.abs(rebuilt - corr.mat).max() < 1e-10

    def test_invalid_inputs(self):
        with pytest.raises(InvalidCorrelation):
            CorrelationMatrix(np.array([[1.0, 1.5], [1.5, 1.0]]))
        with pytest.raises(InvalidCorrelation):
            decompose_correlation_2(CorrelationMatrix(np.eye(3)))


class TestRealQutritDecomposition:
    def test_all_equal_third_is_pure(self):
        # the all-1/3 matrix is the uniform-phase pure state: single member
        rho = flat_qutrit(1.0, 1.0, 1.0)
        ens = decompose_3dim_real(rho)
        weights = sorted((w for w, _ in ens.members), reverse=True)
        assert weights[0] == pytest.approx(1.0, abs=1e-12)
        assert len(weights) == 1
        assert np.abs(ens.mixture() - rho.mat).max() < 1e-12

    def test_maximally_mixed_gives_uniform_weights(self):
        ens = decompose_3dim_real(flat_qutrit(0.0, 0.0, 0.0))
        assert np.allclose([w for w, _ in ens.members], 0.25)
        assert np.abs(ens.mixture() - np.eye(3) / 3).max() < 1e-12

    def test_affine_weights_reconstruct(self):
        # off-diagonal density entries 0.1 <-> correlation entries 0.3
        rho = flat_qutrit(0.3, 0.3, 0.3)
        ens = decompose_3dim_real(rho)
        weights = sorted((w for w, _ in ens.members), reverse=True)
        assert np.allclose(weights, [0.475, 0.175, 0.175, 0.175], atol=1e-12)
        assert np.abs(ens.mixture() - rho.mat).max() < 1e-12

    def test_members_are_sign_patterns(self):
        ens = decompose_3dim_real(flat_qutrit(0.0, 0.0, 0.0))
        for _, psi in ens.members:
            assert np.allclose(np.abs(psi.amp), 1 / np.sqrt(3), atol=1e-15)

    def test_negative_weight_returns_none(self):
        rho = flat_qutrit(-0.5, -0.5, -0.5)
        assert decompose_3dim_real(rho) is None

    def test_preconditions(self):
        with pytest.raises(PreconditionFailed):
            decompose_3dim_real(validate_density(np.diag([0.5, 0.25, 0.25])))
        complex_rho = validate_density(
            np.array([[1, 0.3j, 0], [-0.3j, 1, 0], [0, 0, 1]]) / 3.0
        )
        with pytest.raises(PreconditionFailed):
            decompose_3dim_real(complex_rho)
        with pytest.raises(PreconditionFailed):
            decompose_3dim_real(validate_density(np.eye(2) / 2))


class TestCertifyAmc:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_maximally_mixed_is_amc(self, n):
        cert = certify_amc(validate_density(np.eye(n) / n), CERT_BUDGET)
        assert cert.verdict is Verdict.AMC
        assert witness_is_sound(cert, "amc")

    def test_unbalanced_diagonal_refuted(self):
        cert = certify_amc(validate_density(np.diag([0.5, 0.25, 0.25])))
        assert cert.verdict is Verdict.NOT_AMC
        assert cert.reason is Reason.DIAGONAL_TEST
        assert cert.witness is None

    def test_qubit_with_real_coherence(self):
        rho = validate_density(np.array([[0.5, 0.3], [0.3, 0.5]]))
        cert = certify_amc(rho)
        assert cert.verdict is Verdict.AMC
        assert cert.reason is Reason.CONSTRUCTIVE
        assert len(cert.witness.members) == 3
        assert witness_is_sound(cert, "amc")

    def test_real_qutrit_constructive(self):
        cert = certify_amc(flat_qutrit(0.3, 0.1, -0.2))
        assert cert.verdict is Verdict.AMC
        assert cert.reason is Reason.CONSTRUCTIVE
        assert witness_is_sound(cert, "amc")

    def test_complex_qutrit_numerical_never_inconclusive(self):
        # flat diagonal is sufficient in dimension 3, so certification must
        # succeed even through the numerical route
        rng = substream(123, "complex-qutrit")
        for _ in range(5):
            v = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            rho = validate_density(v @ v.conj().T / 3.0)
            cert = certify_amc(rho, CERT_BUDGET)
            assert cert.verdict is Verdict.AMC
            assert cert.reason is Reason.NUMERICAL
            assert witness_is_sound(cert, "amc")

    def test_amc_witnessed_dim_four(self):
        rho, _ = amc_witnessed(4, substream(5, "amc4"))
        cert = certify_amc(rho, CERT_BUDGET)
        assert cert.verdict is Verdict.AMC
        assert witness_is_sound(cert, "amc")

    def test_real_qutrit_affine_gap_falls_back_to_search(self):
        # negative affine weight, yet still AMC (flat diagonal, dimension 3)
        rho = flat_qutrit(-0.5, -0.5, -0.5)
        cert = certify_amc(rho, CERT_BUDGET)
        assert cert.verdict is Verdict.AMC
        assert cert.reason is Reason.NUMERICAL
        assert witness_is_sound(cert, "amc")


class TestGeneralizedBell:
    def test_qubit_bell_basis(self):
        expected = {
            (0, 0): np.array([1, 0, 0, 1]) / np.sqrt(2),
            (1, 0): np.array([1, 0, 0, -1]) / np.sqrt(2),
            (0, 1): np.array([0, 1, 1, 0]) / np.sqrt(2),
            (1, 1): np.array([0, 1, -1, 0]) / np.sqrt(2),
        }
        for (s, t), target in expected.items():
            amp = generalized_bell(2, s, t).value.amp
            overlap = abs(np.vdot(target, amp))
            assert overlap == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_uniform_schmidt_vector(self, n):
        for s in range(n):
            for t in range(n):
                lam, _, _ = schmidt(generalized_bell(n, s, t))
                assert np.abs(lam - 1.0 / n).max() < 1e-12

    @pytest.mark.parametrize("n", [2, 3])
    def test_orthonormal_basis(self, n):
        amps = np.stack(
            [generalized_bell(n, s, t).value.amp for s in range(n) for t in range(n)]
        )
        gram = amps @ amps.conj().T
        assert np.abs(gram - np.eye(n * n)).max() < 1e-12

    @pytest.mark.parametrize("n", [2, 3])
    def test_average_is_maximally_mixed(self, n):
        total = sum(
            generalized_bell(n, s, t).value.projector()
            for s in range(n)
            for t in range(n)
        ) / (n * n)
        assert np.abs(total - np.eye(n * n) / (n * n)).max() < 1e-12

    def test_index_range(self):
        with pytest.raises(IndexOutOfRange):
            generalized_bell(2, 2, 0)
        with pytest.raises(IndexOutOfRange):
            generalized_bell(2, 0, -1)


class TestCertifyAme:
    @pytest.mark.parametrize("n", [2, 3])
    def test_maximally_correlated_is_ame(self, n):
        mat = np.zeros((n * n, n * n))
        idx = np.arange(n) * n + np.arange(n)
        mat[idx, idx] = 1.0 / n
        bip = BipartiteState(n, n, validate_density(mat))
        cert = certify_ame(bip, CERT_BUDGET)
        assert cert.verdict is Verdict.AME
        assert witness_is_sound(cert, "ame")

    def test_bell_mixture_numerical_route(self):
        psi1 = np.array([1, 0, 0, 1]) / np.sqrt(2)
        psi2 = np.array([0, 1, 1, 0]) / np.sqrt(2)
        rho = validate_density(0.3 * np.outer(psi1, psi1) + 0.7 * np.outer(psi2, psi2))
        cert = certify_ame(BipartiteState(2, 2, rho), CERT_BUDGET)
        assert cert.verdict is Verdict.AME
        assert cert.reason is Reason.NUMERICAL
        assert witness_is_sound(cert, "ame")

    def test_unbalanced_schmidt_correlated_refuted(self):
        sc = embed_mc(validate_density(np.diag([0.5, 0.25, 0.25])))
        cert = certify_ame(sc.embedded(), CERT_BUDGET)
        assert cert.verdict is Verdict.NOT_AME
        assert cert.reason is Reason.DIAGONAL_TEST

    def test_dimension_mismatch(self):
        from roofkit.states import DimensionMismatch, PureState

        amp = np.zeros(6, dtype=complex)
        amp[0] = 1.0
        with pytest.raises(DimensionMismatch):
            certify_ame(BipartiteState(2, 3, PureState(amp)))

    @pytest.mark.parametrize("n", [2, 3])
    def test_theorem_roundtrip_random_amc(self, n):
        # random maximally coherent mixtures: AMC, and their embeddings AME
        rng = substream(31, f"roundtrip/{n}")
        for _ in range(3):
            weights = rng.dirichlet(np.ones(n + 1))
            members = [maximally_coherent_pure(n, rng) for _ in range(n + 1)]
            rho = validate_density(
                sum(w * m.projector() for w, m in zip(weights, members))
            )
            amc = certify_amc(rho, CERT_BUDGET)
            assert amc.verdict is Verdict.AMC
            ame = certify_ame(embed_mc(rho).embedded(), CERT_BUDGET)
            assert ame.verdict is Verdict.AME
            assert witness_is_sound(ame, "ame")

    def test_certificate_serialization(self):
        cert = certify_amc(validate_density(np.eye(2) / 2))
        payload = cert.to_dict()
        assert payload["verdict"] == "AMC"
        assert payload["witness"] is not None
        import json

        json.dumps(payload)  # serializable
