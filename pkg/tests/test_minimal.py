"""Tests for stabilizing gains and the minimal-order controller family."""

import numpy as np
import pytest

from controllers.minimal import (
    minimal_controller,
    minimal_controller_real,
    prestabilize_output_feedback,
    real_form_counterpart,
    real_form_similarity,
    tune_epsilon,
)
from controllers.stabilize import lqr_gain, output_injection_gain
from internal_model.certificate import certify_rorp
from numerics.errors import (
    PreconditionError,
    SearchFailureError,
    ShapeError,
    SurjectivityError,
    UndetectableError,
    UnstabilizableError,
)
from numerics.linalg import eigvals, is_hurwitz
from sysmodel.state_space import StateSpace, assemble_closed_loop, exosystem_from_frequencies, transfer_eval


class TestStabilizingGains:
    """Test LQR and output injection gains."""

    def test_lqr_stabilizes(self, square_plant):
        """Test that A + B K is Hurwitz."""
        K = lqr_gain(square_plant.A, square_plant.B)
        assert K.shape == (2, 4)
        assert is_hurwitz(square_plant.A + square_plant.B @ K)

    def test_output_injection(self, square_plant):
        """Test that A + L C is Hurwitz."""
        L = output_injection_gain(square_plant.A, square_plant.C)
        assert L.shape == (4, 2)
        assert is_hurwitz(square_plant.A + L @ square_plant.C)

    def test_unstabilizable(self):
        """Test that the failing modes are listed."""
        with pytest.raises(UnstabilizableError) as info:
            lqr_gain(np.diag([1.0, -1.0]), [[0.0], [1.0]])
        assert info.value.modes == [pytest.approx(1.0)]

    def test_undetectable(self):
        """Test the dual failure."""
        with pytest.raises(UndetectableError):
            output_injection_gain(np.diag([1.0, -1.0]), [[0.0, 1.0]])


class TestMinimalController:
    """Test the minimal-order construction."""

    def test_scalar_example(self, scalar_plant, scalar_exo):
        """Test G1 = 0, K = 1/4, G2 = -1 and the double eigenvalue -1/2."""
        ctrl = minimal_controller(scalar_plant, scalar_exo, 0.25)
        assert np.allclose(ctrl.G1, [[0.0]])
        assert np.allclose(ctrl.K, [[0.25]])
        assert np.allclose(ctrl.G2, [[-1.0]])
        cl = assemble_closed_loop(scalar_plant, ctrl, scalar_exo)
        assert np.allclose(eigvals(cl.Ae), [-0.5, -0.5], atol=1e-7)
        assert ctrl.parameters["epsilon"] == 0.25

    def test_pseudoinverse_gives_identity(self, random_plant):
        """Test that P(i w) K0 = I for the pseudoinverse choice."""
        plant = random_plant(5, 3, 2, seed=7)
        exo = exosystem_from_frequencies([0.0, 1.5], [1, 1], state_dim=5, output_dim=2)
        ctrl = minimal_controller(plant, exo, 0.5)
        for k, w in enumerate(exo.frequencies):
            P = transfer_eval(plant, 1j * w)
            K0 = ctrl.K[:, 2 * k:2 * k + 2] / 0.5
            assert np.allclose(P @ K0, np.eye(2), atol=1e-10)
        assert np.allclose(ctrl.G2, -np.vstack([np.eye(2), np.eye(2)]))

    def test_custom_gains(self, scalar_plant, scalar_exo):
        """Test G2 = -(P K0)* for a custom block."""
        ctrl = minimal_controller(scalar_plant, scalar_exo, 0.1, gain_choice=[np.array([[2.0]])])
        assert np.allclose(ctrl.G2, [[-2.0]])
        assert ctrl.parameters["gain_choice"] == "custom"

    def test_unstable_plant(self, scalar_exo):
        """Test that an unstable plant is rejected."""
        plant = StateSpace(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]])
        with pytest.raises(PreconditionError):
            minimal_controller(plant, scalar_exo, 0.25)

    def test_jordan_exosystem(self, square_plant, jordan_exo):
        """Test that a non-diagonal exosystem is rejected."""
        with pytest.raises(PreconditionError):
            minimal_controller(square_plant, jordan_exo, 0.25)

    def test_surjectivity(self):
        """Test that a transmission zero at a frequency is reported."""
        plant = StateSpace(A=[[-1.0, 0.0], [0.0, -2.0]], B=[[1.0], [1.0]], C=[[1.0, -2.0]], D=[[0.0]])
        exo = exosystem_from_frequencies([0.0], [1], state_dim=2, output_dim=1)
        with pytest.raises(SurjectivityError) as info:
            minimal_controller(plant, exo, 0.25)
        assert info.value.frequency_index == 0

    def test_nonpositive_epsilon(self, scalar_plant, scalar_exo):
        """Test that epsilon must be positive."""
        with pytest.raises(PreconditionError):
            minimal_controller(scalar_plant, scalar_exo, 0.0)


class TestTuneEpsilon:
    """Test the epsilon search."""

    def test_scalar_accepts_max(self, scalar_plant, scalar_exo):
        """Test that every epsilon is stabilizing for the scalar plant."""
        assert tune_epsilon(scalar_plant, scalar_exo, eps_max=1.0) == 1.0

    def test_tuned_epsilon_is_hurwitz(self, random_plant):
        """Test that both the tuned value and its half stabilize."""
        plant = random_plant(4, 2, 2, seed=3)
        exo = exosystem_from_frequencies([0.0, 1.0, -2.0], [1, 1, 1], state_dim=4, output_dim=2)
        eps = tune_epsilon(plant, exo, eps_max=50.0, refinement=10)
        for value in (eps, eps / 2):
            cl = assemble_closed_loop(plant, minimal_controller(plant, exo, value), exo)
            assert cl.is_hurwitz

    def test_parallel_matches_serial(self, random_plant):
        """Test that the grid result does not depend on the worker count."""
        plant = random_plant(3, 1, 1, seed=11)
        exo = exosystem_from_frequencies([0.0, 3.0], [1, 1], state_dim=3, output_dim=1)
        serial = tune_epsilon(plant, exo, eps_max=20.0, refinement=8)
        parallel = tune_epsilon(plant, exo, eps_max=20.0, refinement=8, workers=4)
        assert serial == parallel

    def test_search_failure(self, scalar_plant, scalar_exo, mocker):
        """Test that a grid without any Hurwitz loop raises a search failure."""
        unstable = mocker.Mock(abscissa=0.1)
        mocker.patch("controllers.minimal.assemble_closed_loop", return_value=unstable)
        with pytest.raises(SearchFailureError):
            tune_epsilon(scalar_plant, scalar_exo, eps_max=1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_random_plants_certify(self, seed, random_plant):
        """Test that the tuned minimal controller solves the problem on random stable plants."""
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(1, 9))
        p = int(rng.integers(1, 4))
        m = int(rng.integers(p, 4))
        plant = random_plant(n, m, p, seed=seed)
        exo = exosystem_from_frequencies([0.0, 1.0], [1, 1], state_dim=n, output_dim=p)
        eps = tune_epsilon(plant, exo, eps_max=1.0, refinement=10)
        ctrl = minimal_controller(plant, exo, eps)
        assert certify_rorp(plant, ctrl, exo).solves_rorp


class TestPrestabilize:
    """Test output-feedback pre-stabilization."""

    def test_zero_feedthrough(self, square_plant):
        """Test that D = 0 reduces to (A - kappa B C, B, C, 0)."""
        closed = prestabilize_output_feedback(square_plant, 2.0)
        assert np.allclose(closed.A, square_plant.A - 2.0 * square_plant.B @ square_plant.C)
        assert np.allclose(closed.B, square_plant.B)
        assert np.allclose(closed.C, square_plant.C)

    def test_kappa_zero(self, square_plant):
        """Test that kappa = 0 leaves the plant unchanged."""
        closed = prestabilize_output_feedback(square_plant, 0.0)
        assert np.array_equal(closed.A, square_plant.A)

    def test_with_feedthrough(self):
        """Test the scalar formula with D != 0."""
        plant = StateSpace(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[1.0]])
        closed = prestabilize_output_feedback(plant, 1.0)
        # (I - D K1) = 2, A + B K1 C / 2 = 1 - 1/2
        assert closed.A[0, 0] == pytest.approx(0.5)
        assert closed.C[0, 0] == pytest.approx(0.5)
        assert closed.D[0, 0] == pytest.approx(0.5)
        assert closed.B[0, 0] == pytest.approx(0.5)

    def test_non_square(self, random_plant):
        """Test that kappa I needs m = p."""
        with pytest.raises(ShapeError):
            prestabilize_output_feedback(random_plant(3, 2, 1, seed=0), 1.0)


class TestRealForm:
    """Test the real-valued minimal controller."""

    def test_real_controller(self, random_plant):
        """Test a real controller for frequencies (-1, 0, 1)."""
        plant = random_plant(4, 2, 2, seed=5)
        exo = exosystem_from_frequencies([-1.0, 0.0, 1.0], [1, 1, 1], state_dim=4, output_dim=2)
        ctrl = minimal_controller_real(plant, exo, 0.05)
        assert ctrl.is_real
        assert ctrl.dimension == 6
        assert ctrl.parameters["complex_order"] == [1.0, -1.0, 0.0]
        eigs = np.sort_complex(eigvals(ctrl.G1))
        assert np.allclose(eigs, np.sort_complex(np.array([-1j, -1j, 0, 0, 1j, 1j])), atol=1e-12)

    def test_unpaired_frequency(self, random_plant):
        """Test that a frequency without its negative is rejected."""
        plant = random_plant(3, 1, 1, seed=1)
        exo = exosystem_from_frequencies([0.0, 1.0], [1, 1], state_dim=3, output_dim=1)
        with pytest.raises(PreconditionError):
            minimal_controller_real(plant, exo, 0.1)

    def test_similarity_is_unitary(self):
        """Test that the real-form similarity is unitary."""
        Q = real_form_similarity(2, 1, True)
        assert np.allclose(Q.conj().T @ Q, np.eye(6))

    def test_similarity_maps_to_complex_form(self, random_plant):
        """Test (Q* G1 Q, Q* G2, K Q) against the complex minimal controller."""
        plant = random_plant(4, 2, 2, seed=5)
        exo = exosystem_from_frequencies([-1.0, 0.0, 1.0], [1, 1, 1], state_dim=4, output_dim=2)
        ctrl = minimal_controller_real(plant, exo, 0.05)
        counterpart, Q = real_form_counterpart(plant, ctrl)
        Qh = Q.conj().T
        assert np.allclose(Qh @ ctrl.G1 @ Q, counterpart.G1, rtol=0, atol=1e-12)
        assert np.allclose(Qh @ ctrl.G2, counterpart.G2, rtol=0, atol=1e-10)
        assert np.allclose(ctrl.K @ Q, counterpart.K, rtol=0, atol=1e-12)
        assert np.allclose(counterpart.G2[:4], -np.vstack([np.eye(2)] * 2) / np.sqrt(2.0), atol=1e-10)

        cl_real = assemble_closed_loop(plant, ctrl, exo)
        complex_exo = exosystem_from_frequencies(ctrl.parameters["complex_order"], [1, 1, 1],
                                                 state_dim=4, output_dim=2)
        cl_complex = assemble_closed_loop(plant, counterpart, complex_exo)
        T = np.block([[np.eye(4), np.zeros((4, 6))], [np.zeros((6, 4)), Q]])
        assert np.allclose(T.conj().T @ cl_real.Ae @ T, cl_complex.Ae, atol=1e-10)

    def test_effective_pair_gain(self, random_plant):
        """Test that the pairs carry epsilon / 2 once G2 is rescaled to -I."""
        plant = random_plant(3, 1, 1, seed=2)
        exo = exosystem_from_frequencies([-2.0, 0.0, 2.0], [1, 1, 1], state_dim=3, output_dim=1)
        ctrl = minimal_controller_real(plant, exo, 0.2)
        assert ctrl.parameters["pair_epsilon"] == pytest.approx(0.1)
        assert ctrl.parameters["zero_epsilon"] == pytest.approx(0.2)

        counterpart, _ = real_form_counterpart(plant, ctrl)
        scale = np.sqrt(2.0)
        assert counterpart.G2[0, 0] * scale == pytest.approx(-1.0)
        pinv_w = 1.0 / transfer_eval(plant, 2j)[0, 0]
        assert counterpart.K[0, 0] / scale == pytest.approx(0.1 * pinv_w)
        assert counterpart.K[0, 2] == pytest.approx(0.2 / transfer_eval(plant, 0.0)[0, 0])

    def test_real_controller_certifies(self, random_plant):
        """Test that the tuned real controller solves the regulation problem."""
        plant = random_plant(4, 2, 2, seed=5)
        exo = exosystem_from_frequencies([-1.0, 0.0, 1.0], [1, 1, 1], state_dim=4, output_dim=2)
        eps = tune_epsilon(plant, exo, eps_max=1.0, refinement=10,
                           builder=lambda e: minimal_controller_real(plant, exo, e))
        ctrl = minimal_controller_real(plant, exo, eps)
        cert = certify_rorp(plant, ctrl, exo)
        assert cert.hurwitz
        assert cert.solves_rorp

    def test_complex_plant_rejected(self):
        """Test that complex plant data is rejected."""
        plant = StateSpace(A=[[-1.0 + 1.0j]], B=[[1.0]], C=[[1.0]], D=[[0.0]])
        exo = exosystem_from_frequencies([0.0], [1], state_dim=1, output_dim=1)
        with pytest.raises(PreconditionError):
            minimal_controller_real(plant, exo, 0.1)

    def test_counterpart_needs_real_form(self, scalar_plant, scalar_exo):
        """Test that only real-form controllers have a complex counterpart."""
        with pytest.raises(PreconditionError):
            real_form_counterpart(scalar_plant, minimal_controller(scalar_plant, scalar_exo, 0.1))
