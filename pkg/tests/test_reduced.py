"""Tests for reduced-order internal models on finite perturbation classes."""

import numpy as np
import pytest

from controllers.minimal import minimal_controller
from controllers.reduced import reduced_frequency_bases, reduced_order_minimal_controller
from controllers.triangular import triangular_controller_reduced
from internal_model.certificate import certify_class
from numerics.errors import ClassValidationError, PreconditionError, ShapeError
from simulation.simulator import simulate
from sysmodel.state_space import PlantVariant, StateSpace, assemble_closed_loop, exosystem_from_frequencies


@pytest.fixture
def decoupled_plant():
    """P(s) = diag(1 / (s + 1), 1 / (s + 2))."""
    return StateSpace(A=np.diag([-1.0, -2.0]), B=np.eye(2), C=np.eye(2), D=np.zeros((2, 2)))


@pytest.fixture
def class_exo():
    """Constant and unit-frequency references in two outputs."""
    F = np.array([[1.0, 1.0], [1.0, 0.0]])
    return exosystem_from_frequencies([0.0, 1.0], [1, 1], E=np.zeros((2, 2)), F=F)


@pytest.fixture
def members(decoupled_plant, class_exo):
    """Nominal plus one member whose constant generator is parallel to the nominal one."""
    F2 = np.array([[3.0, 0.0], [3.0, 1.0]])
    return [
        PlantVariant.nominal(decoupled_plant, class_exo),
        PlantVariant(plant=decoupled_plant, E=np.zeros((2, 2)), F=F2),
    ]


class TestReducedBases:
    """Test the per-frequency generator spaces."""

    def test_copies(self, decoupled_plant, class_exo, members):
        """Test p_k = 1 at the constant frequency and p_k = 2 at omega = 1."""
        bases = reduced_frequency_bases(decoupled_plant, class_exo, members)
        assert [b.p_k for b in bases] == [1, 2]
        assert bases[0].gain.shape == (2, 1)
        assert np.allclose(np.abs(bases[0].gain[:, 0]), np.array([1.0, 2.0]) / np.sqrt(5.0))

    def test_trivial_frequency_dropped(self, decoupled_plant):
        """Test that a frequency without generators gets no copies."""
        F = np.array([[1.0, 0.0], [0.0, 0.0]])
        exo = exosystem_from_frequencies([0.0, 1.0], [1, 1], E=np.zeros((2, 2)), F=F)
        bases = reduced_frequency_bases(decoupled_plant, exo, [PlantVariant.nominal(decoupled_plant, exo)])
        assert bases[1].p_k == 0
        assert bases[1].copies == 0

    def test_singular_member(self, decoupled_plant, class_exo):
        """Test that a member with an eigenvalue at a frequency is reported."""
        bad = PlantVariant(plant=decoupled_plant.with_matrices(A=np.diag([0.0, -2.0])),
                           E=np.zeros((2, 2)), F=class_exo.F)
        with pytest.raises(ClassValidationError) as info:
            reduced_frequency_bases(decoupled_plant, class_exo, [PlantVariant.nominal(decoupled_plant, class_exo), bad])
        assert info.value.member == 1
        assert info.value.frequency_index == 0

    def test_non_square(self, random_plant):
        """Test that m != p is rejected."""
        plant = random_plant(3, 2, 1, seed=2)
        exo = exosystem_from_frequencies([0.0], [1], state_dim=3, output_dim=1)
        with pytest.raises(ShapeError):
            reduced_frequency_bases(plant, exo, [PlantVariant.nominal(plant, exo)])

    def test_empty_class(self, decoupled_plant, class_exo):
        """Test that an empty class is rejected."""
        with pytest.raises(PreconditionError):
            reduced_frequency_bases(decoupled_plant, class_exo, [])


class TestReducedMinimal:
    """Test the reduced minimal-order controller."""

    def test_smaller_than_full(self, decoupled_plant, class_exo, members):
        """Test that the reduced controller has fewer states than the full one."""
        reduced = reduced_order_minimal_controller(decoupled_plant, class_exo, members, 0.2)
        full = minimal_controller(decoupled_plant, class_exo, 0.2)
        assert reduced.dimension == 3
        assert reduced.dimension < full.dimension
        assert reduced.family == "minimal-reduced"
        assert reduced.parameters["copies"] == [1, 2]

    def test_every_member_tracks(self, decoupled_plant, class_exo, members):
        """Test simulated tracking for each member of the class."""
        ctrl = reduced_order_minimal_controller(decoupled_plant, class_exo, members, 0.2)
        assert certify_class(members, ctrl, class_exo).passed
        for member in members:
            member_exo = member.exosystem(class_exo)
            cl = assemble_closed_loop(member.plant, ctrl, member_exo)
            result = simulate(cl, member_exo, t_final=100.0, dt=0.05)
            assert result.max_terminal_error < 0.05
            assert result.alpha > 0

    def test_outside_class_fails(self, decoupled_plant, class_exo, members):
        """Test that a constant reference off the learned direction is not regulated."""
        ctrl = reduced_order_minimal_controller(decoupled_plant, class_exo, members, 0.2)
        outsider = PlantVariant(plant=decoupled_plant, E=np.zeros((2, 2)), F=np.array([[1.0, 1.0], [0.0, 0.0]]))
        assert not certify_class([outsider], ctrl, class_exo).passed


class TestReducedTriangular:
    """Test the reduced triangular controller."""

    def test_class_regulated(self, decoupled_plant, class_exo, members):
        """Test that the reduced triangular controller regulates every member."""
        ctrl, record = triangular_controller_reduced(decoupled_plant, class_exo, members)
        assert record.G1.shape == (3, 3)
        assert ctrl.dimension == 3 + decoupled_plant.n
        assert assemble_closed_loop(decoupled_plant, ctrl, class_exo).is_hurwitz
        assert certify_class(members, ctrl, class_exo).passed
        assert record.residual < 1e-10
