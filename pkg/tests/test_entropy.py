import math

import numpy as np
import pytest

from qcap.channels import (
    compose,
    dephasing,
    depolarizing,
    identity_channel,
    random_channel,
    replacement,
)
from qcap.entropy import (
    Ensemble,
    binary_entropy,
    entropy,
    entropy_exchange,
    entropy_upper_bound,
    free_energy_residual,
    holevo_chi,
    log_partition,
    mutual_information,
    mutual_information_via_relent,
    relative_entropy,
    thermal_entropy,
)
from qcap.errors import SizeCapError, ValidationError
from qcap.operators import (
    ConstraintObservable,
    DensityMatrix,
    gibbs_state,
    maximally_mixed,
    number_operator,
    pure_density,
    random_density,
    random_pure_vector,
)


class TestEntropy:
    def test_pure_state_zero(self):
        assert entropy(pure_density([0.0, 1.0])) == 0.0

    def test_maximally_mixed(self):
        for d in (2, 3, 7):
            assert abs(entropy(maximally_mixed(d)) - math.log(d)) < 1e-12

    def test_dyadic_spectrum(self):
        s = DensityMatrix(np.diag([0.5, 0.25, 0.25]))
        assert abs(entropy(s) - 1.5 * math.log(2.0)) < 1e-12

    def test_concavity_on_random_ensembles(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            dim = int(rng.integers(2, 9))
            p = rng.dirichlet(np.ones(3))
            states = [random_density(dim, rng) for _ in range(3)]
            avg = DensityMatrix(sum(pi * s.matrix for pi, s in zip(p, states)))
            assert entropy(avg) - sum(pi * entropy(s) for pi, s in zip(p, states)) >= -1e-10


class TestRelativeEntropy:
    def test_zero_iff_equal(self):
        rng = np.random.default_rng(1)
        s = random_density(3, rng)
        assert relative_entropy(s, s) < 1e-12

    def test_disjoint_support_is_infinite(self):
        zero, one = pure_density([1.0, 0.0]), pure_density([0.0, 1.0])
        assert relative_entropy(zero, one) == math.inf

    def test_commuting_closed_form(self):
        rho = DensityMatrix(np.diag([0.5, 0.5]))
        sigma = DensityMatrix(np.diag([0.75, 0.25]))
        assert abs(relative_entropy(rho, sigma) - 0.5 * math.log(4.0 / 3.0)) < 1e-12

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            dim = int(rng.integers(2, 9))
            val = relative_entropy(random_density(dim, rng), random_density(dim, rng))
            assert val >= 0.0


class TestEntropyExchange:
    def test_unitary_channel_zero(self):
        rng = np.random.default_rng(3)
        assert entropy_exchange(random_density(3, rng), identity_channel(3)) == 0.0

    def test_dephasing_binary_entropy(self):
        for p in (0.1, 0.3):
            val = entropy_exchange(maximally_mixed(2), dephasing(p))
            assert abs(val - binary_entropy(p)) < 1e-12

    def test_invariant_under_kraus_rank_reduction(self):
        from qcap.channels import KrausChannel, reduce_kraus_rank

        ch = dephasing(0.25)
        doubled = KrausChannel([op / math.sqrt(2.0) for op in ch.ops for _ in range(2)])
        rng = np.random.default_rng(4)
        s = random_density(2, rng)
        assert abs(
            entropy_exchange(s, doubled) - entropy_exchange(s, reduce_kraus_rank(doubled))
        ) < 1e-8


class TestMutualInformation:
    def test_identity_channel_doubles_entropy(self):
        val = mutual_information(maximally_mixed(2), identity_channel(2))
        assert abs(val - 2.0 * math.log(2.0)) < 1e-12

    def test_pure_input_zero(self):
        rng = np.random.default_rng(5)
        ch = random_channel(2, 2, 2, rng)
        assert abs(mutual_information(pure_density(random_pure_vector(2, rng)), ch)) < 1e-8

    def test_replacement_channel_zero(self):
        rng = np.random.default_rng(6)
        ch = replacement(random_density(2, rng))
        assert abs(mutual_information(random_density(2, rng), ch)) < 1e-8

    def test_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            s = random_density(3, rng)
            ch = random_channel(3, 3, 2, rng)
            val = mutual_information(s, ch)
            assert -1e-9 <= val <= 2.0 * entropy(s) + 1e-9


class TestMutualInformationRoutes:
    def test_identity_qubit(self):
        val = mutual_information_via_relent(maximally_mixed(2), identity_channel(2))
        assert abs(val - 2.0 * math.log(2.0)) < 1e-10

    def test_pure_state_zero(self):
        rng = np.random.default_rng(8)
        ch = random_channel(2, 2, 2, rng)
        assert mutual_information_via_relent(pure_density(random_pure_vector(2, rng)), ch) < 1e-8

    def test_cross_route_agreement(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            dim = int(rng.integers(2, 4))
            s = random_density(dim, rng)
            ch = random_channel(dim, dim, int(rng.integers(1, 4)), rng)
            a = mutual_information(s, ch)
            b = mutual_information_via_relent(s, ch)
            assert abs(a - b) < 1e-7

    def test_size_cap(self):
        with pytest.raises(SizeCapError):
            mutual_information_via_relent(
                maximally_mixed(4), identity_channel(4), dim_cap=32
            )

    def test_data_processing(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            s = random_density(2, rng)
            inner = random_channel(2, 2, 2, rng)
            outer = random_channel(2, 2, 2, rng)
            assert (
                mutual_information(s, compose(outer, inner))
                <= mutual_information(s, inner) + 1e-8
            )


class TestEnsemble:
    def test_probability_validation(self):
        s = maximally_mixed(2)
        with pytest.raises(ValidationError):
            Ensemble(((0.6, s), (0.6, s)))
        with pytest.raises(ValidationError):
            Ensemble(())

    def test_average_state_and_cost(self):
        ens = Ensemble(((0.7, pure_density([1.0, 0.0])), (0.3, pure_density([0.0, 1.0]))))
        f = ConstraintObservable(np.diag([0.0, 1.0]))
        assert np.allclose(np.diag(ens.average_state().matrix).real, [0.7, 0.3])
        assert abs(ens.average_cost(f) - 0.3) < 1e-12


class TestHolevoChi:
    def test_single_member_zero(self):
        ens = Ensemble(((1.0, maximally_mixed(2)),))
        assert holevo_chi(ens, identity_channel(2)) == 0.0

    def test_orthogonal_pure_states(self):
        ens = Ensemble(((0.5, pure_density([1.0, 0.0])), (0.5, pure_density([0.0, 1.0]))))
        assert abs(holevo_chi(ens, identity_channel(2)) - math.log(2.0)) < 1e-12

    def test_biased_classical_oracle(self):
        # noiseless classical bit: chi = H(p) of the input distribution
        ens = Ensemble(((0.7, pure_density([1.0, 0.0])), (0.3, pure_density([0.0, 1.0]))))
        assert abs(holevo_chi(ens, dephasing(0.0)) - binary_entropy(0.3)) < 1e-10

    def test_two_forms_agree_on_random_ensembles(self):
        # the cross-check is internal: holevo_chi raises if the direct and
        # relative-entropy forms disagree beyond 1e-8
        rng = np.random.default_rng(11)
        for _ in range(30):
            dim = int(rng.integers(2, 5))
            k = int(rng.integers(2, 5))
            p = rng.dirichlet(np.ones(k))
            members = tuple((float(pi), random_density(dim, rng)) for pi in p)
            ch = random_channel(dim, dim, 2, rng)
            assert holevo_chi(Ensemble(members), ch) >= 0.0


class TestFreeEnergy:
    def test_gibbs_state_residual_tiny(self):
        f = number_operator(6)
        beta = 0.8
        s = gibbs_state(f, beta)
        assert free_energy_residual(s, f, beta) < 1e-10
        assert relative_entropy(s, s) < 1e-12

    def test_identity_on_random_full_rank_states(self):
        rng = np.random.default_rng(12)
        f = ConstraintObservable(np.diag([0.0, 1.0]))
        for _ in range(50):
            s = random_density(2, rng)
            assert free_energy_residual(s, f, 1.0) < 1e-8

    def test_entropy_bound_for_feasible_states(self):
        rng = np.random.default_rng(13)
        f = number_operator(5)
        for _ in range(50):
            s = random_density(5, rng)
            energy = float(np.trace(s.matrix @ f.matrix).real)
            for beta in (0.3, 1.0, 2.0):
                assert entropy(s) <= entropy_upper_bound(f, beta, energy) + 1e-10

    def test_log_partition_closed_form(self):
        f = ConstraintObservable(np.diag([0.0, 1.0]))
        beta = 1.3
        assert abs(log_partition(f, beta) - math.log(1.0 + math.exp(-beta))) < 1e-12


class TestScalarHelpers:
    def test_binary_entropy_edges(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert abs(binary_entropy(0.5) - math.log(2.0)) < 1e-15

    def test_thermal_entropy_values(self):
        assert thermal_entropy(0.0) == 0.0
        assert abs(thermal_entropy(2.0) - (3.0 * math.log(3.0) - 2.0 * math.log(2.0))) < 1e-14


class TestSubadditivity:
    def test_tensor_output_entropy_subadditive(self):
        from qcap.channels import tensor
        from qcap.operators import partial_trace

        rng = np.random.default_rng(14)
        ch = random_channel(2, 2, 2, rng)
        doubled = tensor(ch, ch)
        for _ in range(10):
            joint_in = random_density(4, rng)
            out = doubled.apply(joint_in)
            marg_a = partial_trace(out, (2, 2), keep=0)
            marg_b = partial_trace(out, (2, 2), keep=1)
            assert entropy(out) <= entropy(marg_a) + entropy(marg_b) + 1e-9
