import math

import numpy as np
import pytest

from qcap.channels import (
    amplitude_damping,
    dephasing,
    depolarizing,
    identity_channel,
    random_channel,
    replacement,
)
from qcap.entropy import binary_entropy, mutual_information
from qcap.errors import InfeasibleError, ValidationError
from qcap.operators import (
    ConstraintObservable,
    DensityMatrix,
    expected_value,
    gibbs_state,
    maximally_mixed,
    number_operator,
    pure_density,
    random_density,
    random_hermitian,
    solve_beta,
    trace_distance,
)
from qcap.optimize import (
    CapacityResult,
    ConstraintSpec,
    SolverOptions,
    attainment_check,
    linear_oracle,
    maximize_chi,
    maximize_mutual_info,
    mutual_info_gradient,
    truncation_sweep,
    two_copy_check,
)

TWO_LEVEL = ConstraintObservable(np.diag([0.0, 1.0]))
FAST = SolverOptions(restarts=3)


def traceless_direction(dim, rng):
    d = random_hermitian(dim, rng)
    return d - np.trace(d).real / dim * np.eye(dim)


class TestConstraintSpec:
    def test_infeasible_energy(self):
        with pytest.raises(InfeasibleError):
            ConstraintSpec(TWO_LEVEL, -0.1)

    def test_tight_ground_flag(self):
        assert ConstraintSpec(TWO_LEVEL, 0.0).tight_ground
        assert not ConstraintSpec(TWO_LEVEL, 0.2).tight_ground


class TestGradient:
    def test_identity_channel_matches_neg_two_log(self):
        rng = np.random.default_rng(0)
        s = random_density(2, rng)
        grad = mutual_info_gradient(s, identity_channel(2))
        w, v = np.linalg.eigh(s.matrix)
        expected = -2.0 * (v * np.log(w)) @ v.conj().T
        offset = grad - expected
        # equal up to a multiple of the identity
        assert np.abs(offset - np.trace(offset) / 2.0 * np.eye(2)).max() < 1e-10

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(1)
        step = 1e-5
        for _ in range(10):
            ch = random_channel(2, 2, 2, rng)
            s = DensityMatrix(0.5 * random_density(2, rng).matrix + 0.25 * np.eye(2))
            grad = mutual_info_gradient(s, ch)
            for _ in range(20):
                d = traceless_direction(2, rng)
                plus = mutual_information(DensityMatrix(s.matrix + step * d), ch)
                minus = mutual_information(DensityMatrix(s.matrix - step * d), ch)
                fd = (plus - minus) / (2.0 * step)
                analytic = float(np.tensordot(grad, d.T, axes=2).real)
                assert abs(fd - analytic) <= 1e-5 * max(1.0, abs(fd))

    def test_replacement_channel_constant_objective(self):
        rng = np.random.default_rng(2)
        ch = replacement(random_density(2, rng))
        s = random_density(2, rng)
        grad = mutual_info_gradient(s, ch)
        for _ in range(10):
            d = traceless_direction(2, rng)
            assert abs(float(np.tensordot(grad, d.T, axes=2).real)) < 1e-6

    def test_rank_deficient_input_warns(self):
        with pytest.warns(UserWarning, match="rank-deficient"):
            mutual_info_gradient(pure_density([1.0, 0.0]), identity_channel(2))


class TestLinearOracle:
    def test_unconstrained_optimum_feasible(self):
        res = linear_oracle(np.diag([1.0, 0.0]), ConstraintSpec(TWO_LEVEL, 0.5))
        assert abs(res.value - 1.0) < 1e-12
        assert res.multiplier == 0.0
        assert trace_distance(res.state, pure_density([1.0, 0.0])) < 1e-10

    def test_boundary_mixture(self):
        res = linear_oracle(np.diag([0.0, 1.0]), ConstraintSpec(TWO_LEVEL, 0.3))
        assert abs(res.value - 0.3) < 1e-9
        assert np.allclose(np.diag(res.state.matrix).real, [0.7, 0.3], atol=1e-9)

    def test_residual_certificate(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            g = random_hermitian(6, rng)
            f = ConstraintObservable(np.diag(np.sort(rng.random(6) * 3.0)))
            energy = f.f_min + (f.f_max - f.f_min) * 0.3
            res = linear_oracle(g, ConstraintSpec(f, energy))
            scale = max(1.0, np.abs(np.linalg.eigvalsh(g)).max())
            assert res.residual <= 1e-8 * scale
            assert expected_value(res.state, f) <= energy + 1e-8

    def test_grid_search_oracle(self):
        # dense grid over two-eigenvector mixtures built from G - mu F across
        # a mu sweep; the oracle value must match the best of them
        rng = np.random.default_rng(4)
        for _ in range(10):
            g = random_hermitian(6, rng)
            f = ConstraintObservable(np.diag(np.sort(rng.random(6) * 2.0 + 0.1)))
            energy = f.f_min + 0.25 * (f.f_max - f.f_min)
            cspec = ConstraintSpec(f, energy)
            res = linear_oracle(g, cspec)
            best = -math.inf
            scale = np.abs(np.linalg.eigvalsh(g)).max()
            for mu in np.linspace(0.0, 4.0 * scale / max(f.ground_gap, 1e-6), 400):
                w, v = np.linalg.eigh(g - mu * f.matrix)
                for i in range(6):
                    for j in range(6):
                        ci = float(np.vdot(v[:, i], f.matrix @ v[:, i]).real)
                        cj = float(np.vdot(v[:, j], f.matrix @ v[:, j]).real)
                        vi = float(np.vdot(v[:, i], g @ v[:, i]).real)
                        vj = float(np.vdot(v[:, j], g @ v[:, j]).real)
                        if ci <= energy + 1e-12:
                            best = max(best, vi)
                        if ci < energy < cj:
                            t = (cj - energy) / (cj - ci)
                            best = max(best, t * vi + (1.0 - t) * vj)
            assert res.value >= best - 1e-6
            assert res.upper_bound >= best - 1e-9


class TestMaximizeMutualInfo:
    def test_identity_symmetric_budget(self):
        res = maximize_mutual_info(identity_channel(2), ConstraintSpec(TWO_LEVEL, 0.5))
        assert abs(res.value - 2.0 * math.log(2.0)) < 1e-5
        assert trace_distance(res.optimizer, maximally_mixed(2)) < 1e-4
        assert res.certified

    def test_identity_constrained_gibbs_closed_form(self):
        res = maximize_mutual_info(identity_channel(2), ConstraintSpec(TWO_LEVEL, 0.3))
        assert abs(res.value - 2.0 * binary_entropy(0.3)) < 1e-5
        assert res.duality_gap <= 1e-6
        assert trace_distance(res.optimizer, DensityMatrix(np.diag([0.7, 0.3]))) < 1e-4

    def test_depolarizing_inactive_constraint_grid_oracle(self):
        ch = depolarizing(0.5, 2)
        res = maximize_mutual_info(ch, ConstraintSpec(TWO_LEVEL, 0.9))
        best = max(
            mutual_information(DensityMatrix(np.diag([(1 + r) / 2, (1 - r) / 2])), ch)
            for r in np.linspace(-0.999, 0.999, 2001)
        )
        assert abs(res.value - best) < 1e-5

    def test_feasibility_and_certificate_on_random_channels(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            ch = random_channel(2, 2, 2, rng)
            energy = 0.15 + 0.5 * rng.random()
            res = maximize_mutual_info(ch, ConstraintSpec(TWO_LEVEL, energy))
            assert res.certified
            assert res.constraint_slack >= -1e-8
            assert res.duality_gap <= 1e-6

    def test_certified_against_bloch_grid(self):
        rng = np.random.default_rng(6)
        ch = random_channel(2, 2, 2, rng)
        cspec = ConstraintSpec(TWO_LEVEL, 0.35)
        res = maximize_mutual_info(ch, cspec)
        best = -math.inf
        for x in np.linspace(-1.0, 1.0, 61):
            for z in np.linspace(-1.0, 1.0, 121):
                if x * x + z * z > 1.0:
                    continue
                s = DensityMatrix(0.5 * np.array([[1 + z, x], [x, 1 - z]], dtype=complex))
                if expected_value(s, TWO_LEVEL) <= 0.35:
                    best = max(best, mutual_information(s, ch))
        assert res.value >= best - 1e-5
        assert res.value <= best + res.duality_gap + 1e-3  # grid is coarse

    def test_tight_ground_restricts_support(self):
        f = ConstraintObservable(np.diag([0.0, 0.0, 1.0]))
        ch = identity_channel(3)
        res = maximize_mutual_info(ch, ConstraintSpec(f, 0.0))
        # ground space is two-dimensional: best is 2 ln 2
        assert abs(res.value - 2.0 * math.log(2.0)) < 1e-5
        assert expected_value(res.optimizer, f) <= 1e-8

    def test_monotone_and_concave_in_energy(self):
        ch = amplitude_damping(0.3)
        values = {
            e: maximize_mutual_info(ch, ConstraintSpec(TWO_LEVEL, e)).value
            for e in (0.1, 0.25, 0.4)
        }
        assert values[0.1] <= values[0.25] + 2e-6
        assert values[0.25] <= values[0.4] + 2e-6
        assert values[0.25] >= 0.5 * (values[0.1] + values[0.4]) - 2e-6


class TestMaximizeChi:
    def test_classical_cost_capacity(self):
        res = maximize_chi(dephasing(0.0), ConstraintSpec(TWO_LEVEL, 0.3), m=2)
        # 1-D classical oracle: max_{p <= E} h(p) = h(0.3)
        oracle = max(binary_entropy(p) for p in np.linspace(0.0, 0.3, 30001))
        assert abs(res.value - oracle) < 1e-4
        assert "HEURISTIC" in res.flags

    def test_orthogonal_ensemble_saturates_log_dim(self):
        f = number_operator(3)
        res = maximize_chi(identity_channel(3), ConstraintSpec(f, 2.0), m=3)
        assert abs(res.value - math.log(3.0)) < 1e-5

    def test_single_member_is_zero(self):
        res = maximize_chi(identity_channel(2), ConstraintSpec(TWO_LEVEL, 0.3), m=1)
        assert res.value == 0.0

    def test_feasible_and_below_ea(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            ch = random_channel(2, 2, 2, rng)
            cspec = ConstraintSpec(TWO_LEVEL, 0.2 + 0.4 * rng.random())
            chi = maximize_chi(ch, cspec, m=2, opts=FAST)
            ea = maximize_mutual_info(ch, cspec, opts=FAST)
            assert chi.constraint_slack >= -1e-8
            assert chi.value <= ea.value + 1e-6

    def test_invalid_ensemble_size(self):
        with pytest.raises(ValidationError):
            maximize_chi(identity_channel(2), ConstraintSpec(TWO_LEVEL, 0.3), m=0)


class TestTwoCopy:
    def test_identity_channel_exact(self):
        report = two_copy_check(identity_channel(2), ConstraintSpec(TWO_LEVEL, 0.5))
        assert abs(report.single_copy - 2.0 * math.log(2.0)) < 1e-5
        assert abs(report.two_copy - 2.0 * report.single_copy) <= report.tolerance
        assert report.upper_ok and report.lower_ok

    def test_product_witness_doubles_single_copy(self):
        report = two_copy_check(dephasing(0.3), ConstraintSpec(TWO_LEVEL, 0.4))
        assert abs(report.product_witness - 2.0 * report.single_copy) < 1e-6
        assert report.upper_ok and report.lower_ok


class TestTruncationSweep:
    def test_constant_channel_constant_series(self):
        series = truncation_sweep(
            lambda cutoff: identity_channel(2),
            lambda cutoff: ConstraintSpec(TWO_LEVEL, 0.3),
            [2, 3, 4],
        )
        values = [p.value for p in series.points]
        assert max(values) - min(values) <= 2e-6
        assert series.monotone_ok

    def test_truncated_identity_approaches_gibbs_limit(self):
        energy = 0.5
        series = truncation_sweep(
            lambda cutoff: identity_channel(cutoff),
            lambda cutoff: ConstraintSpec(number_operator(cutoff), energy),
            [2, 4, 8, 12],
        )
        assert series.monotone_ok
        # per-cutoff closed form: 2 H(gibbs state at the same budget)
        from qcap.entropy import entropy

        for point in series.points:
            f = number_operator(point.cutoff)
            beta = solve_beta(f, energy)
            gibbs = maximally_mixed(point.cutoff) if beta == 0.0 else gibbs_state(f, beta)
            assert abs(point.value - 2.0 * entropy(gibbs)) < 1e-5
        assert series.final_increment < 1e-3

    def test_rejects_unsorted_cutoffs(self):
        with pytest.raises(ValidationError):
            truncation_sweep(
                lambda c: identity_channel(2),
                lambda c: ConstraintSpec(TWO_LEVEL, 0.3),
                [4, 2],
            )


class TestAttainment:
    def test_identity_channel_unit_scale_feasible(self):
        report = attainment_check(identity_channel(2), ConstraintSpec(TWO_LEVEL, 0.3))
        assert report.certified
        assert report.margin_at_unit >= -1e-10

    def test_replacement_to_ground_feasible(self):
        ch = replacement(pure_density([1.0, 0.0]))
        report = attainment_check(ch, ConstraintSpec(TWO_LEVEL, 0.3))
        assert report.certified
        assert report.margin_at_unit >= -1e-10

    def test_unital_channel_margin_matches_eigensolve(self):
        ch = dephasing(0.3)
        cspec = ConstraintSpec(TWO_LEVEL, 0.3)
        report = attainment_check(ch, cspec)
        oracle = float(
            np.linalg.eigvalsh(TWO_LEVEL.matrix - ch.dual_apply(TWO_LEVEL.matrix))[0]
        )
        assert abs(report.margin_at_unit - oracle) < 1e-12
        assert report.certified == (report.best_margin >= -1e-10)

    def test_heating_channel_not_certified(self):
        # replacement onto the excited state pumps cost into F's kernel:
        # no positive scale c can satisfy Phi*[cF] <= F
        ch = replacement(pure_density([0.0, 1.0]))
        report = attainment_check(ch, ConstraintSpec(TWO_LEVEL, 0.3))
        assert not report.certified


class TestCapacityResultInvariants:
    def test_rejects_negative_gap(self):
        with pytest.raises(ValidationError):
            CapacityResult(
                value=1.0,
                optimizer=maximally_mixed(2),
                duality_gap=-1.0,
                iterations=1,
                constraint_slack=0.0,
            )

    def test_rejects_constraint_violation(self):
        with pytest.raises(ValidationError):
            CapacityResult(
                value=1.0,
                optimizer=maximally_mixed(2),
                duality_gap=0.0,
                iterations=1,
                constraint_slack=-1.0,
            )
