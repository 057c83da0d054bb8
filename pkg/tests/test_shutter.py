import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nshutter.linalg import Operator, StateVector, tensor_operator
from nshutter.prepost import DegenerateABLError, postselect
from nshutter.shutter import (
    ScenarioError,
    ZeroBranchError,
    build_scenario,
    certainty_orthogonality_report,
    default_scenario,
    exact_probabilities,
    interact,
    joint_initial,
    postselection_basis,
    postselection_prob_given_reflection,
    postselection_subspace,
    reflected_reduced_density,
    reflected_state,
    transmitted_in_postselection_basis,
    transmitted_state,
)

from .conftest import SQ2, SQ3, SQ6

EQ7 = np.array([0, 0, SQ6 / 4, SQ6 / 4, -SQ2 / 4, SQ2 / 4])


def unit(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


class TestDefaultScenario:
    def test_three_shutters(self, scenario):
        np.testing.assert_allclose(scenario.pre_state.amplitudes, np.ones(3) / SQ3)
        np.testing.assert_allclose(scenario.post_state.amplitudes, np.array([1, 1, -1]) / SQ3, atol=1e-15)
        np.testing.assert_allclose(scenario.photon_amplitudes, [1 / SQ2, 1 / SQ2])
        assert scenario.shutters == ("a", "b", "c")
        assert scenario.photon_modes == ("a", "b")

    def test_photon_only_at_a(self):
        s = default_scenario(photon_amplitudes=[1, 0])
        assert s.photon_amplitudes[0] == 1

    def test_two_shutters_need_post_state(self):
        with pytest.raises(ScenarioError):
            default_scenario(2)

    def test_two_shutters_with_post_state(self):
        s = default_scenario(2, post_state=[1, 0])
        assert s.photon_modes == ("a",)

    def test_unnormalized_photon(self):
        with pytest.raises(ScenarioError):
            default_scenario(photon_amplitudes=[1, 1])

    def test_photon_mode_not_a_shutter(self):
        with pytest.raises(ScenarioError):
            build_scenario("abc", ["a", "z"], [1 / SQ2, 1 / SQ2])

    def test_photon_cannot_reach_every_shutter(self):
        with pytest.raises(ScenarioError):
            build_scenario("abc", "abc", np.ones(3) / SQ3)


class TestJointAndInteraction:
    def test_joint_uniform(self, scenario):
        joint = joint_initial(scenario)
        np.testing.assert_allclose(joint.amplitudes, np.full(6, 1 / SQ6), atol=1e-15)
        assert joint.shape.names == ("photon", "shutter")

    def test_joint_photon_at_a(self):
        joint = joint_initial(default_scenario(photon_amplitudes=[1, 0]))
        np.testing.assert_allclose(joint.amplitudes, [1 / SQ3] * 3 + [0] * 3, atol=1e-15)

    def test_split_matches_written_branches(self, scenario):
        split = interact(joint_initial(scenario))
        shape = scenario.joint_shape
        reflected = StateVector.from_labels(shape, {("a'", "a"): 1 / SQ6, ("b'", "b"): 1 / SQ6})
        transmitted = StateVector.from_labels(
            shape, {("a'", "b"): 1 / SQ6, ("a'", "c"): 1 / SQ6, ("b'", "a"): 1 / SQ6, ("b'", "c"): 1 / SQ6}
        )
        assert split.reflected.allclose(reflected, atol=1e-15)
        assert split.transmitted.allclose(transmitted, atol=1e-15)

    def test_branch_probabilities(self, scenario):
        split = interact(joint_initial(scenario))
        # 2 x (1/sqrt 6)^2 and 4 x (1/sqrt 6)^2
        assert split.p_reflect == pytest.approx(1 / 3, abs=1e-15)
        assert split.p_transmit == pytest.approx(2 / 3, abs=1e-15)

    def test_mismatched_labels_transmit(self, scenario):
        joint = StateVector.basis(scenario.joint_shape, "a'", "c")
        split = interact(joint)
        assert split.p_reflect == 0 and split.p_transmit == 1

    def test_requires_photon_shutter_shape(self, shutter3):
        with pytest.raises(ScenarioError):
            interact(StateVector.basis(shutter3, "a"))

    @settings(max_examples=300, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_branch_completeness(self, m, seed):
        rng = np.random.default_rng(seed)
        shutters = "abcdef"[:m]
        n = int(rng.integers(1, m))
        modes = list(rng.choice(list(shutters), size=n, replace=False))
        s = build_scenario(shutters, modes, unit(rng, n), unit(rng, m), unit(rng, m))
        joint = joint_initial(s)
        split = interact(joint)
        assert (split.reflected + split.transmitted).allclose(joint, atol=1e-10)
        assert split.p_reflect + split.p_transmit == pytest.approx(1, abs=1e-10)
        assert abs(np.vdot(split.reflected.amplitudes, split.transmitted.amplitudes)) <= 1e-15


class TestTransmitted:
    def test_four_halves(self, scenario):
        tr = transmitted_state(scenario)
        for labels in [("a'", "b"), ("a'", "c"), ("b'", "a"), ("b'", "c")]:
            assert tr.amplitude(*labels) == pytest.approx(0.5, abs=1e-15)
        assert tr.amplitude("a'", "a") == 0 and tr.amplitude("b'", "b") == 0

    def test_fully_blocked(self):
        s = default_scenario(photon_amplitudes=[1, 0], pre_state=[1, 0, 0])
        with pytest.raises(ZeroBranchError):
            transmitted_state(s)

    def test_unit_norm(self):
        s = default_scenario(photon_amplitudes=[0.6, 0.8j])
        assert transmitted_state(s).norm() == pytest.approx(1, abs=1e-12)


class TestPostselectionSubspace:
    def test_two_dimensional(self, scenario):
        sub = postselection_subspace(scenario)
        assert sub.rank == 2
        g = np.array([[np.vdot(u.amplitudes, v.amplitudes) for v in sub.basis] for u in sub.basis])
        np.testing.assert_allclose(g, np.eye(2), atol=1e-15)

    def test_single_mode(self):
        s = build_scenario("abc", ["a"], [1])
        assert postselection_subspace(s).rank == 1

    def test_projector_is_identity_photon_times_post(self, scenario):
        expected = tensor_operator(Operator.identity(scenario.photon_shape), Operator.outer(scenario.post_state))
        assert postselection_subspace(scenario).projector().allclose(expected)


class TestPostselectionBasisCoefficients:
    def test_six_components(self, scenario):
        np.testing.assert_allclose(transmitted_in_postselection_basis(scenario), EQ7, atol=1e-10)

    def test_basis_order(self, scenario):
        basis = postselection_basis(scenario)
        primes = [np.array([1, 1, 2]) / SQ6, np.array([1, -1, 0]) / SQ2]
        a, b = np.array([1, 0]), np.array([0, 1])
        np.testing.assert_allclose(basis[2].amplitudes, np.kron(a, primes[0]), atol=1e-15)
        np.testing.assert_allclose(basis[5].amplitudes, np.kron(b, primes[1]), atol=1e-15)

    def test_parseval(self):
        s = default_scenario(photon_amplitudes=[0.6, 0.8])
        c = transmitted_in_postselection_basis(s)
        assert np.sum(np.abs(c) ** 2) == pytest.approx(1, abs=1e-12)

    def test_reconstructs(self, scenario):
        c = transmitted_in_postselection_basis(scenario)
        mat = np.array([b.amplitudes for b in postselection_basis(scenario)])
        np.testing.assert_allclose(c @ mat, transmitted_state(scenario).amplitudes, atol=1e-10)

    def test_general_scenario_uses_extension(self):
        rng = np.random.default_rng(8)
        s = build_scenario("abcd", "abc", unit(rng, 3), unit(rng, 4), unit(rng, 4))
        c = transmitted_in_postselection_basis(s)
        assert c.shape == (12,)
        mat = np.array([b.amplitudes for b in postselection_basis(s)])
        np.testing.assert_allclose(c @ mat, transmitted_state(s).amplitudes, atol=1e-10)
        # Leading block holds the overlaps with the post-selection subspace.
        p = postselection_subspace(s).projector().apply(transmitted_state(s))
        assert np.linalg.norm(c[: s.mode_count]) == pytest.approx(p.norm(), abs=1e-12)


class TestReflectedDensity:
    def test_half_half(self, scenario):
        np.testing.assert_allclose(reflected_reduced_density(scenario).entries, np.diag([0.5, 0.5, 0]), atol=1e-10)

    def test_photon_at_a(self):
        w = reflected_reduced_density(default_scenario(photon_amplitudes=[1, 0]))
        np.testing.assert_allclose(w.entries, np.diag([1, 0, 0]), atol=1e-12)

    def test_unit_trace(self):
        w = reflected_reduced_density(default_scenario(photon_amplitudes=[0.6, 0.8]))
        assert w.trace() == pytest.approx(1, abs=1e-12)

    def test_no_reflection(self):
        s = default_scenario(pre_state=[0, 0, 1])
        with pytest.raises(ZeroBranchError):
            reflected_reduced_density(s)


class TestPostselectionGivenReflection:
    def test_one_third(self, scenario):
        assert postselection_prob_given_reflection(scenario) == pytest.approx(1 / 3, abs=1e-10)

    def test_post_state_c(self):
        s = default_scenario(post_state=[0, 0, 1])
        assert postselection_prob_given_reflection(s) == pytest.approx(0, abs=1e-15)

    def test_post_state_equal_to_reflected_shutter_state(self):
        # Photon only at a: the reflected shutter state is |a>.
        s = default_scenario(photon_amplitudes=[1, 0], post_state=[1, 0, 0])
        assert postselection_prob_given_reflection(s) == pytest.approx(1, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_two_routes_agree(self, m, seed):
        rng = np.random.default_rng(seed)
        shutters = "abcdef"[:m]
        n = int(rng.integers(1, m))
        s = build_scenario(shutters, shutters[:n], unit(rng, n), unit(rng, m), unit(rng, m))
        route_joint = postselect(reflected_state(s), postselection_subspace(s)).probability
        assert postselection_prob_given_reflection(s) == pytest.approx(route_joint, abs=1e-12)


class TestExactProbabilities:
    def test_default(self, scenario):
        p = exact_probabilities(scenario)
        assert p.p_reflect == pytest.approx(1 / 3)
        assert p.p_post_given_reflect == pytest.approx(1 / 3)
        assert p.p_post_given_transmit == 0.0
        assert p.p_reflect_and_post == pytest.approx(1 / 9)
        assert sum(p.cells().values()) == pytest.approx(1)


class TestCertaintyReport:
    def test_default(self, scenario):
        r = certainty_orthogonality_report(scenario)
        assert r.residual <= 1e-10
        assert r.certain == {"a": True, "b": True}
        assert r.equivalence_holds

    def test_post_equals_pre(self):
        s = default_scenario(post_state=np.ones(3) / SQ3)
        r = certainty_orthogonality_report(s)
        # Transmitted overlap with |x'>|psi1>: alpha_x * 2/3 / sqrt(p_t); residual = (2/3)/sqrt(2/3).
        assert r.residual == pytest.approx((2 / 3) / np.sqrt(2 / 3), abs=1e-12)
        assert r.certain == {"a": False, "b": False}
        assert r.equivalence_holds

    def test_arbitrary_photon(self):
        r = certainty_orthogonality_report(default_scenario(photon_amplitudes=[0.6, 0.8]))
        assert r.residual <= 1e-10 and r.all_certain

    def test_degenerate_abl_propagates(self):
        # post = |c>: <c|P_a|pre> = 0 and <c|(1-P_a)|pre> = 0 when pre has no c weight.
        s = default_scenario(pre_state=[1 / SQ2, 1 / SQ2, 0], post_state=[0, 0, 1])
        with pytest.raises((DegenerateABLError, ZeroBranchError)):
            certainty_orthogonality_report(s)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_photon_coefficient_independence(self, seed):
        rng = np.random.default_rng(seed)
        s = default_scenario(photon_amplitudes=unit(rng, 2))
        assert certainty_orthogonality_report(s).residual <= 1e-10

    def test_naive_sign_flip_fails_for_four_shutters(self):
        # (a + b + c - d)/2 is not ABL-certain for every photon mode when M = 4.
        s = default_scenario(4, post_state=np.array([1, 1, 1, -1]) / 2)
        r = certainty_orthogonality_report(s)
        assert not r.all_certain and not r.orthogonal and r.equivalence_holds
