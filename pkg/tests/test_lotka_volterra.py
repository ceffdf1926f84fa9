import json

import numpy as np
import pytest

from conftest import WORKED_LV
from kcoop.lotka_volterra import (
    BLOWUP,
    LVError,
    LVSystem,
    check_k_cooperative_empirical,
    literal_conditions,
    load_lv,
    lv_jacobian,
    lv_structural_check,
    lv_vector_field,
    sample_pairs,
    simulate,
)
from kcoop.sign_pattern import SignPatternError, sign_pattern_of
from kcoop.transform_search import Transform, Verdict
from kcoop.verification import averaged_jacobian, in_Pk_minus

# canonical even pattern with strong self-limitation
BANDED = np.array([
    [-2.0, 0.4, 0.0, -0.4],
    [0.4, -2.0, 0.4, 0.0],
    [0.0, 0.4, -2.0, 0.4],
    [-0.4, 0.0, 0.4, -2.0],
])


def finite_difference_jacobian(sys, x, h=1e-6):
    n = sys.n
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (lv_vector_field(sys, x + e) - lv_vector_field(sys, x - e)) / (2 * h)
    return jac


@pytest.fixture
def worked_lv():
    return load_lv(WORKED_LV)


class TestSystem:
    def test_validation(self):
        with pytest.raises(LVError):
            LVSystem(np.ones(3), np.eye(4))
        with pytest.raises(LVError):
            LVSystem(np.ones((2, 2)), np.eye(2))
        with pytest.raises(LVError):
            LVSystem(np.ones(2), [[1.0, np.inf], [0.0, 1.0]])

    def test_arrays_are_read_only(self, worked_lv):
        with pytest.raises(ValueError):
            worked_lv.A[0, 0] = 1.0

    def test_field(self):
        sys = LVSystem([1.0, -1.0], [[-1.0, 2.0], [0.5, -1.0]])
        x = np.array([2.0, 3.0])
        # x1 (1 - 2 + 6), x2 (-1 + 1 - 3)
        assert np.allclose(lv_vector_field(sys, x), [10.0, -9.0])

    def test_batched_field(self, worked_lv, rng):
        xs = rng.uniform(0.1, 2.0, size=(4, 6))
        out = worked_lv.field(0.0, xs)
        for c in range(6):
            assert np.allclose(out[:, c], lv_vector_field(worked_lv, xs[:, c]))

    def test_jacobian_closed_form(self):
        sys = LVSystem([1.0, -1.0], [[-1.0, 2.0], [0.5, -1.0]])
        x = np.array([2.0, 3.0])
        expected = [[1.0 - 2.0 + 6.0 - 2.0, 4.0], [1.5, -1.0 + 1.0 - 3.0 - 3.0]]
        assert np.allclose(lv_jacobian(sys, x), expected)

    def test_jacobian_matches_finite_differences(self, worked_lv, rng):
        for _ in range(50):
            x = rng.uniform(0.1, 2.0, 4)
            jac = lv_jacobian(worked_lv, x)
            fd = finite_difference_jacobian(worked_lv, x)
            assert np.allclose(jac, fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(jac)))

    def test_off_diagonal_signs_follow_a(self, worked_lv, rng):
        x = rng.uniform(0.1, 2.0, 4)
        assert sign_pattern_of(lv_jacobian(worked_lv, x)) == sign_pattern_of(worked_lv.A)

    def test_state_shape(self, worked_lv):
        with pytest.raises(LVError):
            lv_jacobian(worked_lv, np.ones(3))

    def test_json_round_trip(self, worked_lv):
        again = load_lv(worked_lv.to_json())
        assert np.array_equal(again.A, worked_lv.A) and np.array_equal(again.r, worked_lv.r)


class TestStructural:
    def test_worked_pattern(self, worked_lv):
        c = lv_structural_check(worked_lv)
        assert c.verdict is Verdict.EVEN
        assert "row-condition: holds" in c.diagnostics

    def test_signature_pattern(self):
        a = np.array([
            [-1.0, 0.0, 0.0, 0.5],
            [-0.5, -1.0, -0.5, 0.0],
            [0.0, 0.0, -1.0, -0.5],
            [0.5, 0.0, -0.5, -1.0],
        ])
        c = lv_structural_check(LVSystem(np.ones(4), a))
        assert c.verdict is Verdict.EVEN
        assert c.zeta == 3

    def test_mixed_sign_pair(self):
        a = -np.eye(4)
        a[0, 1], a[1, 0] = 0.5, -0.5
        c = lv_structural_check(LVSystem(np.ones(4), a))
        assert c.verdict is Verdict.NONE
        assert any(d.startswith("sign-symmetry:") for d in c.diagnostics)
        assert "sign-product-condition: fails" in c.diagnostics

    def test_literal_row_condition_weaker_than_neighbors(self):
        # every row has at most two entries, yet vertex 1 has three neighbors
        a = -np.eye(4)
        a[1, 0] = a[2, 0] = a[3, 0] = 0.5
        sys = LVSystem(np.ones(4), a)
        lit = literal_conditions(sys)
        assert lit["row_condition"]
        c = lv_structural_check(sys)
        assert c.verdict is Verdict.NONE
        assert any(d.startswith("literal-vs-graph:") for d in c.diagnostics)

    def test_small_system_rejected(self):
        with pytest.raises(SignPatternError):
            lv_structural_check(LVSystem(np.ones(3), -np.eye(3)))


class TestEmpirical:
    def test_pairs_start_in_cone(self, worked_lv):
        t = lv_structural_check(worked_lv).even_witnesses[0]
        pairs = sample_pairs(4, t, 2, 50, seed=1)
        assert pairs.shape == (4, 100)
        assert np.all((pairs >= 0.1) & (pairs <= 2.0))
        for p in range(50):
            assert in_Pk_minus(t.apply_to_vector(pairs[:, 2 * p] - pairs[:, 2 * p + 1]), 2)

    def test_worked_pattern_has_no_violations(self, worked_lv):
        t = lv_structural_check(worked_lv).even_witnesses[0]
        r = check_k_cooperative_empirical(worked_lv, t, 2, n_pairs=60, horizon=5.0)
        assert r.ok, r.to_json()
        assert not r.diverged

    def test_banded_system(self):
        r = check_k_cooperative_empirical(LVSystem(np.ones(4), BANDED), Transform.identity(4), 2,
                                          n_pairs=60, horizon=5.0)
        assert r.ok

    @pytest.mark.parametrize("value", [2.0, -2.0])
    def test_populated_forced_zero_is_caught(self, value):
        a = BANDED.copy()
        a[0, 2] = value
        r = check_k_cooperative_empirical(LVSystem(np.ones(4), a), Transform.identity(4), 2,
                                          n_pairs=200, horizon=5.0)
        assert not r.ok

    def test_divergent_pairs_are_excluded(self):
        a = np.full((4, 4), 0.5)
        r = check_k_cooperative_empirical(LVSystem(np.ones(4), a), Transform.identity(4), 1,
                                          n_pairs=10, horizon=5.0, dt=1e-2)
        assert len(r.diverged) == 10
        assert r.ok

    def test_size_mismatch(self, worked_lv):
        with pytest.raises(LVError):
            check_k_cooperative_empirical(worked_lv, Transform.identity(5), 2)

    def test_reproducible(self, worked_lv):
        t = lv_structural_check(worked_lv).even_witnesses[0]
        r1 = check_k_cooperative_empirical(worked_lv, t, 2, n_pairs=10, horizon=1.0, seed=9)
        r2 = check_k_cooperative_empirical(worked_lv, t, 2, n_pairs=10, horizon=1.0, seed=9)
        assert r1.to_json() == r2.to_json()


class TestDynamics:
    def test_orthant_is_forward_invariant(self, worked_lv, rng):
        for _ in range(5):
            traj = simulate(worked_lv, rng.uniform(0.0, 2.0, 4), 5.0, 1e-2)
            assert np.all(traj.states >= 0)
            assert np.max(traj.states) < BLOWUP

    def test_faces_are_invariant(self, worked_lv):
        traj = simulate(worked_lv, np.array([1.0, 0.0, 0.5, 1.0]), 3.0, 1e-2)
        assert np.all(traj.states[:, 1] == 0.0)

    def test_difference_follows_averaged_jacobian(self, worked_lv):
        # f(a) - f(b) = M (a - b); the LV Jacobian is affine, so the midpoint rule is exact
        a0 = np.array([0.6, 1.1, 0.4, 0.9])
        for scale in (1e-1, 1e-2):
            b0 = a0 + scale * np.array([1.0, -1.0, 0.5, 0.2])
            m = averaged_jacobian(lambda x: lv_jacobian(worked_lv, x), a0, b0, quad_points=4)
            lhs = lv_vector_field(worked_lv, a0) - lv_vector_field(worked_lv, b0)
            assert np.allclose(lhs, m @ (a0 - b0), rtol=1e-12, atol=1e-14)


class TestLoad:
    def test_from_text_and_path(self, tmp_path):
        text = json.dumps(WORKED_LV)
        assert load_lv(text).n == 4
        path = tmp_path / "sys.json"
        path.write_text(text)
        assert load_lv(path).n == 4
        assert load_lv(str(path)).n == 4

    @pytest.mark.parametrize("doc", [
        "not json",
        "[1, 2]",
        '{"r": [1, 2]}',
        '{"r": [1, 2], "A": [[1, 2], [3]]}',
        '{"r": [1, 2, 3], "A": [[1, 2], [3, 4]]}',
        '{"r": [1, true], "A": [[1, 2], [3, 4]]}',
        '{"r": [1, "2"], "A": [[1, 2], [3, 4]]}',
        '{"r": [1, 2], "A": [[1, 2], [3, NaN]]}',
        '{"r": 1, "A": [[1]]}',
    ])
    def test_rejects(self, doc):
        with pytest.raises(LVError):
            load_lv(doc)
