import numpy as np
import pytest

from uwbmsdd.core import (
    AcrMatrix,
    DetectorConfig,
    as_hypothesis,
    branch_metric,
    gamma_metric,
    lambda_metric,
    max_node_count,
    sign_of,
)

from conftest import random_acr, worked_instance


def test_sign_convention():
    assert sign_of(3.2) == 1.0
    assert sign_of(-0.0001) == -1.0
    assert sign_of(0.0) == 1.0
    assert np.array_equal(sign_of(np.array([0.0, -1.0, 2.0])), [1.0, -1.0, 1.0])


class TestAcrMatrix:
    def test_entry_access_and_bounds(self):
        z = worked_instance()
        assert z.entry(0, 2) == -0.5
        for l, i in ((1, 1), (2, 1), (0, 3), (-1, 1)):
            with pytest.raises(IndexError):
                z.entry(l, i)

    def test_rejects_nonfinite_and_bad_sigma(self):
        zu = np.zeros((3, 3))
        zu[0, 1] = np.nan
        with pytest.raises(ValueError):
            AcrMatrix(zu, 1.0)
        with pytest.raises(ValueError):
            AcrMatrix(np.zeros((3, 3)), -1.0)

    def test_from_entries_requires_full_triangle(self):
        with pytest.raises(ValueError):
            AcrMatrix.from_entries(2, {(0, 1): 1.0}, 1.0)
        with pytest.raises(ValueError):
            AcrMatrix.from_entries(1, {(1, 0): 1.0}, 1.0)

    def test_lower_triangle_ignored(self):
        zu = np.ones((3, 3))
        z = AcrMatrix(zu, 1.0)
        assert z.abs_sum() == 3.0  # only the three l < i entries


def test_hypothesis_validation():
    assert np.array_equal(as_hypothesis([1, -1, 1]), [1, -1, 1])
    for bad in ([0, 1], [2, -1], [[1, -1]]):
        with pytest.raises(ValueError):
            as_hypothesis(bad)


def test_detector_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(L=0)
    with pytest.raises(ValueError):
        DetectorConfig(L=2, llr_max=-1.0)
    DetectorConfig(L=2, llr_max=0.0)  # hard output allowed


class TestGamma:
    def test_worked_instance(self):
        assert gamma_metric(worked_instance(), [1, 1]) == pytest.approx(2.5, abs=1e-12)

    def test_all_plus_ones_gives_plain_sum(self, rng):
        z = random_acr(rng, 6)
        assert gamma_metric(z, np.ones(6)) == pytest.approx(
            float(z.dense.sum()), rel=1e-12
        )

    def test_single_symbol(self):
        z = AcrMatrix.from_entries(1, {(0, 1): 1.7}, 1.0)
        assert gamma_metric(z, [-1]) == pytest.approx(-1.7, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            gamma_metric(worked_instance(), [1])


class TestLambda:
    def test_worked_instance(self):
        z = worked_instance()
        assert lambda_metric(z, [1, 1]) == pytest.approx(1.0, abs=1e-12)
        assert lambda_metric(z, [-1, -1]) == pytest.approx(7.0, abs=1e-12)

    def test_zero_iff_sign_match(self, rng):
        # a hypothesis whose products match every entry sign has zero metric
        b = rng.choice([-1, 1], size=7)
        zu = np.triu(np.outer(b, b) * rng.uniform(0.2, 2.0, (7, 7)), k=1)
        z = AcrMatrix(zu, 1.0)
        a = b[:-1] * b[1:]
        assert lambda_metric(z, a) == pytest.approx(0.0, abs=1e-12)

    def test_nonnegative(self, rng):
        for _ in range(200):
            L = int(rng.integers(1, 8))
            z = random_acr(rng, L)
            a = rng.choice([-1, 1], size=L)
            assert lambda_metric(z, a) >= 0.0


def test_metric_identity(rng):
    # lambda + gamma = sum |Z| exactly, for random statistics and hypotheses
    for _ in range(500):
        L = int(rng.integers(1, 9))
        z = random_acr(rng, L, scale=float(rng.uniform(0.1, 10)))
        a = rng.choice([-1, 1], size=L)
        total = z.abs_sum()
        assert lambda_metric(z, a) + gamma_metric(z, a) == pytest.approx(
            total, rel=1e-12
        )


class TestBranchMetric:
    def test_worked_examples(self):
        z = worked_instance()
        assert branch_metric(z, [1], 1) == pytest.approx(0.0, abs=1e-12)
        assert branch_metric(z, [-1], 1) == pytest.approx(2.0, abs=1e-12)
        assert branch_metric(z, [1, 1], 2) == pytest.approx(1.0, abs=1e-12)

    def test_path_decomposition(self, rng):
        # summing per-depth increments over a full path gives the block metric
        for _ in range(200):
            L = int(rng.integers(1, 9))
            z = random_acr(rng, L)
            a = rng.choice([-1, 1], size=L)
            total = sum(branch_metric(z, a, i) for i in range(1, L + 1))
            assert total == pytest.approx(lambda_metric(z, a), rel=1e-12, abs=1e-12)

    def test_depth_bounds(self):
        z = worked_instance()
        with pytest.raises(ValueError):
            branch_metric(z, [1, 1], 3)
        with pytest.raises(ValueError):
            branch_metric(z, [1], 2)


def test_argmin_lambda_is_argmax_gamma(rng):
    # the two formulations pick the same winner on every random instance
    from itertools import product

    for _ in range(100):
        L = int(rng.integers(1, 7))
        z = random_acr(rng, L)
        hyps = [np.array(h) for h in product((-1, 1), repeat=L)]
        lam = [lambda_metric(z, h) for h in hyps]
        gam = [gamma_metric(z, h) for h in hyps]
        assert int(np.argmin(lam)) == int(np.argmax(gam))


def test_max_node_count():
    assert max_node_count(1) == 2
    assert max_node_count(10) == 2046
