"""
Tests for the global map, Amari index, alignment and SIR.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnlsep.exceptions import DegenerateMapError, DegenerateSourceError, RejectedInputError
from pnlsep.models.signals import SignalBlock, SignalRole
from pnlsep.services.evaluation import GlobalMap, align, amari_index, evaluate, global_map, sir_db


def sources_block(data):
    return SignalBlock(np.asarray(data, dtype=float), SignalRole.SOURCE)


def outputs_block(data):
    return SignalBlock(np.asarray(data, dtype=float), SignalRole.OUTPUT)


@pytest.fixture
def sources(rng):
    return sources_block(rng.uniform(-1.0, 1.0, size=(3, 5000)))


def scaled_permutation(rng, n):
    permutation = np.eye(n)[rng.permutation(n)]
    signs = rng.choice([-1.0, 1.0], size=n)
    return permutation * (signs * rng.uniform(0.1, 10.0, size=n))[:, None]


class TestGlobalMap:
    def test_identity(self, sources):
        gmap = global_map(outputs_block(sources.data), sources)
        np.testing.assert_allclose(gmap.entries, np.eye(3), atol=1e-10)

    def test_swapped_and_scaled(self, rng):
        s = sources_block(rng.standard_normal((2, 1000)))
        gmap = global_map(outputs_block(2.0 * s.data[::-1]), s)
        np.testing.assert_allclose(gmap.entries, [[0.0, 2.0], [2.0, 0.0]], atol=1e-10)

    def test_recovers_linear_map(self, rng, sources):
        a = rng.standard_normal((3, 3))
        gmap = global_map(outputs_block(a @ sources.data), sources)
        np.testing.assert_allclose(gmap.entries, a, atol=1e-8)

    def test_singular_gram(self, rng):
        row = rng.standard_normal(100)
        s = sources_block(np.vstack([row, 2.0 * row]))
        with pytest.raises(DegenerateSourceError):
            global_map(outputs_block(s.data), s)

    def test_shape_mismatch(self, sources):
        with pytest.raises(RejectedInputError):
            global_map(outputs_block(sources.data[:2]), sources)


class TestAmariIndex:
    def test_all_ones(self):
        assert amari_index(GlobalMap(np.ones((2, 2)))) == 1.0

    def test_identity_and_diagonal(self):
        assert amari_index(GlobalMap(np.eye(4))) == 0.0
        assert amari_index(GlobalMap(np.diag([0.5, 3.0, 7.0]))) == 0.0

    def test_zero_row(self):
        with pytest.raises(DegenerateMapError):
            amari_index(GlobalMap(np.array([[1.0, 0.0], [0.0, 0.0]])))

    def test_scaled_permutations_score_zero(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 7))
            assert amari_index(GlobalMap(scaled_permutation(rng, n))) == 0.0

    def test_lies_in_unit_interval(self, rng):
        for _ in range(50):
            value = amari_index(GlobalMap(rng.standard_normal((4, 4))))
            assert 0.0 < value <= 1.0

    def test_mixing_scores_positive(self):
        assert amari_index(GlobalMap(np.array([[1.0, 0.1], [0.0, 1.0]]))) > 0.0


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), n=st.integers(min_value=2, max_value=6))
def test_amari_invariant_under_row_and_column_permutation(seed, n):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    rows, cols = rng.permutation(n), rng.permutation(n)
    assert amari_index(GlobalMap(g[rows][:, cols])) == pytest.approx(amari_index(GlobalMap(g)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), n=st.integers(min_value=2, max_value=6))
def test_amari_zero_for_rescaled_scaled_permutation(seed, n):
    rng = np.random.default_rng(seed)
    left = np.diag(rng.uniform(0.1, 10.0, size=n))
    right = np.diag(rng.uniform(0.1, 10.0, size=n))
    assert amari_index(GlobalMap(left @ scaled_permutation(rng, n) @ right)) == 0.0


def test_amari_row_and_column_terms_scale_differently():
    # Left scaling leaves the row term alone but not the column term; the index moves
    g = np.array([[1.0, 0.5], [0.5, 1.0]])
    left = np.diag([1.0, 4.0])
    # rows 0.5 + 0.5, columns 0.5 + 0.125 after scaling
    assert amari_index(GlobalMap(g)) == pytest.approx(0.5)
    assert amari_index(GlobalMap(left @ g)) == pytest.approx(0.40625)


class TestAlign:
    def test_identity(self, sources):
        alignment = align(outputs_block(sources.data), sources)
        np.testing.assert_array_equal(alignment.permutation, [0, 1, 2])
        np.testing.assert_allclose(alignment.scales, 1.0)

    def test_swapped_and_negated(self, rng):
        s = sources_block(rng.standard_normal((2, 1000)))
        alignment = align(outputs_block(-s.data[::-1]), s)
        np.testing.assert_array_equal(alignment.permutation, [1, 0])
        np.testing.assert_allclose(alignment.scales, -1.0)
        np.testing.assert_allclose(alignment.aligned.data, s.data, atol=1e-12)

    def test_matches_exhaustive_search(self, rng, sources):
        mixed = scaled_permutation(rng, 3) + 0.05 * rng.standard_normal((3, 3))
        outputs = outputs_block(mixed @ sources.data)
        alignment = align(outputs, sources)

        def centered(x):
            return x - x.mean(axis=1, keepdims=True)

        y, s = centered(outputs.data), centered(sources.data)
        corr = np.abs(y @ s.T) / np.outer(np.linalg.norm(y, axis=1), np.linalg.norm(s, axis=1))
        best = max(
            itertools.permutations(range(3)),
            key=lambda perm: sum(corr[perm[i], i] for i in range(3)),
        )
        np.testing.assert_array_equal(alignment.permutation, best)

    def test_is_idempotent(self, rng, sources):
        outputs = outputs_block(scaled_permutation(rng, 3) @ sources.data)
        first = align(outputs, sources)
        second = align(first.aligned, sources)
        np.testing.assert_array_equal(second.permutation, [0, 1, 2])
        np.testing.assert_allclose(second.aligned.data, first.aligned.data, atol=1e-12)


class TestSir:
    def test_perfect_recovery_is_capped(self, sources):
        np.testing.assert_array_equal(sir_db(outputs_block(sources.data), sources), 150.0)

    def test_custom_cap(self, sources):
        np.testing.assert_array_equal(sir_db(outputs_block(sources.data), sources, cap_db=60.0), 60.0)

    def test_one_percent_noise(self, rng):
        s = sources_block(rng.standard_normal((1, 10000)))
        noisy = s.data + 0.1 * rng.standard_normal((1, 10000))
        assert sir_db(outputs_block(noisy), s)[0] == pytest.approx(20.0, abs=0.5)

    def test_orthogonal_equal_power(self):
        s = sources_block([[1.0, 0.0, -1.0, 0.0]])
        y = outputs_block([[0.0, 1.0, 0.0, -1.0]])
        assert sir_db(y, s)[0] == pytest.approx(10 * np.log10(0.5))

    def test_zero_energy_source(self):
        with pytest.raises(DegenerateSourceError):
            sir_db(outputs_block(np.ones((1, 4))), sources_block(np.zeros((1, 4))))


def test_evaluate_swapped_outputs(rng, sources):
    amari, sir, alignment = evaluate(outputs_block(-2.0 * sources.data[[2, 0, 1]]), sources)
    assert amari == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_array_equal(sir, 150.0)
    np.testing.assert_array_equal(alignment.permutation, [1, 2, 0])
