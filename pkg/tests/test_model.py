"""
类型与效用代数
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.model.errors import ShapeError, EmptyGroupError, DataFormatError
from core.model.types import (
    Dataset, LinearHypothesis, TabularHypothesis, LinearGroup, ExplicitGroup, RandomizedClassifier,
)
from core.model.utility import (
    utility_vector, utility_randomized, utility_matrix, group_utility, group_error, complement,
    save_classifier, load_classifier, classifier_from_dict, hypothesis_from_dict,
)


bool_vectors = st.lists(st.booleans(), min_size=1, max_size=12)


class TestDataset:

    def test_augmented_appends_bias_column(self):
        ds = Dataset(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1, -1]))
        np.testing.assert_array_equal(ds.augmented[:, -1], [1.0, 1.0])
        assert ds.augmented.shape == (2, 3)
        assert ds.feature_names == ('x0', 'x1')

    def test_rejects_bad_labels(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 1)), np.array([0, 1]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((3, 1)), np.array([1, -1]))

    def test_arrays_are_readonly(self):
        ds = Dataset(np.zeros((2, 1)), np.array([1, 1]))
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0


class TestHypotheses:

    def test_sign_zero_predicts_positive(self):
        ds = Dataset(np.array([[0.0], [1.0]]), np.array([1, -1]))
        h = LinearHypothesis(np.array([1.0, 0.0]))
        np.testing.assert_array_equal(h.predict(ds), [1, 1])
        np.testing.assert_array_equal(h.correct_on(ds), [True, False])

    def test_theta_length_checked(self):
        ds = Dataset(np.zeros((2, 2)), np.array([1, -1]))
        with pytest.raises(ShapeError):
            LinearHypothesis(np.array([1.0, 0.0])).correct_on(ds)

    def test_linear_complement_flips_nonzero_scores(self):
        rng = np.random.default_rng(0)
        ds = Dataset(rng.normal(size=(20, 3)), np.where(rng.random(20) < 0.5, 1, -1))
        h = LinearHypothesis(rng.normal(size=4))
        np.testing.assert_array_equal(complement(h).correct_on(ds), ~h.correct_on(ds))

    @given(bool_vectors)
    def test_tabular_complement_is_involution(self, correct):
        h = TabularHypothesis(np.array(correct))
        np.testing.assert_array_equal(complement(complement(h)).correct, h.correct)
        np.testing.assert_array_equal(complement(h).correct, ~np.array(correct))

    def test_hypothesis_from_dict_rejects_unknown_kind(self):
        with pytest.raises(DataFormatError):
            hypothesis_from_dict({"kind": "tree"})


class TestGroups:

    def test_linear_group_membership_includes_boundary(self):
        ds = Dataset(np.array([[-1.0], [0.0], [1.0]]), np.array([1, 1, 1]))
        g = LinearGroup(np.array([1.0, 0.0]))
        np.testing.assert_array_equal(g.members(ds), [False, True, True])
        assert g.size(ds) == 2

    def test_explicit_group_from_indices(self):
        g = ExplicitGroup.from_indices(5, [0, 3], 'g')
        np.testing.assert_array_equal(g.mask, [True, False, False, True, False])

    def test_empty_group_utility_raises(self):
        with pytest.raises(EmptyGroupError):
            group_utility(np.zeros(3, dtype=bool), np.ones(3))

    def test_empty_group_error_is_zero(self):
        assert group_error(np.zeros(3, dtype=bool), np.ones(3)) == 0.0

    @given(st.lists(st.tuples(st.booleans(), st.floats(0.0, 1.0)), min_size=1, max_size=15))
    def test_error_and_utility_identity(self, rows):
        mask = np.array([m for m, _ in rows])
        u = np.array([v for _, v in rows])
        if not mask.any():
            return
        size = mask.sum()
        assert group_error(mask, u) == pytest.approx(size - size * group_utility(mask, u), abs=1e-9)


class TestRandomizedClassifier:

    def test_probs_must_sum_to_one(self):
        h = TabularHypothesis(np.array([True]))
        with pytest.raises(ShapeError):
            RandomizedClassifier((h, h), np.array([0.5, 0.6]))

    def test_atoms_skip_zero_probability(self):
        a, b = TabularHypothesis(np.array([True])), TabularHypothesis(np.array([False]))
        D = RandomizedClassifier((a, b), np.array([1.0, 0.0]))
        assert len(D) == 2
        assert [p for _, p in D.atoms()] == [1.0]

    @settings(max_examples=50)
    @given(bool_vectors.flatmap(lambda c: st.tuples(st.just(c), st.lists(st.booleans(), min_size=len(c),
                                                                          max_size=len(c)))),
           st.floats(0.0, 1.0))
    def test_utility_is_affine_in_mixture(self, columns, p):
        first, second = (np.array(c) for c in columns)
        ds = Dataset(np.zeros((first.size, 1)), np.ones(first.size, dtype=int))
        a, b = TabularHypothesis(first), TabularHypothesis(second)
        D = RandomizedClassifier((a, b), np.array([p, 1.0 - p]))
        expected = p * first + (1.0 - p) * second
        np.testing.assert_allclose(utility_randomized(D, ds), expected, atol=1e-12)

    def test_utility_matrix_columns(self, example1):
        U = utility_matrix(example1.dataset, example1.hypotheses)
        assert U.shape == (8, 4)
        np.testing.assert_array_equal(U[:, 2], ~U[:, 0])
        np.testing.assert_array_equal(U[:, 0], utility_vector(example1.hypotheses[0], example1.dataset))

    def test_json_file_keeps_mixture(self, tmp_path, example1):
        D = RandomizedClassifier(tuple(example1.hypotheses[:2]), np.array([0.75, 0.25]))
        path = str(tmp_path / 'model.json')
        save_classifier(D, path)
        loaded = load_classifier(path)
        np.testing.assert_allclose(utility_randomized(loaded, example1.dataset),
                                   utility_randomized(D, example1.dataset))

    def test_single_hypothesis_file_loads_as_point_mass(self, tmp_path):
        path = tmp_path / 'h.json'
        path.write_text('{"kind": "linear", "theta": [1.0, -0.5]}', encoding='utf-8')
        D = load_classifier(str(path))
        assert len(D) == 1 and D.probs[0] == 1.0

    def test_missing_fields_raise_data_format_error(self):
        with pytest.raises(DataFormatError):
            classifier_from_dict({"probs": [1.0]})
