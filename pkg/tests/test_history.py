"""Cross-utterance history state and decayed composition tests."""

import numpy as np
import pytest

from convrerank.history import HistoryState, compose_history, fold_in, history_vector


class TestHistoryState:
    def test_keeps_only_last_m_transcripts(self):
        state = HistoryState(max_utterances=2)
        state.append(["a"])
        state.append(["b"])
        state.append(["c"])
        assert list(state.transcripts) == [["b"], ["c"]]
        assert len(state) == 2

    def test_append_copies_input(self):
        state = HistoryState(max_utterances=3)
        tokens = ["a", "b"]
        state.append(tokens)
        tokens.append("c")
        assert list(state.transcripts) == [["a", "b"]]

    def test_reset_clears(self):
        state = HistoryState(max_utterances=3)
        state.append(["a"])
        state.reset()
        assert len(state) == 0

    def test_validation(self):
        with pytest.raises(ValueError):
            HistoryState(max_utterances=0)
        with pytest.raises(ValueError):
            HistoryState(max_utterances=2, decay=1.5)
        with pytest.raises(ValueError):
            HistoryState(max_utterances=2, decay=-0.1)


class TestFoldIn:
    def _table(self):
        embeddings = np.array([[1.0, 0.0], [0.0, 1.0], [3.0, 3.0]])
        word_to_id = {"a": 0, "b": 1, "c": 2}
        return embeddings, word_to_id

    def test_mean_of_known_word_rows(self):
        embeddings, word_to_id = self._table()
        np.testing.assert_allclose(
            fold_in(embeddings, word_to_id, ["a", "b"]), [0.5, 0.5], atol=1e-15
        )

    def test_unknown_words_skipped(self):
        embeddings, word_to_id = self._table()
        np.testing.assert_allclose(
            fold_in(embeddings, word_to_id, ["a", "zzz"]), [1.0, 0.0], atol=1e-15
        )

    def test_all_unknown_gives_zero_vector(self):
        embeddings, word_to_id = self._table()
        np.testing.assert_array_equal(fold_in(embeddings, word_to_id, ["x", "y"]), [0.0, 0.0])

    def test_repeated_word_weighs_more(self):
        embeddings, word_to_id = self._table()
        np.testing.assert_allclose(
            fold_in(embeddings, word_to_id, ["a", "a", "b"]), [2.0 / 3.0, 1.0 / 3.0], atol=1e-15
        )


class TestComposeHistory:
    def test_hand_weights_decay_half(self):
        """Three vectors at decay 0.5: weights 1/7, 2/7, 4/7, newest heaviest.

        Raw weights are 0.5^2, 0.5^1, 0.5^0 for distances 3, 2, 1; after
        normalization the composite of [1,0], [0,1], [2,2] is [9/7, 10/7].
        """
        vectors = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([2.0, 2.0])]
        result = compose_history(vectors, decay=0.5)
        np.testing.assert_allclose(result, [9.0 / 7.0, 10.0 / 7.0], atol=1e-15)

    def test_decay_one_is_plain_mean(self):
        vectors = [np.array([2.0, 0.0]), np.array([0.0, 4.0])]
        np.testing.assert_allclose(compose_history(vectors, decay=1.0), [1.0, 2.0], atol=1e-15)

    def test_decay_zero_keeps_only_newest(self):
        vectors = [np.array([5.0, 5.0]), np.array([1.0, 2.0])]
        np.testing.assert_allclose(compose_history(vectors, decay=0.0), [1.0, 2.0], atol=1e-15)

    def test_single_vector_unchanged(self):
        vector = np.array([3.0, -1.0])
        np.testing.assert_allclose(compose_history([vector], decay=0.3), vector, atol=1e-15)

    def test_empty_needs_explicit_dim(self):
        np.testing.assert_array_equal(compose_history([], decay=0.5, dim=4), np.zeros(4))
        with pytest.raises(ValueError):
            compose_history([], decay=0.5)

    def test_decay_validated(self):
        with pytest.raises(ValueError):
            compose_history([np.zeros(2)], decay=2.0)

    def test_weights_sum_to_one_effect(self):
        """Composing copies of one vector returns that vector regardless of decay."""
        vector = np.array([2.0, 7.0, -3.0])
        for decay in (0.1, 0.5, 0.9, 1.0):
            stacked = [vector.copy() for _ in range(5)]
            np.testing.assert_allclose(compose_history(stacked, decay=decay), vector, atol=1e-12)


class TestHistoryVector:
    def test_composes_folded_transcripts(self):
        embeddings = np.array([[1.0, 0.0], [0.0, 1.0]])
        word_to_id = {"a": 0, "b": 1}
        state = HistoryState(max_utterances=5, decay=0.5)
        state.append(["a"])
        state.append(["b"])
        result = history_vector(state, embeddings, word_to_id)
        expected = compose_history(
            [np.array([1.0, 0.0]), np.array([0.0, 1.0])], decay=0.5
        )
        np.testing.assert_allclose(result, expected, atol=1e-15)

    def test_empty_state_gives_zeros(self):
        embeddings = np.array([[1.0, 0.0], [0.0, 1.0]])
        state = HistoryState(max_utterances=3, decay=0.5)
        np.testing.assert_array_equal(
            history_vector(state, embeddings, {"a": 0, "b": 1}), [0.0, 0.0]
        )

    def test_respects_state_decay(self):
        embeddings = np.array([[1.0, 0.0], [0.0, 1.0]])
        word_to_id = {"a": 0, "b": 1}
        state = HistoryState(max_utterances=5, decay=0.0)
        state.append(["a"])
        state.append(["b"])
        np.testing.assert_allclose(
            history_vector(state, embeddings, word_to_id), [0.0, 1.0], atol=1e-15
        )
