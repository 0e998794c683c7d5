"""Corpus loading, tokenization, vocabulary, and chunking tests."""

import numpy as np
import pytest

from convrerank.corpus import (
    Chunk,
    Session,
    build_chunks,
    build_vocab,
    read_chunks,
    read_corpus,
    read_vocab,
    tokenize,
    write_chunks,
    write_corpus,
    write_vocab,
)


def _chunk(tokens, chunk_id=0, session_id="s0"):
    return Chunk(chunk_id=chunk_id, tokens=tokens, session_id=session_id, start_utt=0, end_utt=0)


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("Hello, World!") == ["hello", "world"]

    def test_interior_apostrophe_kept(self):
        assert tokenize("don't stop") == ["don't", "stop"]

    def test_outer_apostrophes_stripped(self):
        assert tokenize("'tis the season'") == ["tis", "the", "season"]

    def test_runs_of_separators_collapse(self):
        assert tokenize("a--b  c") == ["a", "b", "c"]

    def test_digits_survive(self):
        assert tokenize("123 4th") == ["123", "4th"]

    def test_empty_and_blank(self):
        assert tokenize("") == []
        assert tokenize("   ") == []

    def test_idempotent(self):
        """Tokenizing already-clean tokens changes nothing."""
        tokens = tokenize("It's O'Brien's turn, again!")
        assert tokenize(" ".join(tokens)) == tokens


class TestBuildChunks:
    def _sessions(self):
        return [
            Session("s0000", [["a", "b"], ["b", "c"], ["c"]]),
            Session("s0001", [["d"], ["d", "d"]]),
        ]

    def test_chunk_boundaries_respect_sessions(self):
        """A chunk never spans two sessions, and the tail chunk may be short."""
        chunks = build_chunks(self._sessions(), chunk_size=2)
        spans = [(c.session_id, c.start_utt, c.end_utt) for c in chunks]
        assert spans == [("s0000", 0, 1), ("s0000", 2, 2), ("s0001", 0, 1)]

    def test_tokens_concatenate_in_utterance_order(self):
        chunks = build_chunks(self._sessions(), chunk_size=2)
        assert chunks[0].tokens == ["a", "b", "b", "c"]
        assert chunks[1].tokens == ["c"]
        assert chunks[2].tokens == ["d", "d", "d"]

    def test_token_counts_aggregate_within_chunk(self):
        chunks = build_chunks(self._sessions(), chunk_size=2)
        assert chunks[0].token_counts() == {"a": 1, "b": 2, "c": 1}

    def test_single_big_chunk_per_session(self):
        chunks = build_chunks(self._sessions(), chunk_size=100)
        assert len(chunks) == 2
        assert chunks[0].n_utterances == 3

    def test_chunk_ids_are_sequential(self):
        chunks = build_chunks(self._sessions(), chunk_size=1)
        assert [c.chunk_id for c in chunks] == list(range(5))

    def test_invalid_chunk_size(self):
        with pytest.raises(ValueError):
            build_chunks(self._sessions(), chunk_size=0)

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty"):
            build_chunks([], chunk_size=2)


class TestBuildVocab:
    def test_sorted_by_frequency_then_word(self):
        chunks = [
            _chunk(["pear", "pear", "apple", "fig", "fig"]),
            _chunk(["fig"], chunk_id=1),
        ]
        vocab = build_vocab(chunks)
        assert vocab.id_to_word == ["fig", "pear", "apple"]
        assert vocab.frequencies == [3, 2, 1]

    def test_min_count_filters(self):
        vocab = build_vocab([_chunk(["a"] * 5 + ["b"])], min_count=2)
        assert "b" not in vocab
        assert vocab.id_of("a") == 0

    def test_negative_min_count_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([_chunk(["a"])], min_count=-1)

    def test_all_filtered_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_vocab([_chunk(["a", "b"])], min_count=3)

    def test_lookup_roundtrip(self):
        vocab = build_vocab([_chunk(["x", "y", "y"])])
        for word in ("x", "y"):
            assert vocab.word_of(vocab.id_of(word)) == word
        assert len(vocab) == 2


class TestCorpusFiles:
    def test_roundtrip(self, tmp_path):
        sessions = [
            Session("s0000", [["good", "morning"], ["the", "agenda"]]),
            Session("s0001", [["one", "line"]]),
        ]
        path = tmp_path / "corpus.txt"
        write_corpus(path, sessions)
        back = read_corpus(path)
        assert back == sessions

    def test_blank_lines_split_sessions(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("a b\nc d\n\ne f\n", encoding="utf-8")
        sessions = read_corpus(path)
        assert [s.session_id for s in sessions] == ["s0000", "s0001"]
        assert sessions[1].utterances == [["e", "f"]]

    def test_read_tokenizes_raw_text(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("Hello, World!\n", encoding="utf-8")
        assert read_corpus(path)[0].utterances == [["hello", "world"]]


class TestVocabAndChunkFiles:
    def test_vocab_roundtrip(self, tmp_path):
        vocab = build_vocab([_chunk(["a", "a", "a", "b"])])
        path = tmp_path / "vocab.json"
        write_vocab(path, vocab)
        back = read_vocab(path)
        assert back.id_to_word == vocab.id_to_word
        assert back.frequencies == vocab.frequencies

    def test_chunks_roundtrip(self, tmp_path):
        sessions = [Session("s0000", [["a", "b"], ["b"]])]
        chunks = build_chunks(sessions, chunk_size=1)
        path = tmp_path / "chunks.jsonl"
        write_chunks(path, chunks)
        assert read_chunks(path) == chunks

    def test_rewrite_is_byte_identical(self, tmp_path):
        """Serialization is canonical, so writing twice gives the same bytes."""
        chunks = build_chunks([Session("s0000", [["z", "a"]])], chunk_size=1)
        p1, p2 = tmp_path / "c1.jsonl", tmp_path / "c2.jsonl"
        write_chunks(p1, chunks)
        write_chunks(p2, read_chunks(p1))
        assert p1.read_bytes() == p2.read_bytes()


def test_random_corpus_chunk_token_conservation():
    """Every token of every session lands in exactly one chunk."""
    rng = np.random.default_rng(7)
    words = ["w%d" % i for i in range(20)]
    sessions = []
    for s in range(6):
        n_utts = int(rng.integers(1, 9))
        utts = [
            [words[int(rng.integers(20))] for _ in range(int(rng.integers(1, 6)))]
            for _ in range(n_utts)
        ]
        sessions.append(Session(f"s{s:04d}", utts))
    for chunk_size in (1, 2, 3, 10):
        chunks = build_chunks(sessions, chunk_size=chunk_size)
        total = sum(len(c.tokens) for c in chunks)
        expected = sum(len(u) for s in sessions for u in s.utterances)
        assert total == expected
