"""Conversational corpus handling: tokenization, chunking, vocabulary."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_CHUNK_SIZE = 10


# ---------------------------------------------------------------------------
# tokenization
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into word tokens.

    Non-alphanumeric characters act as separators, except apostrophes inside
    a word: "it's" survives, surrounding quote marks do not.  The function is
    idempotent on its own output joined with spaces.
    """
    chars = [c if c.isalnum() or c == "'" else " " for c in text.lower()]
    tokens = []
    for piece in "".join(chars).split():
        piece = piece.strip("'")
        if piece:
            tokens.append(piece)
    return tokens


# ---------------------------------------------------------------------------
# sessions and chunks
# ---------------------------------------------------------------------------


@dataclass
class Session:
    """One conversation: an ordered list of tokenized utterances."""

    session_id: str
    utterances: list[list[str]]


@dataclass
class Chunk:
    """A block of consecutive utterances drawn from a single session."""

    chunk_id: int
    tokens: list[str]
    session_id: str
    start_utt: int
    end_utt: int  # inclusive

    @property
    def n_utterances(self) -> int:
        return self.end_utt - self.start_utt + 1

    def token_counts(self) -> Counter:
        return Counter(self.tokens)


def build_chunks(sessions: list[Session], chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[Chunk]:
    """Partition every session into consecutive blocks of ``chunk_size`` utterances.

    The final block of a session may be short.  Blocks never span session
    boundaries, and chunk ids are dense across the whole corpus.
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    if not any(session.utterances for session in sessions):
        raise ValueError("no utterances: corpus is empty")
    chunks: list[Chunk] = []
    for session in sessions:
        for start in range(0, len(session.utterances), chunk_size):
            block = session.utterances[start : start + chunk_size]
            tokens = [tok for utt in block for tok in utt]
            chunks.append(
                Chunk(
                    chunk_id=len(chunks),
                    tokens=tokens,
                    session_id=session.session_id,
                    start_utt=start,
                    end_utt=start + len(block) - 1,
                )
            )
    return chunks


# ---------------------------------------------------------------------------
# vocabulary
# ---------------------------------------------------------------------------


@dataclass
class Vocabulary:
    """Dense word ids ordered by descending corpus frequency, ties lexicographic."""

    id_to_word: list[str]
    word_to_id: dict[str, int] = field(repr=False)
    frequencies: list[int]

    def __len__(self) -> int:
        return len(self.id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_id

    def id_of(self, word: str) -> int:
        return self.word_to_id[word]

    def word_of(self, word_id: int) -> str:
        return self.id_to_word[word_id]


def build_vocab(chunks: list[Chunk], min_count: int = 1) -> Vocabulary:
    """Count corpus frequencies over chunk token bags and assign dense ids."""
    if min_count < 0:
        raise ValueError(f"min_count must be >= 0, got {min_count}")
    counts: Counter = Counter()
    for chunk in chunks:
        counts.update(chunk.tokens)
    kept = [(word, freq) for word, freq in counts.items() if freq >= max(min_count, 1)]
    if not kept:
        raise ValueError(f"vocabulary is empty after min_count={min_count} filtering")
    kept.sort(key=lambda item: (-item[1], item[0]))
    id_to_word = [word for word, _ in kept]
    frequencies = [freq for _, freq in kept]
    word_to_id = {word: idx for idx, word in enumerate(id_to_word)}
    return Vocabulary(id_to_word=id_to_word, word_to_id=word_to_id, frequencies=frequencies)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def read_corpus(path: str | Path) -> list[Session]:
    """Read a corpus file: one utterance per line, blank line ends a session.

    Lines are tokenized on the way in.  Session ids are positional.
    """
    sessions: list[Session] = []
    current: list[list[str]] = []
    text = Path(path).read_text(encoding="utf-8")
    for line in text.split("\n"):
        if line.strip() == "":
            if current:
                sessions.append(Session(session_id=f"s{len(sessions):04d}", utterances=current))
                current = []
            continue
        current.append(tokenize(line))
    if current:
        sessions.append(Session(session_id=f"s{len(sessions):04d}", utterances=current))
    return sessions


def write_corpus(path: str | Path, sessions: list[Session]) -> None:
    """Write sessions as utterance lines separated by blank lines."""
    blocks = []
    for session in sessions:
        blocks.append("\n".join(" ".join(utt) for utt in session.utterances))
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def write_vocab(path: str | Path, vocab: Vocabulary) -> None:
    payload = {"version": 1, "words": vocab.id_to_word, "frequencies": vocab.frequencies}
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")


def read_vocab(path: str | Path) -> Vocabulary:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != 1:
        raise ValueError(f"unsupported vocabulary file version in {path}")
    words = payload["words"]
    return Vocabulary(
        id_to_word=list(words),
        word_to_id={word: idx for idx, word in enumerate(words)},
        frequencies=list(payload["frequencies"]),
    )


def write_chunks(path: str | Path, chunks: list[Chunk]) -> None:
    lines = []
    for chunk in chunks:
        record = {
            "chunk_id": chunk.chunk_id,
            "session_id": chunk.session_id,
            "start_utt": chunk.start_utt,
            "end_utt": chunk.end_utt,
            "tokens": chunk.tokens,
        }
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_chunks(path: str | Path) -> list[Chunk]:
    chunks = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        chunks.append(
            Chunk(
                chunk_id=record["chunk_id"],
                tokens=list(record["tokens"]),
                session_id=record["session_id"],
                start_utt=record["start_utt"],
                end_utt=record["end_utt"],
            )
        )
    return chunks
