"""Oracle-prediction reranking over ASR N-best lists.

Every hypothesis becomes one feature row: a pooled hypothesis embedding, the
cross-utterance history vector, and per-list standardized score features.
The rows of a list are spliced into a single input for a feed-forward head
that scores all positions jointly; training minimizes cross-entropy against
the oracle (lowest-WER) position.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import serialize
from .evaluate import align
from .history import HistoryState, compose_history, fold_in
from .optim import Adam

SEPARATOR_TOKEN = "<sep>"
DEFAULT_N_BEST = 10
N_SCORE_FEATURES = 3  # standardized acoustic, language, and combined scores


# ---------------------------------------------------------------------------
# hypotheses and lists
# ---------------------------------------------------------------------------


@dataclass
class Hypothesis:
    tokens: list[str]
    am_score: float
    lm_score: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.am_score) and math.isfinite(self.lm_score)):
            raise ValueError(f"hypothesis scores must be finite, got {self.am_score}, {self.lm_score}")


@dataclass
class NBestList:
    """Hypotheses for one utterance, in recognizer rank order."""

    utt_id: str
    session_id: str
    hypotheses: list[Hypothesis]
    reference: list[str] | None = None
    oracle_index: int | None = None

    def __post_init__(self) -> None:
        if not self.hypotheses:
            raise ValueError(f"utterance {self.utt_id!r} has an empty hypothesis list")
        if self.oracle_index is not None and not 0 <= self.oracle_index < len(self.hypotheses):
            raise ValueError(
                f"oracle index {self.oracle_index} out of range for {len(self.hypotheses)} hypotheses"
            )


def combined_score(hyp: Hypothesis, am_weight: float = 1.0) -> float:
    """Log-linear recognizer score: am_weight * acoustic + language."""
    return am_weight * hyp.am_score + hyp.lm_score


def label_oracle(nbest: NBestList, am_weight: float = 1.0) -> int:
    """Index of the lowest-WER hypothesis.

    Ties go to the higher combined recognizer score, then to the lower index.
    """
    if nbest.reference is None:
        raise ValueError(f"cannot oracle-label {nbest.utt_id!r}: no reference transcript")
    rates = [align(nbest.reference, hyp.tokens).wer for hyp in nbest.hypotheses]
    scores = [combined_score(hyp, am_weight) for hyp in nbest.hypotheses]
    return min(range(len(rates)), key=lambda i: (rates[i], -scores[i], i))


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass
class RerankerConfig:
    n_best: int = DEFAULT_N_BEST
    embed_dim: int = 32
    history_dim: int = 32
    hidden_dim: int = 0  # 0 keeps the head a single linear layer
    learning_rate: float = 1e-2
    epochs: int = 150
    am_weight: float = 1.0
    use_history: bool = True  # append the folded conversation vector
    encoder_history: bool = False  # splice history tokens into the encoder bag
    history_m: int = 5
    history_gamma: float = 0.5
    seed: int = 0


@dataclass
class RerankerModel:
    """Feed-forward head plus the hypothesis encoder it was trained with."""

    n_best: int
    embed_dim: int
    history_dim: int
    encoder_mode: str  # "bag" or "external"
    encoder_words: list[str]  # id order; empty in external mode
    encoder_table: np.ndarray | None  # (len(encoder_words), embed_dim)
    hidden_w: np.ndarray | None
    hidden_b: np.ndarray | None
    out_w: np.ndarray
    out_b: np.ndarray
    use_history: bool
    encoder_history: bool
    am_weight: float
    history_m: int
    history_gamma: float
    manifest: dict
    loss_log: list[float] = field(default_factory=list)
    encoder_ids: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.encoder_ids = {word: idx for idx, word in enumerate(self.encoder_words)}

    @property
    def feature_width(self) -> int:
        return self.embed_dim + self.history_dim + N_SCORE_FEATURES


# ---------------------------------------------------------------------------
# encoding and feature assembly
# ---------------------------------------------------------------------------


def build_encoder_words(lists: list[NBestList]) -> list[str]:
    """Encoder vocabulary: the separator, then all hypothesis tokens, sorted."""
    seen = {tok for nbest in lists for hyp in nbest.hypotheses for tok in hyp.tokens}
    return [SEPARATOR_TOKEN] + sorted(seen)


def _encoder_token_ids(
    model_ids: Mapping[str, int],
    tokens: list[str],
    history_transcripts: list[list[str]] | None,
) -> list[int]:
    sequence = list(tokens)
    if history_transcripts:
        for transcript in history_transcripts:
            sequence.append(SEPARATOR_TOKEN)
            sequence.extend(transcript)
    return [model_ids[tok] for tok in sequence if tok in model_ids]


def encode_hypothesis(
    model: RerankerModel,
    hypothesis: Hypothesis,
    history_transcripts: list[list[str]] | None = None,
    external_vectors: Mapping[tuple[str, int], np.ndarray] | None = None,
    utt_id: str | None = None,
    rank: int | None = None,
) -> np.ndarray:
    """Pool one hypothesis into a fixed-size vector.

    In bag mode this is the mean of the learned token embeddings, optionally
    over the hypothesis concatenated with history transcripts (most recent
    first) behind separator tokens.  In external mode the vector is looked up
    by (utt_id, rank).
    """
    if model.encoder_mode == "external":
        key = (utt_id, rank)
        if external_vectors is None or key not in external_vectors:
            raise ValueError(f"missing external embedding for utterance {utt_id!r} rank {rank}")
        vector = np.asarray(external_vectors[key], dtype=np.float64)
        if vector.shape != (model.embed_dim,):
            raise ValueError(
                f"external embedding for {utt_id!r} rank {rank} has size {vector.shape}, "
                f"expected ({model.embed_dim},)"
            )
        return vector
    ids = _encoder_token_ids(model.encoder_ids, hypothesis.tokens, history_transcripts)
    if not ids:
        return np.zeros(model.embed_dim, dtype=np.float64)
    return model.encoder_table[ids].mean(axis=0)


def standardized_scores(hypotheses: list[Hypothesis], am_weight: float = 1.0) -> np.ndarray:
    """Per-list z-scores of (acoustic, language, combined); constant columns zero out."""
    am = np.asarray([hyp.am_score for hyp in hypotheses], dtype=np.float64)
    lm = np.asarray([hyp.lm_score for hyp in hypotheses], dtype=np.float64)
    combined = am_weight * am + lm
    columns = []
    for column in (am, lm, combined):
        if (column == column[0]).all():
            columns.append(np.zeros_like(column))
        else:
            columns.append((column - column.mean()) / column.std())
    return np.stack(columns, axis=1)


def assemble_features(
    nbest: NBestList,
    hypothesis_vectors: list[np.ndarray],
    history_vec: np.ndarray,
    am_weight: float = 1.0,
    n_best: int = DEFAULT_N_BEST,
) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-hypothesis rows [embedding | history | scores] padded to ``n_best``.

    Short lists are padded by repeating the final row; the returned boolean
    mask marks the real (non-padding) rows.  Lists longer than ``n_best`` are
    rejected.
    """
    n_real = len(nbest.hypotheses)
    if n_real > n_best:
        raise ValueError(
            f"utterance {nbest.utt_id!r} has {n_real} hypotheses, more than n_best={n_best}"
        )
    if len(hypothesis_vectors) != n_real:
        raise ValueError(
            f"{len(hypothesis_vectors)} hypothesis vectors for {n_real} hypotheses"
        )
    history_vec = np.asarray(history_vec, dtype=np.float64)
    scores = standardized_scores(nbest.hypotheses, am_weight)
    rows = [
        np.concatenate([np.asarray(vec, dtype=np.float64), history_vec, scores[i]])
        for i, vec in enumerate(hypothesis_vectors)
    ]
    while len(rows) < n_best:
        rows.append(rows[-1].copy())
    valid = np.arange(n_best) < n_real
    return np.stack(rows), valid


# ---------------------------------------------------------------------------
# head forward
# ---------------------------------------------------------------------------


def _head_logits(model: RerankerModel, flat: np.ndarray) -> np.ndarray:
    if model.hidden_w is not None:
        hidden = np.maximum(flat @ model.hidden_w + model.hidden_b, 0.0)
        return hidden @ model.out_w + model.out_b
    return flat @ model.out_w + model.out_b


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def rerank_forward(model: RerankerModel, features: np.ndarray) -> np.ndarray:
    """Probability over the n_best positions for one assembled feature matrix."""
    features = np.asarray(features, dtype=np.float64)
    expected = (model.n_best, model.feature_width)
    if features.shape != expected:
        raise ValueError(f"feature matrix has shape {features.shape}, model expects {expected}")
    logits = _head_logits(model, features.ravel(order="C"))
    return _softmax_rows(logits)


# ---------------------------------------------------------------------------
# training features
# ---------------------------------------------------------------------------


@dataclass
class ListFeatures:
    """Static per-list training inputs; encoder output is recomputed per epoch."""

    utt_id: str
    session_id: str
    token_rows: list[list[int]] | None  # n_best rows of encoder token ids (bag mode)
    static_rows: np.ndarray | None  # (n_best, embed_dim) external vectors
    history_vec: np.ndarray  # (history_dim,)
    score_rows: np.ndarray  # (n_best, N_SCORE_FEATURES)
    valid: np.ndarray  # (n_best,) bool
    oracle: int


def _pad_rows(rows: list, n_best: int) -> list:
    rows = list(rows)
    while len(rows) < n_best:
        rows.append(rows[-1])
    return rows


def prepare_training_features(
    lists: list[NBestList],
    config: RerankerConfig,
    word_vectors: np.ndarray | None = None,
    word_to_id: Mapping[str, int] | None = None,
    encoder_words: list[str] | None = None,
    external_vectors: Mapping[tuple[str, int], np.ndarray] | None = None,
) -> tuple[list[ListFeatures], list[str]]:
    """Oracle-label, pad, and featurize training lists session by session.

    History vectors fold the combined-score 1-best transcripts of preceding
    utterances in the same session through ``word_vectors``; sessions are
    taken in file order and history resets at each session start.
    """
    if config.use_history:
        if word_vectors is None or word_to_id is None:
            raise ValueError("use_history requires word_vectors and word_to_id")
        if word_vectors.shape[1] != config.history_dim:
            raise ValueError(
                f"word vectors have size {word_vectors.shape[1]}, "
                f"config.history_dim is {config.history_dim}"
            )
    external_mode = external_vectors is not None
    if not external_mode and encoder_words is None:
        encoder_words = build_encoder_words(lists)
    encoder_ids = {} if external_mode else {w: i for i, w in enumerate(encoder_words)}

    states: dict[str, HistoryState] = {}
    bundles: list[ListFeatures] = []
    for nbest in lists:
        n_real = len(nbest.hypotheses)
        if n_real > config.n_best:
            raise ValueError(
                f"utterance {nbest.utt_id!r} has {n_real} hypotheses, more than n_best={config.n_best}"
            )
        state = states.get(nbest.session_id)
        if state is None:
            state = HistoryState(config.history_m, config.history_gamma)
            states[nbest.session_id] = state

        if config.use_history:
            vectors = [fold_in(word_vectors, word_to_id, t) for t in state.transcripts]
            history_vec = compose_history(vectors, config.history_gamma, dim=config.history_dim)
        else:
            history_vec = np.zeros(config.history_dim, dtype=np.float64)

        history_tokens = (
            [list(t) for t in reversed(state.transcripts)] if config.encoder_history else None
        )
        token_rows = None
        static_rows = None
        if external_mode:
            vec_rows = []
            for rank in range(n_real):
                key = (nbest.utt_id, rank)
                if key not in external_vectors:
                    raise ValueError(
                        f"missing external embedding for utterance {nbest.utt_id!r} rank {rank}"
                    )
                vec_rows.append(np.asarray(external_vectors[key], dtype=np.float64))
            static_rows = np.stack(_pad_rows(vec_rows, config.n_best))
        else:
            token_rows = [
                _encoder_token_ids(encoder_ids, hyp.tokens, history_tokens)
                for hyp in nbest.hypotheses
            ]
            token_rows = _pad_rows(token_rows, config.n_best)

        scores = standardized_scores(nbest.hypotheses, config.am_weight)
        score_rows = np.stack(_pad_rows(list(scores), config.n_best))
        oracle = label_oracle(nbest, config.am_weight)
        bundles.append(
            ListFeatures(
                utt_id=nbest.utt_id,
                session_id=nbest.session_id,
                token_rows=token_rows,
                static_rows=static_rows,
                history_vec=history_vec,
                score_rows=score_rows,
                valid=np.arange(config.n_best) < n_real,
                oracle=oracle,
            )
        )
        top = max(nbest.hypotheses, key=lambda h: combined_score(h, config.am_weight))
        state.append(top.tokens)
    return bundles, ([] if external_mode else list(encoder_words))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _encoder_matrix(bundles: list[ListFeatures], n_best: int, n_words: int) -> sp.csr_matrix:
    """Sparse pooling matrix: row b*n_best+i averages the token rows of that hypothesis."""
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for b, bundle in enumerate(bundles):
        for i, ids in enumerate(bundle.token_rows):
            if not ids:
                continue
            weight = 1.0 / len(ids)
            base = b * n_best + i
            for token_id in ids:
                rows.append(base)
                cols.append(token_id)
                vals.append(weight)
    return sp.csr_matrix(
        (np.asarray(vals), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(bundles) * n_best, n_words),
    )


def _static_blocks(bundles: list[ListFeatures], n_best: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    history = np.stack([b.history_vec for b in bundles])  # (B, history_dim)
    history_block = np.repeat(history[:, None, :], n_best, axis=1)
    score_block = np.stack([b.score_rows for b in bundles])  # (B, n_best, 3)
    valid = np.stack([b.valid for b in bundles])  # (B, n_best)
    oracles = np.asarray([b.oracle for b in bundles], dtype=np.int64)
    return history_block, score_block, valid, oracles


def _masked_log_softmax(logits: np.ndarray, valid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    masked = np.where(valid, logits, -np.inf)
    shifted = masked - masked.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    norm = exp.sum(axis=1, keepdims=True)
    return shifted - np.log(norm), exp / norm


def train_reranker(
    bundles: list[ListFeatures],
    config: RerankerConfig,
    encoder_words: list[str] | None = None,
) -> RerankerModel:
    """Full-batch Adam on the oracle cross-entropy.

    Padding positions are masked out of the softmax; in bag mode the encoder
    table trains jointly with the head.
    """
    if not bundles:
        raise ValueError("no training lists")
    external_mode = bundles[0].static_rows is not None
    if not external_mode and encoder_words is None:
        raise ValueError("bag-encoder training needs the encoder word list")

    n_best = config.n_best
    embed_dim = (
        bundles[0].static_rows.shape[1] if external_mode else config.embed_dim
    )
    feature_width = embed_dim + config.history_dim + N_SCORE_FEATURES
    in_dim = n_best * feature_width
    rng = np.random.default_rng(config.seed)

    encoder_table = None
    pooling = None
    static_embed = None
    if external_mode:
        static_embed = np.stack([b.static_rows for b in bundles])  # (B, n_best, e)
    else:
        limit = math.sqrt(6.0 / (len(encoder_words) + max(embed_dim, 1)))
        encoder_table = rng.uniform(-limit, limit, size=(len(encoder_words), embed_dim))
        pooling = _encoder_matrix(bundles, n_best, len(encoder_words))

    hidden_w = hidden_b = None
    if config.hidden_dim > 0:
        limit = math.sqrt(6.0 / (in_dim + config.hidden_dim))
        hidden_w = rng.uniform(-limit, limit, size=(in_dim, config.hidden_dim))
        hidden_b = np.zeros(config.hidden_dim, dtype=np.float64)
        out_in = config.hidden_dim
    else:
        out_in = in_dim
    limit = math.sqrt(6.0 / (out_in + n_best))
    out_w = rng.uniform(-limit, limit, size=(out_in, n_best))
    out_b = np.zeros(n_best, dtype=np.float64)

    history_block, score_block, valid, oracles = _static_blocks(bundles, n_best)
    n_lists = len(bundles)
    batch_rows = np.arange(n_lists)
    loss_log: list[float] = []

    params: dict[str, np.ndarray] = {"out_w": out_w, "out_b": out_b}
    if hidden_w is not None:
        params.update({"hidden_w": hidden_w, "hidden_b": hidden_b})
    if encoder_table is not None:
        params["encoder_table"] = encoder_table
    optimizer = Adam(config.learning_rate)

    for epoch in range(config.epochs):
        if external_mode:
            embed_block = static_embed
        else:
            embed_block = (pooling @ encoder_table).reshape(n_lists, n_best, embed_dim)
        features = np.concatenate([embed_block, history_block, score_block], axis=2)
        flat = features.reshape(n_lists, in_dim)

        if hidden_w is not None:
            hidden_pre = flat @ hidden_w + hidden_b
            hidden_act = np.maximum(hidden_pre, 0.0)
            logits = hidden_act @ out_w + out_b
        else:
            logits = flat @ out_w + out_b

        log_probs, probs = _masked_log_softmax(logits, valid)
        loss = float(-log_probs[batch_rows, oracles].mean())
        if not math.isfinite(loss):
            raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
        loss_log.append(loss)

        d_logits = probs.copy()
        d_logits[batch_rows, oracles] -= 1.0
        d_logits /= n_lists

        grads: dict[str, np.ndarray] = {}
        if hidden_w is not None:
            grads["out_w"] = hidden_act.T @ d_logits
            grads["out_b"] = d_logits.sum(axis=0)
            d_hidden = (d_logits @ out_w.T) * (hidden_pre > 0.0)
            grads["hidden_w"] = flat.T @ d_hidden
            grads["hidden_b"] = d_hidden.sum(axis=0)
            d_flat = d_hidden @ hidden_w.T
        else:
            grads["out_w"] = flat.T @ d_logits
            grads["out_b"] = d_logits.sum(axis=0)
            d_flat = d_logits @ out_w.T
        if encoder_table is not None:
            d_embed = d_flat.reshape(n_lists, n_best, feature_width)[:, :, :embed_dim]
            grads["encoder_table"] = pooling.T @ d_embed.reshape(n_lists * n_best, embed_dim)
        optimizer.step(params, grads)

    manifest = {
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "hidden_dim": config.hidden_dim,
        "n_best": n_best,
        "embed_dim": embed_dim,
        "history_dim": config.history_dim,
        "am_weight": config.am_weight,
        "use_history": config.use_history,
        "encoder_history": config.encoder_history,
        "history_m": config.history_m,
        "history_gamma": config.history_gamma,
    }
    return RerankerModel(
        n_best=n_best,
        embed_dim=embed_dim,
        history_dim=config.history_dim,
        encoder_mode="external" if external_mode else "bag",
        encoder_words=[] if external_mode else list(encoder_words),
        encoder_table=encoder_table,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        out_w=out_w,
        out_b=out_b,
        use_history=config.use_history,
        encoder_history=config.encoder_history,
        am_weight=config.am_weight,
        history_m=config.history_m,
        history_gamma=config.history_gamma,
        manifest=manifest,
        loss_log=loss_log,
    )


def predict_index(model: RerankerModel, bundle: ListFeatures) -> int:
    """Masked argmax over one prepared bundle, used for training accuracy."""
    if bundle.static_rows is not None:
        embed_rows = bundle.static_rows
    else:
        embed_rows = np.stack(
            [
                model.encoder_table[ids].mean(axis=0) if ids else np.zeros(model.embed_dim)
                for ids in bundle.token_rows
            ]
        )
    history_rows = np.repeat(bundle.history_vec[None, :], model.n_best, axis=0)
    features = np.concatenate([embed_rows, history_rows, bundle.score_rows], axis=1)
    probs = rerank_forward(model, features)
    return int(np.where(bundle.valid, probs, -1.0).argmax())


def training_accuracy(model: RerankerModel, bundles: list[ListFeatures]) -> float:
    hits = sum(1 for b in bundles if predict_index(model, b) == b.oracle)
    return hits / len(bundles)


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------


def rerank(
    model: RerankerModel,
    nbest: NBestList,
    history_state: HistoryState | None = None,
    word_vectors: np.ndarray | None = None,
    word_to_id: Mapping[str, int] | None = None,
    external_vectors: Mapping[tuple[str, int], np.ndarray] | None = None,
) -> int:
    """Pick a hypothesis index for one list.

    The caller owns the history state and appends the chosen transcript to it
    afterwards; padding positions can never be selected.
    """
    if model.use_history and history_state is not None and len(history_state) > 0:
        if word_vectors is None or word_to_id is None:
            raise ValueError("model.use_history requires word_vectors and word_to_id")
        vectors = [fold_in(word_vectors, word_to_id, t) for t in history_state.transcripts]
        history_vec = compose_history(vectors, history_state.decay, dim=model.history_dim)
    else:
        history_vec = np.zeros(model.history_dim, dtype=np.float64)

    history_tokens = None
    if model.encoder_history and history_state is not None and len(history_state) > 0:
        history_tokens = [list(t) for t in reversed(history_state.transcripts)]

    vectors = [
        encode_hypothesis(
            model,
            hyp,
            history_transcripts=history_tokens,
            external_vectors=external_vectors,
            utt_id=nbest.utt_id,
            rank=rank,
        )
        for rank, hyp in enumerate(nbest.hypotheses)
    ]
    features, valid = assemble_features(
        nbest, vectors, history_vec, am_weight=model.am_weight, n_best=model.n_best
    )
    probs = rerank_forward(model, features)
    return int(np.where(valid, probs, -1.0).argmax())


# ---------------------------------------------------------------------------
# wire formats
# ---------------------------------------------------------------------------


def read_nbest(path: str | Path) -> list[NBestList]:
    """Read line-delimited N-best records in recognizer rank order."""
    lists = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{line_no}: invalid N-best record: {exc}") from exc
        hypotheses = [
            Hypothesis(tokens=list(h["words"]), am_score=float(h["am"]), lm_score=float(h["lm"]))
            for h in record["hyps"]
        ]
        reference = record.get("ref")
        lists.append(
            NBestList(
                utt_id=record["utt_id"],
                session_id=record["session_id"],
                hypotheses=hypotheses,
                reference=None if reference is None else list(reference),
            )
        )
    return lists


def write_nbest(path: str | Path, lists: list[NBestList]) -> None:
    lines = []
    for nbest in lists:
        record: dict = {
            "utt_id": nbest.utt_id,
            "session_id": nbest.session_id,
            "hyps": [
                {"words": hyp.tokens, "am": hyp.am_score, "lm": hyp.lm_score}
                for hyp in nbest.hypotheses
            ],
        }
        if nbest.reference is not None:
            record["ref"] = nbest.reference
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_external_embeddings(path: str | Path) -> dict[tuple[str, int], np.ndarray]:
    """Read per-(utt_id, rank) hypothesis vectors from a JSON-lines file."""
    vectors: dict[tuple[str, int], np.ndarray] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        vectors[(record["utt_id"], int(record["rank"]))] = np.asarray(
            record["vec"], dtype=np.float64
        )
    return vectors


def write_external_embeddings(
    path: str | Path, vectors: Mapping[tuple[str, int], np.ndarray]
) -> None:
    lines = []
    for (utt_id, rank), vec in vectors.items():
        record = {"utt_id": utt_id, "rank": rank, "vec": np.asarray(vec, dtype=np.float64).tolist()}
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# model file
# ---------------------------------------------------------------------------


def save_reranker(path, model: RerankerModel) -> None:
    payload = {
        "version": serialize.FORMAT_VERSION,
        "kind": "reranker",
        "dims": {
            "n_best": model.n_best,
            "embed_dim": model.embed_dim,
            "history_dim": model.history_dim,
            "hidden_dim": 0 if model.hidden_w is None else model.hidden_w.shape[1],
        },
        "encoder_mode": model.encoder_mode,
        "encoder_words": model.encoder_words,
        "manifest": model.manifest,
        "loss_log": model.loss_log,
        "weights": {
            "out_w": serialize.pack_array(model.out_w),
            "out_b": serialize.pack_array(model.out_b),
        },
    }
    if model.encoder_table is not None:
        payload["weights"]["encoder_table"] = serialize.pack_array(model.encoder_table)
    if model.hidden_w is not None:
        payload["weights"]["hidden_w"] = serialize.pack_array(model.hidden_w)
        payload["weights"]["hidden_b"] = serialize.pack_array(model.hidden_b)
    serialize.dump_json(path, payload)


def load_reranker(path) -> RerankerModel:
    payload = serialize.load_json(path)
    serialize.check_header(payload, "reranker", path)
    dims = payload["dims"]
    weights = payload["weights"]
    manifest = dict(payload["manifest"])
    n_best = dims["n_best"]
    feature_width = dims["embed_dim"] + dims["history_dim"] + N_SCORE_FEATURES
    in_dim = n_best * feature_width

    encoder_table = None
    if "encoder_table" in weights:
        encoder_table = serialize.unpack_array(weights["encoder_table"])
        if encoder_table.shape != (len(payload["encoder_words"]), dims["embed_dim"]):
            raise ValueError(f"{path}: encoder table shape breaks the dimension chain")
    hidden_w = hidden_b = None
    out_in = in_dim
    if dims["hidden_dim"] > 0:
        hidden_w = serialize.unpack_array(weights["hidden_w"])
        hidden_b = serialize.unpack_array(weights["hidden_b"])
        if hidden_w.shape != (in_dim, dims["hidden_dim"]):
            raise ValueError(f"{path}: hidden weight shape breaks the dimension chain")
        out_in = dims["hidden_dim"]
    out_w = serialize.unpack_array(weights["out_w"])
    out_b = serialize.unpack_array(weights["out_b"])
    if out_w.shape != (out_in, n_best) or out_b.shape != (n_best,):
        raise ValueError(f"{path}: output layer shape breaks the dimension chain")

    return RerankerModel(
        n_best=n_best,
        embed_dim=dims["embed_dim"],
        history_dim=dims["history_dim"],
        encoder_mode=payload["encoder_mode"],
        encoder_words=list(payload["encoder_words"]),
        encoder_table=encoder_table,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        out_w=out_w,
        out_b=out_b,
        use_history=manifest["use_history"],
        encoder_history=manifest["encoder_history"],
        am_weight=manifest["am_weight"],
        history_m=manifest["history_m"],
        history_gamma=manifest["history_gamma"],
        manifest=manifest,
        loss_log=list(payload["loss_log"]),
    )
