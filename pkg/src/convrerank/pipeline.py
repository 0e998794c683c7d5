"""End-to-end composition of the pipeline stages, shared by the CLI and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .corpus import Session, Vocabulary, build_chunks, build_vocab
from .evaluate import corpus_wer
from .gcn import GcnConfig, gcn_forward, train_gcn, word_embedding_table
from .history import HistoryState, fold_in
from .pseudolabels import kmeans, tfidf
from .reranker import (
    NBestList,
    RerankerConfig,
    RerankerModel,
    label_oracle,
    prepare_training_features,
    rerank,
    train_reranker,
    training_accuracy,
)
from .synthdata import BenchmarkSpec, generate_benchmark
from .textgraph import HeteroGraph, build_adjacency, count_cooccurrence


# ---------------------------------------------------------------------------
# stage compositions
# ---------------------------------------------------------------------------


def graph_from_sessions(
    sessions: list[Session],
    chunk_size: int = 10,
    min_count: int = 1,
    npmi_threshold: float = 0.0,
    chunk_word_tfidf: bool = False,
):
    """Chunks, vocabulary, and heterogeneous graph from raw sessions."""
    chunks = build_chunks(sessions, chunk_size)
    vocab = build_vocab(chunks, min_count)
    counts = count_cooccurrence(chunks, vocab)
    graph = build_adjacency(
        counts, chunks, vocab, npmi_threshold=npmi_threshold, chunk_word_tfidf=chunk_word_tfidf
    )
    return chunks, vocab, graph


def embeddings_from_graph(
    graph: HeteroGraph,
    chunks,
    vocab: Vocabulary,
    n_classes: int,
    gcn_config: GcnConfig,
    kmeans_seed: int = 0,
    kmeans_max_iters: int = 100,
):
    """Pseudo-labels, trained GCN, and the word-embedding table."""
    matrix = tfidf(chunks, vocab)
    labels = kmeans(matrix, n_classes, seed=kmeans_seed, max_iters=kmeans_max_iters)
    model = train_gcn(graph, labels, gcn_config)
    trace = gcn_forward(graph, model)
    table = word_embedding_table(model, trace)
    return labels, model, table


def rerank_sessions(
    model: RerankerModel,
    lists: list[NBestList],
    word_vectors: np.ndarray | None = None,
    word_to_id=None,
    external_vectors=None,
) -> list[int]:
    """Rerank lists session by session, threading the chosen transcripts.

    Lists are grouped by session id in file order; the history state resets
    at every session start and absorbs each chosen transcript.
    """
    order: list[str] = []
    by_session: dict[str, list[NBestList]] = {}
    for nbest in lists:
        if nbest.session_id not in by_session:
            by_session[nbest.session_id] = []
            order.append(nbest.session_id)
        by_session[nbest.session_id].append(nbest)
    chosen: dict[str, int] = {}
    for session_id in order:
        state = HistoryState(model.history_m, model.history_gamma)
        for nbest in by_session[session_id]:
            index = rerank(
                model,
                nbest,
                history_state=state,
                word_vectors=word_vectors,
                word_to_id=word_to_id,
                external_vectors=external_vectors,
            )
            chosen[nbest.utt_id] = index
            state.append(nbest.hypotheses[index].tokens)
    return [chosen[nbest.utt_id] for nbest in lists]


# ---------------------------------------------------------------------------
# selection baselines and scoring
# ---------------------------------------------------------------------------


def selection_wer(lists: list[NBestList], indices: list[int]) -> float:
    pairs = [
        (nbest.reference, nbest.hypotheses[index].tokens)
        for nbest, index in zip(lists, indices)
    ]
    return corpus_wer(pairs)


def oracle_indices(lists: list[NBestList], am_weight: float = 1.0) -> list[int]:
    return [label_oracle(nbest, am_weight) for nbest in lists]


def first_indices(lists: list[NBestList]) -> list[int]:
    return [0 for _ in lists]


def random_indices(lists: list[NBestList], seed: int) -> list[int]:
    rng = np.random.default_rng([seed, 7])
    return [int(rng.integers(len(nbest.hypotheses))) for nbest in lists]


def centered_word_vectors(table: np.ndarray) -> np.ndarray:
    """Column-centered copy of a word embedding table.

    Removing the shared mean leaves the directions that separate words, which
    makes downstream similarity features far easier for a small head to pick
    up.  The raw table is left untouched.
    """
    table = np.asarray(table, dtype=np.float64)
    return table - table.mean(axis=0)


def fold_in_hypothesis_vectors(
    lists: list[NBestList],
    word_vectors: np.ndarray,
    word_to_id,
) -> dict[tuple[str, int], np.ndarray]:
    """Precompute a hypothesis vector for every (utterance, rank) by folding in.

    Produces the mapping the reranker's external-encoder mode consumes, with
    each hypothesis embedded as the mean word vector of its transcript.  This
    plays the role of an upstream sentence encoder and keeps hypotheses in the
    same space as the history vectors.
    """
    vectors: dict[tuple[str, int], np.ndarray] = {}
    for nbest in lists:
        for rank, hyp in enumerate(nbest.hypotheses):
            vectors[(nbest.utt_id, rank)] = fold_in(word_vectors, word_to_id, hyp.tokens)
    return vectors


# ---------------------------------------------------------------------------
# in-memory benchmark run
# ---------------------------------------------------------------------------


@dataclass
class BenchmarkResult:
    """Corpus WER of each selection strategy on one generated benchmark."""

    oracle: float
    reranked: float
    first: float
    random: float
    train_accuracy: float


def run_benchmark(
    train_lists: list[NBestList],
    test_lists: list[NBestList],
    reranker_config: RerankerConfig,
    word_vectors: np.ndarray | None = None,
    word_to_id=None,
    seed: int = 0,
    external_vectors=None,
) -> BenchmarkResult:
    """Train a reranker on ``train_lists`` and score selections on ``test_lists``.

    ``external_vectors`` must cover both list sets when provided; it switches
    the hypothesis encoder to the precomputed-embedding mode.
    """
    bundles, encoder_words = prepare_training_features(
        train_lists,
        reranker_config,
        word_vectors=word_vectors,
        word_to_id=word_to_id,
        external_vectors=external_vectors,
    )
    model = train_reranker(bundles, reranker_config, encoder_words=encoder_words)
    reranked = rerank_sessions(
        model,
        test_lists,
        word_vectors=word_vectors if reranker_config.use_history else None,
        word_to_id=word_to_id if reranker_config.use_history else None,
        external_vectors=external_vectors,
    )
    return BenchmarkResult(
        oracle=selection_wer(test_lists, oracle_indices(test_lists, reranker_config.am_weight)),
        reranked=selection_wer(test_lists, reranked),
        first=selection_wer(test_lists, first_indices(test_lists)),
        random=selection_wer(test_lists, random_indices(test_lists, seed)),
        train_accuracy=training_accuracy(model, bundles),
    )


def run_history_ablation(
    bench: BenchmarkSpec,
    seed: int,
    reranker_config: RerankerConfig | None = None,
    n_classes: int = 2,
    gcn_config: GcnConfig | None = None,
    chunk_size: int = 10,
) -> tuple[BenchmarkResult, BenchmarkResult]:
    """Train twin rerankers, with and without history, on one generated benchmark.

    Builds the graph and GCN embeddings from the train corpus, centers the
    table, folds every hypothesis into the same space as precomputed encoder
    vectors, and trains the two rerankers that differ only in ``use_history``.
    Returns (with_history, without_history) results.
    """
    if reranker_config is None:
        reranker_config = RerankerConfig(
            hidden_dim=64, learning_rate=3e-3, epochs=150, seed=seed
        )
    if gcn_config is None:
        gcn_config = GcnConfig(seed=seed)

    train_sessions, train_lists, _, test_lists = generate_benchmark(bench, seed)
    chunks, vocab, graph = graph_from_sessions(train_sessions, chunk_size=chunk_size)
    _, _, table = embeddings_from_graph(
        graph, chunks, vocab, n_classes=n_classes, gcn_config=gcn_config, kmeans_seed=seed
    )
    table = centered_word_vectors(table)
    external = fold_in_hypothesis_vectors(train_lists + test_lists, table, vocab.word_to_id)

    base = replace(reranker_config, history_dim=table.shape[1], seed=seed)
    with_history = run_benchmark(
        train_lists,
        test_lists,
        replace(base, use_history=True),
        word_vectors=table,
        word_to_id=vocab.word_to_id,
        seed=seed,
        external_vectors=external,
    )
    without_history = run_benchmark(
        train_lists,
        test_lists,
        replace(base, use_history=False),
        word_vectors=table,
        word_to_id=vocab.word_to_id,
        seed=seed,
        external_vectors=external,
    )
    return with_history, without_history
