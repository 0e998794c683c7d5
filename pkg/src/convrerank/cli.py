"""Command-line pipeline: synthesize, build graph, cluster, train, rerank, evaluate.

Stages communicate only through files inside the work directory.  Every stage
writes a manifest recording the tool version, a hash of the resolved
configuration, and the seed, and warns when an upstream artifact was produced
under a different configuration.  Logs go to stderr; reports go to stdout or
the --out file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from . import __version__, serialize
from .corpus import (
    build_chunks,
    build_vocab,
    read_chunks,
    read_corpus,
    read_vocab,
    write_chunks,
    write_corpus,
    write_vocab,
)
from .evaluate import MethodResult, format_report, relative_reduction, write_records
from .gcn import GcnConfig, gcn_forward, save_gcn_model, train_gcn, word_embedding_table
from .pipeline import (
    centered_word_vectors,
    first_indices,
    fold_in_hypothesis_vectors,
    oracle_indices,
    random_indices,
    rerank_sessions,
    selection_wer,
)
from .pseudolabels import kmeans, read_labels, tfidf, write_labels
from .reranker import (
    RerankerConfig,
    load_reranker,
    prepare_training_features,
    read_external_embeddings,
    read_nbest,
    save_reranker,
    train_reranker,
    write_nbest,
)
from .synthdata import default_benchmark, generate_benchmark, load_benchmark_spec
from .textgraph import build_adjacency, count_cooccurrence, read_graph, write_graph

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    workdir: str = "runs/default"
    seed: int = 42
    spec: str | None = None
    chunk_size: int = 10
    min_count: int = 1
    npmi_threshold: float = 0.0
    chunk_word_tfidf: bool = False
    n_classes: int = 8
    kmeans_max_iters: int = 100
    gcn_hidden_dim: int = 64
    gcn_embedding_dim: int = 32
    gcn_learning_rate: float = 1e-2
    gcn_epochs: int = 200
    n_best: int = 10
    embed_dim: int = 32
    ffn_hidden_dim: int = 0
    reranker_learning_rate: float = 1e-2
    reranker_epochs: int = 150
    am_weight: float = 1.0
    use_history: bool = True
    encoder_history: bool = False
    history_m: int = 5
    history_gamma: float = 0.5
    external_embeddings: str | None = None
    fold_in_encoder: bool = False
    center_embeddings: bool = False

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    allowed = {f.name for f in fields(RunConfig)}
    unknown = set(payload) - allowed
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {sorted(unknown)}")
    return RunConfig(**payload)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for spec_field in fields(RunConfig):
        value = getattr(args, spec_field.name, None)
        if value is not None:
            overrides[spec_field.name] = value
    if getattr(args, "no_history", False):
        overrides["use_history"] = False
    return replace(config, **overrides)


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors by default; the pipeline reserves
    # 2 for data errors, so remap.
    def error(self, message):  # noqa: D102
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing {path.name}: run '{produced_by}' first")
    return path


def _write_manifest(workdir: Path, stage: str, config: RunConfig) -> None:
    payload = {
        "tool": "convrerank",
        "tool_version": __version__,
        "stage": stage,
        "config_hash": config.config_hash(),
        "seed": config.seed,
    }
    serialize.dump_json(workdir / f"{stage}.manifest.json", payload)


def _check_manifest(workdir: Path, stage: str, config: RunConfig) -> None:
    path = workdir / f"{stage}.manifest.json"
    if not path.exists():
        return
    payload = serialize.load_json(path)
    if payload.get("config_hash") != config.config_hash():
        _log(
            f"warning: configuration differs from the one that produced "
            f"{stage} artifacts in {workdir}"
        )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _load_benchmark(config: RunConfig):
    bench = load_benchmark_spec(config.spec) if config.spec else default_benchmark()
    bench.noise.n_hyps = config.n_best
    return bench


def _load_embedding_artifacts(workdir: Path, center: bool = False):
    path = _require(workdir / "word_embeddings.json", "train-gcn")
    payload = serialize.load_json(path)
    serialize.check_header(payload, "word_embeddings", path)
    table = serialize.unpack_array(payload["vectors"])
    words = payload["words"]
    if table.shape[0] != len(words):
        raise ValueError(f"{path}: vector count does not match the word list")
    if center:
        table = centered_word_vectors(table)
    return table, {word: idx for idx, word in enumerate(words)}


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def cmd_synth(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    bench = _load_benchmark(config)
    train_sessions, train_lists, _, test_lists = generate_benchmark(bench, config.seed)
    write_corpus(workdir / "corpus_train.txt", train_sessions)
    write_nbest(workdir / "nbest_train.jsonl", train_lists)
    write_nbest(workdir / "nbest_test.jsonl", test_lists)
    _write_manifest(workdir, "synth", config)
    _log(
        f"synth: {len(train_sessions)} train sessions, {len(train_lists)} train lists, "
        f"{len(test_lists)} test lists -> {workdir}"
    )
    return EXIT_OK


def cmd_build_graph(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    corpus_path = _require(workdir / "corpus_train.txt", "synth")
    _check_manifest(workdir, "synth", config)
    sessions = read_corpus(corpus_path)
    chunks = build_chunks(sessions, config.chunk_size)
    vocab = build_vocab(chunks, config.min_count)
    counts = count_cooccurrence(chunks, vocab)
    graph = build_adjacency(
        counts,
        chunks,
        vocab,
        npmi_threshold=config.npmi_threshold,
        chunk_word_tfidf=config.chunk_word_tfidf,
    )
    write_vocab(workdir / "vocab.json", vocab)
    write_chunks(workdir / "chunks.jsonl", chunks)
    write_graph(workdir / "graph.txt", graph)
    _write_manifest(workdir, "build-graph", config)
    _log(
        f"build-graph: {len(vocab)} words, {len(chunks)} chunks, "
        f"{graph.adjacency.nnz} adjacency entries"
    )
    return EXIT_OK


def cmd_cluster(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    chunks = read_chunks(_require(workdir / "chunks.jsonl", "build-graph"))
    vocab = read_vocab(_require(workdir / "vocab.json", "build-graph"))
    _check_manifest(workdir, "build-graph", config)
    matrix = tfidf(chunks, vocab)
    labels = kmeans(matrix, config.n_classes, seed=config.seed, max_iters=config.kmeans_max_iters)
    write_labels(workdir / "labels.txt", labels)
    _write_manifest(workdir, "cluster", config)
    _log(
        f"cluster: {config.n_classes} classes over {len(chunks)} chunks, "
        f"inertia {labels.inertia:.6f} after {len(labels.inertia_history)} iterations"
    )
    return EXIT_OK


def cmd_train_gcn(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    graph = read_graph(_require(workdir / "graph.txt", "build-graph"))
    labels = read_labels(_require(workdir / "labels.txt", "cluster"))
    vocab = read_vocab(_require(workdir / "vocab.json", "build-graph"))
    _check_manifest(workdir, "cluster", config)
    if labels.shape[0] != graph.n_chunks:
        raise ValueError(
            f"{labels.shape[0]} labels for {graph.n_chunks} chunk nodes; "
            "re-run build-graph and cluster with the same corpus"
        )
    gcn_config = GcnConfig(
        hidden_dim=config.gcn_hidden_dim,
        embedding_dim=config.gcn_embedding_dim,
        learning_rate=config.gcn_learning_rate,
        epochs=config.gcn_epochs,
        seed=config.seed,
    )
    model = train_gcn(graph, labels, gcn_config)
    save_gcn_model(workdir / "gcn_model.json", model)
    trace = gcn_forward(graph, model)
    table = word_embedding_table(model, trace)
    serialize.dump_json(
        workdir / "word_embeddings.json",
        {
            "version": serialize.FORMAT_VERSION,
            "kind": "word_embeddings",
            "words": vocab.id_to_word,
            "dim": table.shape[1],
            "vectors": serialize.pack_array(table),
        },
    )
    _write_manifest(workdir, "train-gcn", config)
    final_loss = model.loss_log[-1] if model.loss_log else float("nan")
    _log(f"train-gcn: {config.gcn_epochs} epochs, final loss {final_loss:.6f}")
    return EXIT_OK


def _reranker_config(config: RunConfig) -> RerankerConfig:
    return RerankerConfig(
        n_best=config.n_best,
        embed_dim=config.embed_dim,
        history_dim=config.gcn_embedding_dim,
        hidden_dim=config.ffn_hidden_dim,
        learning_rate=config.reranker_learning_rate,
        epochs=config.reranker_epochs,
        am_weight=config.am_weight,
        use_history=config.use_history,
        encoder_history=config.encoder_history,
        history_m=config.history_m,
        history_gamma=config.history_gamma,
        seed=config.seed,
    )


def cmd_train_reranker(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    train_lists = read_nbest(_require(workdir / "nbest_train.jsonl", "synth"))
    reranker_config = _reranker_config(config)
    word_vectors = word_to_id = None
    if config.use_history or config.fold_in_encoder:
        word_vectors, word_to_id = _load_embedding_artifacts(workdir, config.center_embeddings)
        _check_manifest(workdir, "train-gcn", config)
        reranker_config = replace(reranker_config, history_dim=word_vectors.shape[1])
    external_vectors = None
    if config.external_embeddings and config.fold_in_encoder:
        raise ValueError("--external-embeddings and --fold-in-encoder are mutually exclusive")
    if config.external_embeddings:
        external_vectors = read_external_embeddings(config.external_embeddings)
    elif config.fold_in_encoder:
        external_vectors = fold_in_hypothesis_vectors(train_lists, word_vectors, word_to_id)
    bundles, encoder_words = prepare_training_features(
        train_lists,
        reranker_config,
        word_vectors=word_vectors if config.use_history else None,
        word_to_id=word_to_id if config.use_history else None,
        external_vectors=external_vectors,
    )
    model = train_reranker(bundles, reranker_config, encoder_words=encoder_words)
    save_reranker(workdir / "reranker.json", model)
    _write_manifest(workdir, "train-reranker", config)
    final_loss = model.loss_log[-1] if model.loss_log else float("nan")
    _log(
        f"train-reranker: {len(bundles)} lists, {config.reranker_epochs} epochs, "
        f"final loss {final_loss:.6f}"
    )
    return EXIT_OK


def cmd_rerank(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    test_lists = read_nbest(_require(workdir / "nbest_test.jsonl", "synth"))
    model = load_reranker(_require(workdir / "reranker.json", "train-reranker"))
    _check_manifest(workdir, "train-reranker", config)
    word_vectors = word_to_id = None
    if model.use_history or config.fold_in_encoder:
        word_vectors, word_to_id = _load_embedding_artifacts(workdir, config.center_embeddings)
    external_vectors = None
    if model.encoder_mode == "external":
        if config.external_embeddings:
            external_vectors = read_external_embeddings(config.external_embeddings)
        elif config.fold_in_encoder:
            external_vectors = fold_in_hypothesis_vectors(test_lists, word_vectors, word_to_id)
        else:
            raise ValueError(
                "the reranker was trained on precomputed hypothesis embeddings; "
                "pass --external-embeddings or --fold-in-encoder"
            )
    indices = rerank_sessions(
        model,
        test_lists,
        word_vectors=word_vectors,
        word_to_id=word_to_id,
        external_vectors=external_vectors,
    )
    lines = [
        json.dumps(
            {"utt_id": nbest.utt_id, "session_id": nbest.session_id, "chosen": index},
            sort_keys=True,
            separators=(",", ":"),
        )
        for nbest, index in zip(test_lists, indices)
    ]
    (workdir / "selections.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(workdir, "rerank", config)
    _log(f"rerank: selected hypotheses for {len(test_lists)} utterances")
    return EXIT_OK


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    test_lists = read_nbest(_require(workdir / "nbest_test.jsonl", "synth"))
    selections_path = _require(workdir / "selections.jsonl", "rerank")
    _check_manifest(workdir, "rerank", config)
    chosen = {}
    for line in selections_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        chosen[record["utt_id"]] = int(record["chosen"])
    missing = [nbest.utt_id for nbest in test_lists if nbest.utt_id not in chosen]
    if missing:
        raise ValueError(f"selections.jsonl is missing {len(missing)} utterances, e.g. {missing[0]!r}")
    reranked = [chosen[nbest.utt_id] for nbest in test_lists]
    results = [
        MethodResult("oracle", selection_wer(test_lists, oracle_indices(test_lists, config.am_weight)), n=config.n_best, seed=config.seed),
        MethodResult("reranked", selection_wer(test_lists, reranked), n=config.n_best, seed=config.seed),
        MethodResult("first", selection_wer(test_lists, first_indices(test_lists)), n=config.n_best, seed=config.seed),
        MethodResult("random", selection_wer(test_lists, random_indices(test_lists, config.seed)), n=config.n_best, seed=config.seed),
    ]
    write_records(workdir / "records.jsonl", results)
    _write_manifest(workdir, "eval", config)
    by_method = {res.method: res.wer for res in results}
    reduction = relative_reduction(by_method["first"], by_method["reranked"])
    report = format_report(results) + f"\n\nreranked vs first: {reduction:+.2f}% relative WER reduction"
    _emit(report, args.out)
    return EXIT_OK


def cmd_sweep_n(config: RunConfig, args: argparse.Namespace) -> int:
    workdir = Path(config.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    try:
        n_values = [int(part) for part in args.n_values.split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"--n-values must be comma-separated integers: {exc}") from exc
    if not n_values or any(n < 1 for n in n_values):
        raise ValueError(f"--n-values must be positive integers, got {args.n_values!r}")
    bench = _load_benchmark(config)
    word_vectors = word_to_id = None
    if config.use_history or config.fold_in_encoder:
        word_vectors, word_to_id = _load_embedding_artifacts(workdir, config.center_embeddings)
    results = []
    for n in n_values:
        bench.noise.n_hyps = n
        _, train_lists, _, test_lists = generate_benchmark(bench, config.seed)
        reranker_config = replace(_reranker_config(config), n_best=n)
        if config.use_history:
            reranker_config = replace(reranker_config, history_dim=word_vectors.shape[1])
        external_vectors = None
        if config.fold_in_encoder:
            external_vectors = fold_in_hypothesis_vectors(
                train_lists + test_lists, word_vectors, word_to_id
            )
        bundles, encoder_words = prepare_training_features(
            train_lists,
            reranker_config,
            word_vectors=word_vectors if config.use_history else None,
            word_to_id=word_to_id if config.use_history else None,
            external_vectors=external_vectors,
        )
        model = train_reranker(bundles, reranker_config, encoder_words=encoder_words)
        indices = rerank_sessions(
            model,
            test_lists,
            word_vectors=word_vectors if config.use_history else None,
            word_to_id=word_to_id if config.use_history else None,
            external_vectors=external_vectors,
        )
        results.append(
            MethodResult("oracle", selection_wer(test_lists, oracle_indices(test_lists, config.am_weight)), n=n, seed=config.seed)
        )
        results.append(MethodResult("reranked", selection_wer(test_lists, indices), n=n, seed=config.seed))
        results.append(MethodResult("first", selection_wer(test_lists, first_indices(test_lists)), n=n, seed=config.seed))
        _log(f"sweep-n: finished n={n}")
    write_records(workdir / "sweep_records.jsonl", results)
    _write_manifest(workdir, "sweep-n", config)
    _emit(format_report(results), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_COMMANDS = {
    "synth": cmd_synth,
    "build-graph": cmd_build_graph,
    "cluster": cmd_cluster,
    "train-gcn": cmd_train_gcn,
    "train-reranker": cmd_train_reranker,
    "rerank": cmd_rerank,
    "eval": cmd_eval,
    "sweep-n": cmd_sweep_n,
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--workdir", help="artifact directory (default runs/default)")
    parser.add_argument("--seed", type=int, help="master seed for every stage")
    parser.add_argument("--spec", help="benchmark spec JSON for synth/sweep-n")
    parser.add_argument("--chunk-size", dest="chunk_size", type=int)
    parser.add_argument("--min-count", dest="min_count", type=int)
    parser.add_argument("--npmi-threshold", dest="npmi_threshold", type=float)
    parser.add_argument(
        "--chunk-word-tfidf", dest="chunk_word_tfidf", action="store_const", const=True
    )
    parser.add_argument("--k", dest="n_classes", type=int, help="number of pseudo-classes")
    parser.add_argument("--max-iters", dest="kmeans_max_iters", type=int)
    parser.add_argument("--gcn-hidden", dest="gcn_hidden_dim", type=int)
    parser.add_argument("--gcn-embed", dest="gcn_embedding_dim", type=int)
    parser.add_argument("--gcn-lr", dest="gcn_learning_rate", type=float)
    parser.add_argument("--gcn-epochs", dest="gcn_epochs", type=int)
    parser.add_argument("--n-best", dest="n_best", type=int)
    parser.add_argument("--embed-dim", dest="embed_dim", type=int)
    parser.add_argument("--ffn-hidden", dest="ffn_hidden_dim", type=int)
    parser.add_argument("--reranker-lr", dest="reranker_learning_rate", type=float)
    parser.add_argument("--reranker-epochs", dest="reranker_epochs", type=int)
    parser.add_argument("--am-weight", dest="am_weight", type=float)
    parser.add_argument("--no-history", dest="no_history", action="store_true")
    parser.add_argument(
        "--encoder-history", dest="encoder_history", action="store_const", const=True
    )
    parser.add_argument("--history-m", dest="history_m", type=int)
    parser.add_argument("--history-gamma", dest="history_gamma", type=float)
    parser.add_argument("--external-embeddings", dest="external_embeddings")
    parser.add_argument(
        "--fold-in-encoder",
        dest="fold_in_encoder",
        action="store_const",
        const=True,
        help="encode hypotheses as mean word vectors instead of learned bags",
    )
    parser.add_argument(
        "--center-embeddings",
        dest="center_embeddings",
        action="store_const",
        const=True,
        help="subtract the mean word vector from the embedding table on load",
    )
    parser.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> _Parser:
    parser = _Parser(prog="convrerank", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub = subparsers.add_parser(name)
        _add_config_flags(sub)
        if name == "sweep-n":
            sub.add_argument("--n-values", dest="n_values", default="5,10,20,40")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
        return _COMMANDS[args.command](config, args)
    except (ValueError, RuntimeError, KeyError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
