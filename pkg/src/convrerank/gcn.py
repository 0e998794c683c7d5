"""Two-layer graph convolution with a linear classifier over chunk nodes.

Node input features are implicit one-hot vectors, so the first convolution
weight matrix doubles as a learned per-node feature table and the first layer
reduces to multiplying the normalized adjacency by that matrix.  Training is
full-batch Adam on a cross-entropy loss over the chunk nodes; gradients are
computed analytically (ReLU subgradient at zero taken as zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import serialize
from .optim import Adam
from .pseudolabels import PseudoLabels
from .textgraph import HeteroGraph

DEFAULT_HIDDEN_DIM = 64
DEFAULT_EMBEDDING_DIM = 32


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass
class GcnConfig:
    hidden_dim: int = DEFAULT_HIDDEN_DIM
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    learning_rate: float = 1e-2
    epochs: int = 200
    seed: int = 0


@dataclass
class GcnModel:
    """Learned weights plus enough shape metadata to validate inputs."""

    conv1: np.ndarray  # (n_nodes, hidden_dim)
    conv2: np.ndarray  # (hidden_dim, embedding_dim)
    cls_w: np.ndarray  # (embedding_dim, n_classes)
    cls_b: np.ndarray  # (n_classes,)
    n_words: int
    n_chunks: int
    manifest: dict
    loss_log: list[float] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.n_words + self.n_chunks

    @property
    def hidden_dim(self) -> int:
        return self.conv1.shape[1]

    @property
    def embedding_dim(self) -> int:
        return self.conv2.shape[1]

    @property
    def n_classes(self) -> int:
        return self.cls_w.shape[1]


@dataclass
class ForwardTrace:
    """Intermediate activations kept for backprop and embedding reads."""

    pre1: np.ndarray  # (n_nodes, hidden_dim) before ReLU
    act1: np.ndarray
    conv2_in: np.ndarray  # normalized adjacency applied to act1
    pre2: np.ndarray  # (n_nodes, embedding_dim) before ReLU
    act2: np.ndarray  # final node embeddings
    logits: np.ndarray  # (n_chunks, n_classes)


@dataclass
class GcnGradients:
    conv1: np.ndarray
    conv2: np.ndarray
    cls_w: np.ndarray
    cls_b: np.ndarray


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_gcn_model(graph: HeteroGraph, n_classes: int, config: GcnConfig) -> GcnModel:
    """Seeded initialization: uniform Glorot convolutions, zero classifier.

    The zero classifier keeps training exactly equivariant under permutations
    of the nominal class ids.
    """
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    rng = np.random.default_rng(config.seed)
    conv1 = _glorot(rng, graph.n_nodes, config.hidden_dim)
    conv2 = _glorot(rng, config.hidden_dim, config.embedding_dim)
    cls_w = np.zeros((config.embedding_dim, n_classes), dtype=np.float64)
    cls_b = np.zeros(n_classes, dtype=np.float64)
    manifest = {
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "hidden_dim": config.hidden_dim,
        "embedding_dim": config.embedding_dim,
        "n_classes": n_classes,
    }
    return GcnModel(
        conv1=conv1,
        conv2=conv2,
        cls_w=cls_w,
        cls_b=cls_b,
        n_words=graph.n_words,
        n_chunks=graph.n_chunks,
        manifest=manifest,
    )


# ---------------------------------------------------------------------------
# forward / loss / backward
# ---------------------------------------------------------------------------


def gcn_forward(graph: HeteroGraph, model: GcnModel) -> ForwardTrace:
    if model.conv1.shape[0] != graph.n_nodes:
        raise ValueError(
            f"model was built for {model.conv1.shape[0]} nodes, graph has {graph.n_nodes}"
        )
    if model.n_words != graph.n_words:
        raise ValueError(
            f"model expects {model.n_words} word nodes, graph has {graph.n_words}"
        )
    adj = graph.normalized
    pre1 = adj @ model.conv1
    act1 = np.maximum(pre1, 0.0)
    conv2_in = adj @ act1
    pre2 = conv2_in @ model.conv2
    act2 = np.maximum(pre2, 0.0)
    logits = act2[graph.chunk_rows] @ model.cls_w + model.cls_b
    return ForwardTrace(pre1=pre1, act1=act1, conv2_in=conv2_in, pre2=pre2, act2=act2, logits=logits)


def _label_array(labels: PseudoLabels | np.ndarray) -> np.ndarray:
    array = labels.labels if isinstance(labels, PseudoLabels) else labels
    return np.asarray(array, dtype=np.int64)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def ce_loss(logits: np.ndarray, labels: PseudoLabels | np.ndarray) -> float:
    """Mean cross-entropy over the labeled chunk rows, max-shifted for stability."""
    targets = _label_array(labels)
    if targets.shape[0] != logits.shape[0]:
        raise ValueError(f"{targets.shape[0]} labels for {logits.shape[0]} logit rows")
    n_classes = logits.shape[1]
    if (targets < 0).any() or (targets >= n_classes).any():
        bad = int(targets[(targets < 0) | (targets >= n_classes)][0])
        raise ValueError(f"label {bad} is outside the {n_classes} model classes")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(targets.shape[0]), targets]
    return float((log_norm - picked).mean())


def backward(
    trace: ForwardTrace,
    labels: PseudoLabels | np.ndarray,
    graph: HeteroGraph,
    model: GcnModel,
) -> GcnGradients:
    """Analytic gradients of the mean cross-entropy for every weight array."""
    targets = _label_array(labels)
    n_labeled = targets.shape[0]
    d_logits = _softmax(trace.logits)
    d_logits[np.arange(n_labeled), targets] -= 1.0
    d_logits /= n_labeled

    grad_cls_b = d_logits.sum(axis=0)
    chunk_embeddings = trace.act2[graph.chunk_rows]
    grad_cls_w = chunk_embeddings.T @ d_logits

    d_act2 = np.zeros_like(trace.act2)
    d_act2[graph.chunk_rows] = d_logits @ model.cls_w.T
    d_pre2 = d_act2 * (trace.pre2 > 0.0)
    grad_conv2 = trace.conv2_in.T @ d_pre2

    d_act1 = graph.normalized.T @ (d_pre2 @ model.conv2.T)
    d_pre1 = d_act1 * (trace.pre1 > 0.0)
    grad_conv1 = graph.normalized.T @ d_pre1

    return GcnGradients(conv1=grad_conv1, conv2=grad_conv2, cls_w=grad_cls_w, cls_b=grad_cls_b)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def train_gcn(
    graph: HeteroGraph,
    labels: PseudoLabels | np.ndarray,
    config: GcnConfig | None = None,
) -> GcnModel:
    """Full-batch Adam training; the per-epoch loss lands in ``model.loss_log``."""
    config = config or GcnConfig()
    targets = _label_array(labels)
    if targets.shape[0] != graph.n_chunks:
        raise ValueError(f"{targets.shape[0]} labels for {graph.n_chunks} chunk nodes")
    n_classes = (
        labels.n_classes if isinstance(labels, PseudoLabels) else int(targets.max()) + 1
    )
    model = init_gcn_model(graph, n_classes, config)
    optimizer = Adam(config.learning_rate)
    params = {
        "conv1": model.conv1,
        "conv2": model.conv2,
        "cls_w": model.cls_w,
        "cls_b": model.cls_b,
    }
    for epoch in range(config.epochs):
        trace = gcn_forward(graph, model)
        loss = ce_loss(trace.logits, targets)
        if not math.isfinite(loss):
            raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
        model.loss_log.append(loss)
        grads = backward(trace, targets, graph, model)
        optimizer.step(
            params,
            {"conv1": grads.conv1, "conv2": grads.conv2, "cls_w": grads.cls_w, "cls_b": grads.cls_b},
        )
    return model


def training_accuracy(trace: ForwardTrace, labels: PseudoLabels | np.ndarray) -> float:
    """Fraction of chunk nodes whose argmax logit matches the label."""
    targets = _label_array(labels)
    predictions = trace.logits.argmax(axis=1)
    return float((predictions == targets).mean())


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def word_embedding(model: GcnModel, trace: ForwardTrace, word_id: int) -> np.ndarray:
    """Final-layer embedding of one word node."""
    if not 0 <= word_id < model.n_words:
        raise ValueError(
            f"node {word_id} is not a word node (word ids span [0, {model.n_words}))"
        )
    return trace.act2[word_id].copy()


def word_embedding_table(model: GcnModel, trace: ForwardTrace) -> np.ndarray:
    """All word-node embeddings as a (n_words, embedding_dim) matrix."""
    return trace.act2[: model.n_words].copy()


# ---------------------------------------------------------------------------
# model file
# ---------------------------------------------------------------------------


def save_gcn_model(path, model: GcnModel) -> None:
    payload = {
        "version": serialize.FORMAT_VERSION,
        "kind": "gcn",
        "dims": {
            "n_words": model.n_words,
            "n_chunks": model.n_chunks,
            "hidden_dim": model.hidden_dim,
            "embedding_dim": model.embedding_dim,
            "n_classes": model.n_classes,
        },
        "manifest": model.manifest,
        "loss_log": model.loss_log,
        "weights": {
            "conv1": serialize.pack_array(model.conv1),
            "conv2": serialize.pack_array(model.conv2),
            "cls_w": serialize.pack_array(model.cls_w),
            "cls_b": serialize.pack_array(model.cls_b),
        },
    }
    serialize.dump_json(path, payload)


def load_gcn_model(path) -> GcnModel:
    payload = serialize.load_json(path)
    serialize.check_header(payload, "gcn", path)
    dims = payload["dims"]
    weights = payload["weights"]
    conv1 = serialize.unpack_array(weights["conv1"])
    conv2 = serialize.unpack_array(weights["conv2"])
    cls_w = serialize.unpack_array(weights["cls_w"])
    cls_b = serialize.unpack_array(weights["cls_b"])
    n_nodes = dims["n_words"] + dims["n_chunks"]
    chain = [
        (conv1.shape, (n_nodes, dims["hidden_dim"])),
        (conv2.shape, (dims["hidden_dim"], dims["embedding_dim"])),
        (cls_w.shape, (dims["embedding_dim"], dims["n_classes"])),
        (cls_b.shape, (dims["n_classes"],)),
    ]
    for actual, expected in chain:
        if tuple(actual) != expected:
            raise ValueError(f"{path}: weight shape {actual} breaks the dimension chain {expected}")
    return GcnModel(
        conv1=conv1,
        conv2=conv2,
        cls_w=cls_w,
        cls_b=cls_b,
        n_words=dims["n_words"],
        n_chunks=dims["n_chunks"],
        manifest=dict(payload["manifest"]),
        loss_log=list(payload["loss_log"]),
    )
