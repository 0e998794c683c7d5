"""Synthetic topical conversations and noisy N-best lists for benchmarks.

Sessions draw words mostly from their own topic pool, so conversation history
carries a topic signal.  Hypotheses corrupt the reference with substitutions,
deletions, and insertions whose replacement words lean toward the wrong topic
pool; recognizer scores are noisy functions of the edit count and the
out-of-topic word count.  Per-utterance seed streams make hypothesis sets
nested across different list sizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .corpus import Session
from .reranker import Hypothesis, NBestList


# ---------------------------------------------------------------------------
# generator settings
# ---------------------------------------------------------------------------


@dataclass
class TopicSpec:
    """Corpus shape: topic word pools and session/utterance counts."""

    topic_pools: list[list[str]]
    sessions_per_topic: int
    utterances_per_session: int
    utt_len_min: int = 4
    utt_len_max: int = 9
    mixing_ratio: float = 0.75  # probability a token comes from the session's own pool

    def __post_init__(self) -> None:
        if len(self.topic_pools) < 1 or any(len(pool) == 0 for pool in self.topic_pools):
            raise ValueError("topic_pools must contain at least one non-empty pool")
        if self.sessions_per_topic < 1 or self.utterances_per_session < 1:
            raise ValueError("session and utterance counts must be >= 1")
        if not 1 <= self.utt_len_min <= self.utt_len_max:
            raise ValueError(
                f"utterance length bounds must satisfy 1 <= min <= max, "
                f"got [{self.utt_len_min}, {self.utt_len_max}]"
            )
        if not 0.0 <= self.mixing_ratio <= 1.0:
            raise ValueError(f"mixing_ratio must lie in [0, 1], got {self.mixing_ratio}")

    @property
    def n_topics(self) -> int:
        return len(self.topic_pools)


@dataclass
class NoiseConfig:
    """Per-token corruption rates and score noise for N-best generation."""

    p_sub: float = 0.15
    p_del: float = 0.04
    p_ins: float = 0.05
    score_noise_std: float = 1.5
    n_hyps: int = 10
    seed: int = 0
    wrong_topic_bias: float = 0.9  # substitutions/insertions prefer the wrong pool
    am_scale: float = 1.0  # acoustic penalty per edit operation
    lm_scale: float = 1.0  # language penalty per out-of-topic word

    def __post_init__(self) -> None:
        for name in ("p_sub", "p_del", "p_ins", "wrong_topic_bias"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.p_sub + self.p_del > 1.0:
            raise ValueError(
                f"p_sub + p_del must be <= 1, got {self.p_sub} + {self.p_del}"
            )
        if self.score_noise_std < 0.0:
            raise ValueError(f"score_noise_std must be >= 0, got {self.score_noise_std}")
        if self.n_hyps < 1:
            raise ValueError(f"n_hyps must be >= 1, got {self.n_hyps}")


# ---------------------------------------------------------------------------
# corpus generation
# ---------------------------------------------------------------------------


def session_topic(spec: TopicSpec, session_index: int) -> int:
    """Topic of the session at a given position (sessions are topic-major)."""
    return session_index // spec.sessions_per_topic


def gen_corpus(spec: TopicSpec, seed, id_prefix: str = "s") -> list[Session]:
    """Deterministically generate topic-major sessions for a TopicSpec."""
    rng = np.random.default_rng(seed)
    sessions: list[Session] = []
    for topic in range(spec.n_topics):
        own_pool = spec.topic_pools[topic]
        other_words = [
            word
            for other, pool in enumerate(spec.topic_pools)
            if other != topic
            for word in pool
        ]
        for _ in range(spec.sessions_per_topic):
            utterances = []
            for _ in range(spec.utterances_per_session):
                length = int(rng.integers(spec.utt_len_min, spec.utt_len_max + 1))
                tokens = []
                for _ in range(length):
                    if not other_words or rng.random() < spec.mixing_ratio:
                        tokens.append(own_pool[int(rng.integers(len(own_pool)))])
                    else:
                        tokens.append(other_words[int(rng.integers(len(other_words)))])
                utterances.append(tokens)
            sessions.append(
                Session(session_id=f"{id_prefix}{len(sessions):04d}", utterances=utterances)
            )
    return sessions


# ---------------------------------------------------------------------------
# N-best generation
# ---------------------------------------------------------------------------


def _draw_word(
    rng: np.random.Generator, cfg: NoiseConfig, own_pool: list[str], wrong_pool: list[str]
) -> str:
    if wrong_pool and rng.random() < cfg.wrong_topic_bias:
        return wrong_pool[int(rng.integers(len(wrong_pool)))]
    return own_pool[int(rng.integers(len(own_pool)))]


def gen_nbest(
    ref: list[str],
    cfg: NoiseConfig,
    own_pool: list[str],
    wrong_pool: list[str],
    rng: np.random.Generator,
    utt_id: str = "u000",
    session_id: str = "s0000",
) -> NBestList:
    """Generate one N-best list by corrupting the reference ``n_hyps`` times.

    Each reference token is substituted with probability p_sub or deleted with
    probability p_del, and a word is inserted after it with probability p_ins.
    Hypotheses are sorted by am + lm score, descending; draws consume the rng
    stream in a fixed order so a longer list extends a shorter one generated
    from the same stream.
    """
    own_set = set(own_pool)
    drawn: list[Hypothesis] = []
    for _ in range(cfg.n_hyps):
        tokens: list[str] = []
        n_edits = 0
        for token in ref:
            roll = rng.random()
            if roll < cfg.p_sub:
                tokens.append(_draw_word(rng, cfg, own_pool, wrong_pool))
                n_edits += 1
            elif roll < cfg.p_sub + cfg.p_del:
                n_edits += 1
            else:
                tokens.append(token)
            if rng.random() < cfg.p_ins:
                tokens.append(_draw_word(rng, cfg, own_pool, wrong_pool))
                n_edits += 1
        out_of_topic = sum(1 for tok in tokens if tok not in own_set)
        am = -cfg.am_scale * n_edits + rng.normal(0.0, cfg.score_noise_std)
        lm = -cfg.lm_scale * out_of_topic + rng.normal(0.0, cfg.score_noise_std)
        drawn.append(Hypothesis(tokens=tokens, am_score=float(am), lm_score=float(lm)))
    order = sorted(range(len(drawn)), key=lambda i: (-(drawn[i].am_score + drawn[i].lm_score), i))
    return NBestList(
        utt_id=utt_id,
        session_id=session_id,
        hypotheses=[drawn[i] for i in order],
        reference=list(ref),
    )


def gen_nbest_corpus(
    sessions: list[Session],
    spec: TopicSpec,
    cfg: NoiseConfig,
    stream: int = 0,
) -> list[NBestList]:
    """One N-best list per utterance, each from its own child seed stream.

    The stream id separates train/test draws made from the same noise seed,
    and the per-utterance counter keeps the sets nested when only n_hyps
    changes.
    """
    lists: list[NBestList] = []
    counter = 0
    for session_index, session in enumerate(sessions):
        topic = session_topic(spec, session_index)
        own_pool = spec.topic_pools[topic]
        wrong_pool = [
            word
            for other, pool in enumerate(spec.topic_pools)
            if other != topic
            for word in pool
        ]
        for utt_index, ref in enumerate(session.utterances):
            rng = np.random.default_rng([cfg.seed, stream, counter])
            lists.append(
                gen_nbest(
                    ref,
                    cfg,
                    own_pool,
                    wrong_pool,
                    rng,
                    utt_id=f"{session.session_id}_u{utt_index:03d}",
                    session_id=session.session_id,
                )
            )
            counter += 1
    return lists


# ---------------------------------------------------------------------------
# bundled benchmark
# ---------------------------------------------------------------------------

_TOPIC_A = [
    "agenda", "budget", "meeting", "minutes", "quarter", "report", "deadline",
    "invoice", "client", "contract", "proposal", "revenue", "forecast", "hiring",
    "review", "office", "travel", "expense", "payroll", "vendor", "marketing",
    "campaign", "launch", "sales", "target", "pipeline", "summary", "planning",
]

_TOPIC_B = [
    "kernel", "compiler", "thread", "buffer", "socket", "packet", "latency",
    "cache", "pointer", "syntax", "debugger", "commit", "branch", "merge",
    "server", "cluster", "container", "deploy", "rollback", "metric", "logging",
    "queue", "schema", "index", "query", "backup", "runtime", "parser",
]


@dataclass
class BenchmarkSpec:
    """Train/test corpus shapes plus the shared noise settings."""

    train: TopicSpec
    test: TopicSpec
    noise: NoiseConfig


def default_benchmark(n_hyps: int = 10, seed: int = 0) -> BenchmarkSpec:
    """Two-topic benchmark sized so context is decisive but runs stay fast.

    Utterances are short (3 to 6 words) so a single hypothesis rarely settles
    its own topic, while the surrounding session does; substitutions lean
    hard into the wrong pool and the score noise is high enough that the
    recognizer ranking leaves real headroom.
    """
    train = TopicSpec(
        topic_pools=[list(_TOPIC_A), list(_TOPIC_B)],
        sessions_per_topic=75,
        utterances_per_session=30,
        utt_len_min=3,
        utt_len_max=6,
        mixing_ratio=0.85,
    )
    test = TopicSpec(
        topic_pools=[list(_TOPIC_A), list(_TOPIC_B)],
        sessions_per_topic=20,
        utterances_per_session=25,
        utt_len_min=3,
        utt_len_max=6,
        mixing_ratio=0.85,
    )
    noise = NoiseConfig(
        p_sub=0.18,
        p_del=0.04,
        p_ins=0.06,
        score_noise_std=2.5,
        n_hyps=n_hyps,
        seed=seed,
        wrong_topic_bias=0.95,
    )
    return BenchmarkSpec(train=train, test=test, noise=noise)


def generate_benchmark(
    bench: BenchmarkSpec, seed: int
) -> tuple[list[Session], list[NBestList], list[Session], list[NBestList]]:
    """Train sessions and lists, then test sessions and lists, all from one seed."""
    noise = replace(bench.noise, seed=seed)
    train_sessions = gen_corpus(bench.train, [seed, 0], id_prefix="s")
    test_sessions = gen_corpus(bench.test, [seed, 1], id_prefix="t")
    train_lists = gen_nbest_corpus(train_sessions, bench.train, noise, stream=2)
    test_lists = gen_nbest_corpus(test_sessions, bench.test, noise, stream=3)
    return train_sessions, train_lists, test_sessions, test_lists


# ---------------------------------------------------------------------------
# spec file
# ---------------------------------------------------------------------------


def load_benchmark_spec(path: str | Path) -> BenchmarkSpec:
    """Read a benchmark spec from JSON; unknown keys are rejected."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    known_top = {"topic_pools", "train", "test", "noise"}
    unknown = set(payload) - known_top
    if unknown:
        raise ValueError(f"{path}: unknown benchmark spec keys: {sorted(unknown)}")
    pools = payload.get("topic_pools")

    def topic_spec(section: dict) -> TopicSpec:
        section = dict(section)
        if "topic_pools" not in section:
            if pools is None:
                raise ValueError(f"{path}: topic_pools missing at top level and in section")
            section["topic_pools"] = pools
        allowed = {f.name for f in fields(TopicSpec)}
        unknown = set(section) - allowed
        if unknown:
            raise ValueError(f"{path}: unknown TopicSpec keys: {sorted(unknown)}")
        return TopicSpec(**section)

    noise_section = dict(payload.get("noise", {}))
    allowed = {f.name for f in fields(NoiseConfig)}
    unknown = set(noise_section) - allowed
    if unknown:
        raise ValueError(f"{path}: unknown NoiseConfig keys: {sorted(unknown)}")
    return BenchmarkSpec(
        train=topic_spec(payload["train"]),
        test=topic_spec(payload["test"]),
        noise=NoiseConfig(**noise_section),
    )
