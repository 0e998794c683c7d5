"""Synthetic corpus and N-best generator tests.

Statistical checks use 3-standard-error tolerances around the configured
rates; structural checks (nesting, ordering, determinism) are exact.
"""

import json
import math

import numpy as np
import pytest

from convrerank.evaluate import align
from convrerank.reranker import combined_score
from convrerank.synthdata import (
    BenchmarkSpec,
    NoiseConfig,
    TopicSpec,
    default_benchmark,
    gen_corpus,
    gen_nbest,
    gen_nbest_corpus,
    generate_benchmark,
    load_benchmark_spec,
    session_topic,
)

POOLS = [["red%d" % i for i in range(10)], ["blue%d" % i for i in range(10)]]


def small_spec(**kwargs):
    defaults = dict(
        topic_pools=[list(p) for p in POOLS],
        sessions_per_topic=3,
        utterances_per_session=5,
        utt_len_min=3,
        utt_len_max=6,
        mixing_ratio=0.8,
    )
    defaults.update(kwargs)
    return TopicSpec(**defaults)


class TestSpecs:
    def test_topic_spec_validation(self):
        with pytest.raises(ValueError):
            small_spec(topic_pools=[[]])
        with pytest.raises(ValueError):
            small_spec(sessions_per_topic=0)
        with pytest.raises(ValueError):
            small_spec(utt_len_min=0)
        with pytest.raises(ValueError):
            small_spec(utt_len_min=5, utt_len_max=4)
        with pytest.raises(ValueError):
            small_spec(mixing_ratio=1.2)

    def test_noise_config_validation(self):
        with pytest.raises(ValueError):
            NoiseConfig(p_sub=1.5)
        with pytest.raises(ValueError):
            NoiseConfig(p_sub=0.7, p_del=0.5)
        with pytest.raises(ValueError):
            NoiseConfig(score_noise_std=-1.0)
        with pytest.raises(ValueError):
            NoiseConfig(n_hyps=0)

    def test_session_topic_is_topic_major(self):
        spec = small_spec(sessions_per_topic=3)
        assert [session_topic(spec, i) for i in range(6)] == [0, 0, 0, 1, 1, 1]


class TestGenCorpus:
    def test_shape_and_length_bounds(self):
        spec = small_spec()
        sessions = gen_corpus(spec, seed=0)
        assert len(sessions) == 6
        for session in sessions:
            assert len(session.utterances) == 5
            for utt in session.utterances:
                assert 3 <= len(utt) <= 6

    def test_mixing_ratio_one_keeps_own_pool(self):
        spec = small_spec(mixing_ratio=1.0, sessions_per_topic=4)
        sessions = gen_corpus(spec, seed=1)
        for index, session in enumerate(sessions):
            own = set(spec.topic_pools[session_topic(spec, index)])
            for utt in session.utterances:
                assert set(utt) <= own

    def test_mixing_ratio_statistics(self):
        """Own-pool fraction approximates the mixing ratio within 3 SE."""
        ratio = 0.8
        spec = small_spec(
            mixing_ratio=ratio, sessions_per_topic=40, utterances_per_session=10
        )
        sessions = gen_corpus(spec, seed=2)
        own_tokens = 0
        total = 0
        for index, session in enumerate(sessions):
            own = set(spec.topic_pools[session_topic(spec, index)])
            for utt in session.utterances:
                own_tokens += sum(1 for tok in utt if tok in own)
                total += len(utt)
        se = math.sqrt(ratio * (1.0 - ratio) / total)
        assert abs(own_tokens / total - ratio) < 3.0 * se

    def test_deterministic(self):
        spec = small_spec()
        assert gen_corpus(spec, seed=3) == gen_corpus(spec, seed=3)

    def test_id_prefix(self):
        sessions = gen_corpus(small_spec(), seed=0, id_prefix="t")
        assert sessions[0].session_id == "t0000"


class TestGenNbest:
    def _cfg(self, **kwargs):
        defaults = dict(p_sub=0.18, p_del=0.04, p_ins=0.06, score_noise_std=1.0, n_hyps=8)
        defaults.update(kwargs)
        return NoiseConfig(**defaults)

    def test_zero_noise_copies_reference(self):
        """With all corruption rates at zero every hypothesis equals the reference."""
        cfg = self._cfg(p_sub=0.0, p_del=0.0, p_ins=0.0, score_noise_std=0.0)
        ref = [POOLS[0][k] for k in (0, 1, 2, 3)]
        rng = np.random.default_rng(0)
        nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], rng)
        for hyp in nbest.hypotheses:
            assert hyp.tokens == ref
            assert align(ref, hyp.tokens).wer == 0.0

    def test_hypotheses_sorted_by_combined_score(self):
        cfg = self._cfg()
        ref = [POOLS[0][k] for k in (0, 1, 2, 3, 4)]
        rng = np.random.default_rng(1)
        nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], rng)
        scores = [combined_score(h) for h in nbest.hypotheses]
        assert scores == sorted(scores, reverse=True)

    def test_substitution_rate_statistics(self):
        """Substitution-only noise mismatches tokens at rate p_sub within 3 SE.

        The wrong-topic bias is 1 and the pools are disjoint, so a substituted
        token can never coincide with the reference token.
        """
        p_sub = 0.3
        cfg = NoiseConfig(
            p_sub=p_sub, p_del=0.0, p_ins=0.0, score_noise_std=0.0,
            n_hyps=1, wrong_topic_bias=1.0,
        )
        rng = np.random.default_rng(2)
        mismatches = 0
        total = 0
        for _ in range(400):
            ref = [POOLS[0][int(k)] for k in rng.integers(0, 10, size=25)]
            nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], rng)
            hyp = nbest.hypotheses[0].tokens
            assert len(hyp) == len(ref)
            mismatches += sum(1 for a, b in zip(ref, hyp) if a != b)
            total += len(ref)
        se = math.sqrt(p_sub * (1.0 - p_sub) / total)
        assert abs(mismatches / total - p_sub) < 3.0 * se

    def test_deletion_rate_statistics(self):
        p_del = 0.2
        cfg = NoiseConfig(p_sub=0.0, p_del=p_del, p_ins=0.0, score_noise_std=0.0, n_hyps=1)
        rng = np.random.default_rng(3)
        deleted = 0
        total = 0
        for _ in range(400):
            ref = [POOLS[0][int(k)] for k in rng.integers(0, 10, size=25)]
            nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], rng)
            deleted += len(ref) - len(nbest.hypotheses[0].tokens)
            total += len(ref)
        se = math.sqrt(p_del * (1.0 - p_del) / total)
        assert abs(deleted / total - p_del) < 3.0 * se

    def test_insertion_rate_statistics(self):
        p_ins = 0.15
        cfg = NoiseConfig(p_sub=0.0, p_del=0.0, p_ins=p_ins, score_noise_std=0.0, n_hyps=1)
        rng = np.random.default_rng(4)
        inserted = 0
        total = 0
        for _ in range(400):
            ref = [POOLS[0][int(k)] for k in rng.integers(0, 10, size=25)]
            nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], rng)
            inserted += len(nbest.hypotheses[0].tokens) - len(ref)
            total += len(ref)
        se = math.sqrt(p_ins * (1.0 - p_ins) / total)
        assert abs(inserted / total - p_ins) < 3.0 * se

    def test_wrong_topic_bias_statistics(self):
        """Substituted words come from the wrong pool at the configured rate."""
        bias = 0.9
        cfg = NoiseConfig(
            p_sub=1.0, p_del=0.0, p_ins=0.0, score_noise_std=0.0,
            n_hyps=1, wrong_topic_bias=bias,
        )
        rng = np.random.default_rng(5)
        wrong = 0
        total = 0
        wrong_pool = set(POOLS[1])
        for _ in range(200):
            ref = [POOLS[0][int(k)] for k in rng.integers(0, 10, size=25)]
            nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], rng)
            for tok in nbest.hypotheses[0].tokens:
                wrong += tok in wrong_pool
                total += 1
        se = math.sqrt(bias * (1.0 - bias) / total)
        assert abs(wrong / total - bias) < 3.0 * se

    def test_reference_is_attached(self):
        cfg = self._cfg()
        ref = [POOLS[0][0], POOLS[0][1], POOLS[0][2]]
        nbest = gen_nbest(ref, cfg, POOLS[0], POOLS[1], np.random.default_rng(6))
        assert nbest.reference == ref


class TestNestedGeneration:
    def test_hypothesis_sets_nest_as_n_grows(self):
        """Growing n_hyps extends each per-utterance draw stream in place."""
        spec = small_spec()
        sessions = gen_corpus(spec, seed=7)
        small = gen_nbest_corpus(sessions, spec, NoiseConfig(n_hyps=5, seed=9), stream=2)
        large = gen_nbest_corpus(sessions, spec, NoiseConfig(n_hyps=10, seed=9), stream=2)
        assert len(small) == len(large)
        for few, many in zip(small, large):

            def key(hyp):
                return (tuple(hyp.tokens), hyp.am_score, hyp.lm_score)

            few_set = {key(h) for h in few.hypotheses}
            many_set = {key(h) for h in many.hypotheses}
            assert few_set <= many_set

    def test_oracle_wer_weakly_improves_with_n(self):
        spec = small_spec(sessions_per_topic=5)
        sessions = gen_corpus(spec, seed=8)
        rates = []
        for n in (2, 5, 10):
            lists = gen_nbest_corpus(
                sessions, spec, NoiseConfig(n_hyps=n, seed=10, score_noise_std=2.0), stream=2
            )
            errors = 0
            length = 0
            for nbest in lists:
                best = min(align(nbest.reference, h.tokens).errors for h in nbest.hypotheses)
                errors += best
                length += len(nbest.reference)
            rates.append(errors / length)
        assert rates[0] >= rates[1] >= rates[2]

    def test_streams_are_independent(self):
        spec = small_spec()
        sessions = gen_corpus(spec, seed=11)
        a = gen_nbest_corpus(sessions, spec, NoiseConfig(n_hyps=3, seed=12), stream=2)
        b = gen_nbest_corpus(sessions, spec, NoiseConfig(n_hyps=3, seed=12), stream=3)
        assert a != b

    def test_utt_ids_name_session_and_position(self):
        spec = small_spec()
        sessions = gen_corpus(spec, seed=13)
        lists = gen_nbest_corpus(sessions, spec, NoiseConfig(n_hyps=2, seed=0), stream=2)
        assert lists[0].utt_id == "s0000_u000"
        assert lists[0].session_id == "s0000"
        assert lists[5].utt_id == "s0001_u000"


class TestBenchmark:
    def test_generate_benchmark_shapes_and_prefixes(self):
        bench = BenchmarkSpec(
            train=small_spec(),
            test=small_spec(sessions_per_topic=2, utterances_per_session=3),
            noise=NoiseConfig(n_hyps=4),
        )
        train_sessions, train_lists, test_sessions, test_lists = generate_benchmark(bench, seed=42)
        assert len(train_sessions) == 6 and len(test_sessions) == 4
        assert len(train_lists) == 30 and len(test_lists) == 12
        assert train_sessions[0].session_id.startswith("s")
        assert test_sessions[0].session_id.startswith("t")

    def test_generate_benchmark_deterministic(self):
        bench = BenchmarkSpec(
            train=small_spec(), test=small_spec(sessions_per_topic=2),
            noise=NoiseConfig(n_hyps=3),
        )
        first = generate_benchmark(bench, seed=5)
        second = generate_benchmark(bench, seed=5)
        assert first == second

    def test_default_benchmark_wires_n_hyps(self):
        bench = default_benchmark(n_hyps=7, seed=3)
        assert bench.noise.n_hyps == 7
        assert bench.noise.seed == 3
        assert bench.train.n_topics == 2
        pools_a, pools_b = bench.train.topic_pools
        assert not set(pools_a) & set(pools_b)


class TestSpecFile:
    def test_load_with_shared_pools(self, tmp_path):
        payload = {
            "topic_pools": POOLS,
            "train": {"sessions_per_topic": 3, "utterances_per_session": 4},
            "test": {"sessions_per_topic": 1, "utterances_per_session": 2},
            "noise": {"p_sub": 0.1, "n_hyps": 4},
        }
        path = tmp_path / "bench.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        bench = load_benchmark_spec(path)
        assert bench.train.topic_pools == POOLS
        assert bench.test.sessions_per_topic == 1
        assert bench.noise.p_sub == 0.1

    def test_unknown_keys_rejected_at_each_level(self, tmp_path):
        base = {
            "topic_pools": POOLS,
            "train": {"sessions_per_topic": 1, "utterances_per_session": 1},
            "test": {"sessions_per_topic": 1, "utterances_per_session": 1},
        }
        for corruption in (
            {"bogus": 1},
            {"train": dict(base["train"], bogus=1)},
            {"noise": {"bogus": 1}},
        ):
            payload = dict(base, **corruption)
            path = tmp_path / "bench.json"
            path.write_text(json.dumps(payload), encoding="utf-8")
            with pytest.raises(ValueError, match="unknown"):
                load_benchmark_spec(path)

    def test_missing_pools_rejected(self, tmp_path):
        payload = {
            "train": {"sessions_per_topic": 1, "utterances_per_session": 1},
            "test": {"sessions_per_topic": 1, "utterances_per_session": 1},
        }
        path = tmp_path / "bench.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(ValueError, match="topic_pools"):
            load_benchmark_spec(path)
