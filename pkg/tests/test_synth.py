import json

import pytest

from sentinel.errors import InfeasibleProfile
from sentinel.ingest import load_corpus, record_to_obj
from sentinel.rules import compile_ruleset, run_detection
from sentinel.sessionize import build_sessions
from sentinel.synth import (
    GeneratorProfile,
    SplitMix64,
    generate_corpus,
    profile_for,
    truth_from_obj,
    truth_to_obj,
    write_corpus,
)


class TestSplitMix64:
    def test_same_seed_same_stream(self):
        x, y = SplitMix64(7), SplitMix64(7)
        assert [x.next_u64() for _ in range(10)] == [y.next_u64() for _ in range(10)]

    def test_different_seeds_diverge(self):
        assert SplitMix64(1).next_u64() != SplitMix64(2).next_u64()

    def test_below_in_range(self):
        rng = SplitMix64(3)
        assert all(0 <= rng.below(7) < 7 for _ in range(200))

    def test_shuffle_is_permutation_and_deterministic(self):
        items = list(range(20))
        a, b = list(items), list(items)
        SplitMix64(5).shuffle(a)
        SplitMix64(5).shuffle(b)
        assert a == b
        assert sorted(a) == items


class TestGenerateCorpus:
    def test_same_seed_identical_output(self):
        first = generate_corpus(profile_for(200, seed=4))
        second = generate_corpus(profile_for(200, seed=4))
        assert [record_to_obj(r) for r in first[0]] == [record_to_obj(r) for r in second[0]]
        assert truth_to_obj(first[1]) == truth_to_obj(second[1])

    def test_different_seeds_differ(self):
        a, _, _ = generate_corpus(profile_for(100, seed=1))
        b, _, _ = generate_corpus(profile_for(100, seed=2))
        assert [record_to_obj(r) for r in a] != [record_to_obj(r) for r in b]

    @pytest.mark.parametrize("n,fraction", [(200, 0.06), (101, 0.1), (50, 0.0)])
    def test_suspicious_count_rounds_to_nearest(self, n, fraction):
        _, truth, _ = generate_corpus(profile_for(n, suspicious_fraction=fraction, seed=3))
        assert len(truth.plans) == n
        assert len(truth.suspicious_session_ids()) == int(n * fraction + 0.5)

    def test_sessions_reconstruct_exactly(self):
        records, truth, _ = generate_corpus(profile_for(250, seed=6))
        sessions, report = build_sessions(records)
        assert report.dropped == 0
        assert {s.session_id for s in sessions} == {
            p.session_id for p in truth.plans.values()
        }
        lengths = {p.session_id: p.length for p in truth.plans.values()}
        for s in sessions:
            assert len(s.records) == lengths[s.session_id]

    def test_benign_sessions_never_flagged_without_overlap(self):
        records, truth, config = generate_corpus(profile_for(250, seed=8, overlap=0.0))
        sessions, _ = build_sessions(records)
        flagged = run_detection(compile_ruleset(config), sessions).flagged_ids()
        assert flagged == truth.suspicious_session_ids()

    def test_overlap_keeps_suspicious_recall(self):
        records, truth, config = generate_corpus(profile_for(250, seed=8, overlap=1.0))
        sessions, _ = build_sessions(records)
        flagged = run_detection(compile_ruleset(config), sessions).flagged_ids()
        assert truth.suspicious_session_ids() <= flagged

    def test_lengths_within_profile_range(self):
        profile = profile_for(150, seed=2, session_length_range=(3, 6))
        records, truth, config = generate_corpus(profile)
        max_records = config.max_records
        for plan in truth.plans.values():
            if plan.label == 0:
                assert 3 <= plan.length <= 6
            else:
                # the bulk-scraper archetype deliberately exceeds the volume cap
                assert 3 <= plan.length <= max(6, max_records + 10)


class TestInfeasibleProfiles:
    def test_too_many_sessions_for_slots(self):
        with pytest.raises(InfeasibleProfile):
            generate_corpus(GeneratorProfile(n_sessions=50_000))

    def test_bad_length_range(self):
        with pytest.raises(InfeasibleProfile):
            generate_corpus(GeneratorProfile(n_sessions=10, session_length_range=(2, 5)))

    def test_bad_fraction(self):
        with pytest.raises(InfeasibleProfile):
            generate_corpus(GeneratorProfile(n_sessions=10, suspicious_fraction=1.5))

    def test_profile_for_scales_pools(self):
        small = profile_for(100)
        large = profile_for(50_000)
        assert len(large.business_locations) > len(small.business_locations)
        # scaled pools keep the generator feasible
        generate_corpus(profile_for(5_000, seed=1))


class TestWriteCorpus:
    def test_files_and_round_trip(self, tmp_path):
        out = tmp_path / "corpus"
        summary = write_corpus(profile_for(120, seed=13), out)
        assert summary["sessions"] == 120
        assert summary["suspicious"] == int(120 * 0.06 + 0.5)

        with open(out / "records.ndjson", encoding="utf-8") as f:
            records, report = load_corpus(f, "ndjson", source_name="records.ndjson")
        assert len(records) == summary["records"]
        assert report.rejected == 0

        with open(out / "truth.json", encoding="utf-8") as f:
            truth = truth_from_obj(json.load(f))
        direct = generate_corpus(profile_for(120, seed=13))[1]
        assert truth_to_obj(truth) == truth_to_obj(direct)

        assert (out / "rules.json").exists()
