import random
import statistics
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cotlearn.seqcore import BINARY, NotRealizableError, cot, e2e
from cotlearn.learning import (
    BitStringPrompts,
    CoTDataset,
    E2EDataset,
    FiniteUniformPrompts,
    cons_cot,
    cons_e2e,
    e2e_predictor,
    load_cot_dataset,
    load_e2e_dataset,
    pac_trial,
    prefix_expand,
    save_cot_dataset,
    save_e2e_dataset,
    trial_seed,
    zero_one_error,
)
from cotlearn.lbfamilies import make_e1_family
from cotlearn.linthresh import cons_lp, make_threshold
from cotlearn.turing import TMFamily, generator_for, pre

seq = BINARY.seq


class TestDatasets:
    def test_cot_record_length_validated(self):
        with pytest.raises(ValueError):
            CoTDataset((seq([1, 0]),), 2)  # needs length >= T + 1
        data = CoTDataset((seq([1, 0, 1]),), 2)
        assert data.prompt(0).tokens == (1,)

    def test_e2e_labels_validated(self):
        with pytest.raises(ValueError):
            E2EDataset(((seq([1]), 5),), 1)

    def test_t_must_be_positive(self):
        with pytest.raises(ValueError):
            CoTDataset((), 0)


class TestPrefixExpand:
    def test_slice_arithmetic(self):
        z = seq([1, 0, 1])  # stands for [a, b, c]
        out = prefix_expand(CoTDataset((z,), 2))
        assert [(u.tokens, v) for u, v in out] == [((1, 0), 1), ((1,), 0)]

    def test_cardinality_law(self):
        f = make_threshold([1, -1], 0)
        seqs = tuple(cot(f, seq([1, 0, 1]), 4) for _ in range(5))
        out = prefix_expand(CoTDataset(seqs, 4))
        assert len(out) == 5 * 4

    def test_pairs_satisfy_the_generating_rule(self):
        f = make_threshold([2, -1], Fraction(-1, 2))
        data = CoTDataset(tuple(cot(f, seq(x), 3) for x in ([1], [0, 1], [1, 1, 0])), 3)
        for u, v in prefix_expand(data):
            assert f.next_token(u) == v

    @settings(max_examples=25, deadline=None)
    @given(st.data())
    def test_equivalence_with_full_records(self, data):
        # prefix consistency and whole-record consistency pin each other down
        fam = make_e1_family(2, 3)
        rng = random.Random(data.draw(st.integers(0, 10**6)))
        f_star = fam.random_member(rng)
        pts = fam.canonical_points()
        prompts = [pts[rng.randrange(len(pts))] for _ in range(4)]
        records = CoTDataset(tuple(cot(f_star, x, 3) for x in prompts), 3)
        pairs = prefix_expand(records).pairs
        for f in (fam.random_member(rng) for _ in range(20)):
            agrees_pairs = all(f.next_token(u) == v for u, v in pairs)
            agrees_records = all(
                cot(f, records.prompt(i), 3).tokens == z.tokens
                for i, z in enumerate(records.seqs)
            )
            assert agrees_pairs == agrees_records


class TestConsCot:
    def test_round_trip_tm_family(self):
        rng = random.Random(0)
        fam = TMFamily(2)
        spec = fam.random_spec(rng, 8)
        gen = generator_for(spec)
        prompts = [pre([rng.randint(0, 1) for _ in range(3)], 2) for _ in range(25)]
        data = CoTDataset(tuple(cot(gen, x, 8) for x in prompts), 8)
        learned = cons_cot(data, fam.cons_oracle())
        for i, z in enumerate(data.seqs):
            assert cot(learned, data.prompt(i), 8).tokens == z.tokens

    def test_single_threshold_record(self):
        f_star = make_threshold([1, 1], -1)
        data = CoTDataset((cot(f_star, seq([0, 1]), 3),), 3)
        learned = cons_cot(data, lambda pairs: cons_lp(pairs, 2))
        assert cot(learned, seq([0, 1]), 3).tokens == data.seqs[0].tokens

    def test_empty_dataset_returns_first_member(self):
        fam = make_e1_family(2, 2)
        learned = cons_cot(CoTDataset((), 2), fam.cons_oracle())
        assert learned == fam.default_member()

    def test_unrealizable_surfaces(self):
        z = seq([1, 0, 1, 1])
        bad = CoTDataset((z,), 3)
        with pytest.raises(NotRealizableError):
            cons_cot(bad, lambda pairs: cons_lp(pairs, 0))  # window-0 thresholds are constants

    def test_cot_output_is_e2e_consistent(self):
        fam = make_e1_family(2, 2)
        rng = random.Random(1)
        f_star = fam.random_member(rng)
        pts = fam.canonical_points()
        prompts = [pts[rng.randrange(len(pts))] for _ in range(6)]
        data = CoTDataset(tuple(cot(f_star, x, 2) for x in prompts), 2)
        learned = cons_cot(data, fam.cons_oracle())
        for x in prompts:
            assert e2e(learned, x, 2) == e2e(f_star, x, 2)


class TestConsE2E:
    def test_enumerated_search_on_e1(self):
        fam = make_e1_family(2, 2)
        rng = random.Random(2)
        f_star = fam.random_member(rng)
        pts = fam.canonical_points()
        pairs = tuple((x, e2e(f_star, x, 2)) for x in pts)
        learned = cons_e2e(E2EDataset(pairs, 2), fam)
        assert all(e2e(learned, x, 2) == y for x, y in pairs)

    def test_empty_returns_first_member(self):
        fam = make_e1_family(1, 2)
        assert cons_e2e(E2EDataset((), 2), fam) == fam.default_member()

    def test_contradiction_not_realizable(self):
        fam = make_e1_family(1, 2)
        x = fam.canonical_points()[0]
        with pytest.raises(NotRealizableError):
            cons_e2e(E2EDataset(((x, 0), (x, 1)), 2), fam)

    def test_fast_path_matches_enumeration(self):
        # the family's shortcut must return the same member as the generic scan
        fam = make_e1_family(2, 3)
        rng = random.Random(3)
        pts = fam.canonical_points()
        for _ in range(30):
            f_star = fam.random_member(rng)
            prompts = [pts[rng.randrange(len(pts))] for _ in range(rng.randint(0, 5))]
            pairs = tuple((x, e2e(f_star, x, 3)) for x in prompts)
            fast = fam.find_e2e_consistent(pairs, 3)
            slow = super(type(fam), fam).find_e2e_consistent(pairs, 3)
            assert fast == slow


class TestZeroOneError:
    def test_ground_truth_is_zero(self):
        f = make_threshold([1], 0)
        pairs = tuple((seq([b]), f.next_token(seq([b]))) for b in (0, 1))
        assert zero_one_error(e2e_predictor(f, 1), E2EDataset(pairs, 1)) == 0

    def test_wrong_constant_is_one(self):
        pairs = tuple((seq([b]), 1) for b in (0, 1))
        h = lambda x: 0
        assert zero_one_error(h, E2EDataset(pairs, 1)) == 1

    def test_half_right(self):
        pairs = tuple((seq([i % 2, (i >> 1) % 2, i % 2]), i % 2) for i in range(10))
        h = lambda x: 1
        assert zero_one_error(h, E2EDataset(pairs, 1)) == Fraction(1, 2)

    def test_empty_eval_rejected(self):
        with pytest.raises(ValueError):
            zero_one_error(lambda x: 0, E2EDataset((), 1))


class TestPacTrial:
    def test_large_sample_reaches_zero(self):
        fam = make_e1_family(2, 2)
        dist = FiniteUniformPrompts(fam.canonical_points())
        rng = random.Random(4)
        f_star = fam.random_member(rng)
        r = pac_trial(fam, f_star, dist, 200, 2, "cot", eval_n=50, seed=11)
        assert r.error == 0 and r.exact_eval

    def test_zero_samples_uses_default_member(self):
        fam = make_e1_family(2, 2)
        dist = FiniteUniformPrompts(fam.canonical_points())
        f_star = fam.member(fam.size() - 1)
        r = pac_trial(fam, f_star, dist, 0, 2, "e2e", eval_n=50, seed=12)
        assert 0 <= r.error <= 1
        assert r.learned == fam.default_member()

    def test_reproducible(self):
        fam = make_e1_family(2, 2)
        dist = FiniteUniformPrompts(fam.canonical_points())
        f_star = fam.member(9)
        a = pac_trial(fam, f_star, dist, 5, 2, "cot", eval_n=50, seed=13)
        b = pac_trial(fam, f_star, dist, 5, 2, "cot", eval_n=50, seed=13)
        assert a.error == b.error and a.learned == b.learned

    def test_monte_carlo_path(self):
        # a support too large for exact evaluation falls back to sampling
        dist = BitStringPrompts(1, 13)
        assert dist.support() is None
        f_star = make_threshold([1, -1], 0)
        from cotlearn.linthresh import ThresholdFamily

        r = pac_trial(ThresholdFamily(2), f_star, dist, 8, 3, "cot", eval_n=64, seed=14)
        assert not r.exact_eval
        assert r.error.denominator <= 64

    def test_error_monotone_in_m_on_average(self):
        fam = make_e1_family(2, 2)
        dist = FiniteUniformPrompts(fam.canonical_points())
        means = []
        for m in (0, 2, 4, 8, 16):
            errs = []
            for s in range(40):
                rng = random.Random(s)
                f_star = fam.random_member(rng)
                errs.append(pac_trial(fam, f_star, dist, m, 2, "cot", 50, trial_seed(99, s)).error)
            means.append(statistics.mean(errs))
        assert means[-1] < means[0]
        for a, b in zip(means, means[1:]):
            assert b <= a + Fraction(1, 20)  # non-increasing up to sampling slack


def test_cot_needs_far_fewer_samples_than_e2e():
    # D=2, T=4, uniform over the 8 canonical points, medians over 50 seeds
    fam = make_e1_family(2, 4)
    dist = FiniteUniformPrompts(fam.canonical_points())

    def samples_to_zero(mode, seed):
        rng = random.Random(seed)
        f_star = fam.random_member(rng)
        for m in range(400):
            r = pac_trial(fam, f_star, dist, m, 4, mode, eval_n=100, seed=trial_seed(seed, m))
            if r.error == 0:
                return m
        return 400

    cot_median = statistics.median(samples_to_zero("cot", s) for s in range(50))
    e2e_median = statistics.median(samples_to_zero("e2e", s) for s in range(50))
    assert cot_median < e2e_median


class TestTrialSeed:
    def test_stable_and_distinct(self):
        assert trial_seed(1, 2) == trial_seed(1, 2)
        seeds = {trial_seed(7, i) for i in range(1000)}
        assert len(seeds) == 1000
        assert all(0 <= s < 2**64 for s in seeds)


class TestFiles:
    def test_cot_round_trip(self, tmp_path):
        f = make_threshold([1, -1], 0)
        data = CoTDataset(tuple(cot(f, seq(x), 2) for x in ([1], [0, 1])), 2)
        p = tmp_path / "cots.txt"
        save_cot_dataset(p, data)
        assert load_cot_dataset(p, BINARY, 2) == data

    def test_e2e_round_trip(self, tmp_path):
        pairs = ((seq([1, 0]), 1), (seq([0]), 0))
        data = E2EDataset(pairs, 3)
        p = tmp_path / "pairs.tsv"
        save_e2e_dataset(p, data)
        assert load_e2e_dataset(p, BINARY, 3) == data

    def test_bad_e2e_line(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("0,1 no-tab-here\n")
        with pytest.raises(ValueError):
            load_e2e_dataset(p, BINARY, 1)
