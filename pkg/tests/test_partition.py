from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ints_to_keys, keys_to_ints
from ovsort.core_sort import BaseSortKind, base_sort
from ovsort.errors import ParameterError
from ovsort.keys import KeyGenSpec, generate, sequence_bounds
from ovsort.partition import (
    BalanceBound,
    PartitionPlan,
    RandomSampleParams,
    RegularSampleParams,
    SplitterSet,
    TaggedSample,
    TaggedSamples,
    check_balance,
    default_oversampling,
    merge_samples,
    random_sample,
    regular_sample,
    select_splitters,
    split_around,
)


def tagged(values, seq, idx, keylen=4) -> TaggedSamples:
    return TaggedSamples(ints_to_keys(values, keylen).data, np.asarray(seq), np.asarray(idx))


# --------------------------------------------------------------------------
# regular sampling


def test_regular_sample_hand_example():
    xk = ints_to_keys([10, 20, 30, 40]).data
    T = regular_sample(xk, 0, RegularSampleParams(p=2, r=1), n=8)
    assert keys_to_ints(T.keys) == [20, 40]
    assert T.idx.tolist() == [1, 3]
    assert T.seq.tolist() == [0, 0]


def test_regular_sample_identical_keys_distinct_tags():
    xk = ints_to_keys([7] * 6).data
    T = regular_sample(xk, 3, RegularSampleParams(p=3, r=2), n=18)
    assert len(T) == 6
    assert len(set(T.idx.tolist())) == 6
    assert set(keys_to_ints(T.keys)) == {7}


def test_regular_sample_segment_positions():
    # n/p = 1000, p = 8, r = 2: segments of ceil(1000/16) = 63
    xk = np.sort(np.random.default_rng(1).integers(0, 10**6, 1000))
    T = regular_sample(ints_to_keys(xk).data, 2, RegularSampleParams(p=8, r=2), n=8000)
    assert len(T) == 16
    assert T.idx[:-1].tolist() == [63 * j - 1 for j in range(1, 16)]
    # the last sample is the sequence maximum
    assert T.idx[-1] == 999
    assert keys_to_ints(T.keys) == [int(xk[i]) for i in T.idx]


def test_regular_sample_virtual_padding_keeps_tags_unique():
    # 5 keys, 4 samples at stride ceil(ceil(20/4)/4) = 2: positions 1,3,5,7;
    # positions past the end repeat the maximum under their own index
    xk = ints_to_keys([1, 2, 3, 4, 5]).data
    T = regular_sample(xk, 0, RegularSampleParams(p=4, r=1), n=20)
    assert keys_to_ints(T.keys) == [2, 4, 5, 5]
    assert T.idx.tolist() == [1, 3, 5, 7]


def test_regular_params_validation():
    with pytest.raises(ParameterError):
        RegularSampleParams(4, 2).validate(31)
    RegularSampleParams(4, 2).validate(32)


# --------------------------------------------------------------------------
# sample merging


def test_merge_samples_single_list_is_identity():
    T0 = tagged([1, 2, 3], [0, 0, 0], [0, 1, 2])
    assert merge_samples([T0]).records() == T0.records()


def test_merge_samples_two_singletons():
    T = merge_samples([tagged([9], [0], [4]), tagged([3], [1], [0])])
    assert T.records() == [TaggedSample((3).to_bytes(4, "big"), 1, 0), TaggedSample((9).to_bytes(4, "big"), 0, 4)]


def test_merge_samples_matches_triple_sort():
    rng = np.random.default_rng(5)
    p, r = 16, 2
    lists, records = [], []
    for k in range(p):
        xk = np.sort(rng.integers(0, 20, 400))
        T = regular_sample(ints_to_keys(xk).data, k, RegularSampleParams(p, r), n=400 * p)
        lists.append(T)
        records += T.records()
    assert merge_samples(lists).records() == sorted(records)


# --------------------------------------------------------------------------
# random sampling


def _sorted_sequences(n, p, seed, keylen=8):
    data = generate(KeyGenSpec(n, keylen, "few-distinct(50)", seed)).copy_data()
    seq = sequence_bounds(n, p)
    for k in range(p):
        base_sort("ref", data[seq[k] : seq[k + 1]])
    return data, seq


def test_random_sample_exhaustive():
    p, s = 4, 5
    n = p * s - 1
    data, seq = _sorted_sequences(n, p, 2)
    T = random_sample(data, seq, RandomSampleParams(p, s), 7)
    assert len(T) == n
    want = sorted(TaggedSample(data[g].tobytes(), k, g - seq[k]) for k in range(p) for g in range(seq[k], seq[k + 1]))
    assert T.records() == want


def test_random_sample_is_deterministic_in_seed():
    data, seq = _sorted_sequences(5000, 8, 3)
    params = RandomSampleParams(8, 16)
    a = random_sample(data, seq, params, 42).records()
    b = random_sample(data, seq, params, 42).records()
    c = random_sample(data, seq, params, 43).records()
    assert a == b and a != c


@pytest.mark.parametrize("base", list(BaseSortKind))
def test_random_sample_sorted_by_any_base(base):
    data, seq = _sorted_sequences(5000, 8, 4)
    T = random_sample(data, seq, RandomSampleParams(8, 16), 1, base)
    recs = T.records()
    assert recs == sorted(recs)
    assert len(set(recs)) == len(recs) == 127


def test_random_sample_inclusion_frequency():
    n, p, s, trials = 10_000, 8, 64, 1000
    data, seq = _sorted_sequences(n, p, 6, keylen=4)
    hits = np.zeros(n, dtype=np.int64)
    rng = np.random.default_rng(99)
    for _ in range(trials):
        T = random_sample(data, seq, RandomSampleParams(p, s), rng)
        hits[seq[T.seq] + T.idx] += 1
    q = (s * p - 1) / n
    mean, sigma = trials * q, np.sqrt(trials * q * (1 - q))
    # per-key 3 sigma; expect about 0.27% of keys outside by chance
    outside = np.abs(hits - mean) > 3 * sigma
    assert outside.mean() < 0.01
    # the total is exact
    assert hits.sum() == trials * (s * p - 1)


def test_random_params_validation():
    with pytest.raises(ParameterError):
        RandomSampleParams(4, 10).validate(80)
    RandomSampleParams(4, 10).validate(81)


def test_default_oversampling():
    assert default_oversampling(2**10) == 100
    assert default_oversampling(100_000) == 276
    assert default_oversampling(2**16, a=0.5) == 64


# --------------------------------------------------------------------------
# splitters


def test_select_splitters_rank_s():
    T = tagged([1, 2, 3, 4, 5, 6], [0] * 6, list(range(6)))
    S = select_splitters(T, p=2, s=3)
    assert len(S) == 1 and S[0].key == (3).to_bytes(4, "big")


def test_select_splitters_regular_ranks():
    values = list(range(100, 116))
    T = tagged(values, [0] * 16, list(range(16)))
    S = select_splitters(T, p=4, s=4)
    assert [int.from_bytes(x.key, "big") for x in S.samples] == [103, 107, 111]


@given(st.lists(st.integers(0, 5), min_size=12, max_size=60), st.integers(2, 4))
def test_splitters_nondecreasing(values, p):
    recs = sorted(TaggedSample(v.to_bytes(2, "big"), i % 3, i) for i, v in enumerate(values))
    T = TaggedSamples.from_records(recs, 2)
    s = len(recs) // p
    S = select_splitters(T, p, s)
    out = S.samples.records()
    assert out == sorted(out)


# --------------------------------------------------------------------------
# splitting


def _empty_splitters(keylen=4) -> SplitterSet:
    return SplitterSet(TaggedSamples(np.empty((0, keylen), dtype=np.uint8), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)))


def test_split_without_splitters():
    xk = ints_to_keys([1, 2, 3]).data
    assert split_around(xk, 0, _empty_splitters()).tolist() == [0, 3]


@pytest.mark.parametrize("strategy", ["binary-search", "merge"])
def test_split_equal_keys_follows_sequence_tag(strategy):
    xk = ints_to_keys([5] * 10).data
    later = SplitterSet(tagged([5], [3], [0]))
    earlier = SplitterSet(tagged([5], [1], [9]))
    # sequence 2 against a splitter from sequence 3: everything goes left
    assert split_around(xk, 2, later, strategy).tolist() == [0, 10, 10]
    # against a splitter from sequence 1: everything goes right
    assert split_around(xk, 2, earlier, strategy).tolist() == [0, 0, 10]
    # own sequence: the index decides, the splitter itself goes left
    own = SplitterSet(tagged([5], [2], [4]))
    assert split_around(xk, 2, own, strategy).tolist() == [0, 5, 10]


def brute_row(xk: np.ndarray, k: int, S: SplitterSet) -> list[int]:
    recs = S.samples.records()
    row = [0]
    for spl in recs:
        row.append(sum(1 for i in range(len(xk)) if TaggedSample(xk[i].tobytes(), k, i) <= spl))
    row.append(len(xk))
    return row


@given(
    st.lists(st.integers(0, 6), min_size=0, max_size=40),
    st.lists(st.tuples(st.integers(0, 6), st.integers(0, 4), st.integers(0, 40)), min_size=0, max_size=8, unique=True),
    st.integers(0, 4),
    st.sampled_from(["binary-search", "merge"]),
)
def test_split_matches_linear_scan(values, spl, k, strategy):
    xk = ints_to_keys(sorted(values), 1).data
    recs = sorted(TaggedSample(v.to_bytes(1, "big"), s, i) for v, s, i in spl)
    S = SplitterSet(TaggedSamples.from_records(recs, 1) if recs else _empty_splitters(1).samples)
    assert split_around(xk, k, S, strategy).tolist() == brute_row(xk, k, S)


def test_split_counts_comparisons():
    xk = ints_to_keys(range(1024)).data
    S = SplitterSet(tagged([100, 500, 900], [1, 1, 1], [0, 0, 0]))
    from ovsort.core_sort import new_counter

    cb, cm = new_counter(), new_counter()
    assert split_around(xk, 0, S, "binary-search", cb).tolist() == split_around(xk, 0, S, "merge", cm).tolist()
    assert cb[0] <= 3 * 11
    assert cm[0] <= 1024 + 3


# --------------------------------------------------------------------------
# balance


def test_balance_bound_hand_example():
    b = BalanceBound(n=1000, p=4, r=1)
    assert b.n_max == Fraction(504)
    assert b.limit == 504
    assert b.applies


def test_balance_bound_exact_fraction():
    b = BalanceBound(n=1001, p=3, r=2)
    assert b.n_max == Fraction(3, 2) * Fraction(1001, 3) + 6
    assert b.limit == 507


def test_single_bucket_plan():
    plan = PartitionPlan(np.array([[0, 1000]]))
    rep = check_balance(plan, BalanceBound(1000, 1, 1))
    assert rep.passed and rep.sizes.tolist() == [1000]


def test_plan_offsets():
    plan = PartitionPlan(np.array([[0, 2, 5], [0, 1, 4]]))
    assert plan.bucket_sizes().tolist() == [3, 6]
    assert plan.bucket_offsets().tolist() == [0, 3, 9]
    assert plan.n == 9


def test_random_instances_respect_bound():
    from ovsort.pipeline import SortConfig, run_pipeline

    rng = np.random.default_rng(8)
    runs = 0
    for i in range(200):
        p = int(rng.choice([16, 64]))
        r = int(rng.integers(1, 6))
        cfg = SortConfig.deterministic(p, r)
        n = 100_000
        try:
            cfg.validate(n)
        except ParameterError:
            continue
        X = generate(KeyGenSpec(n, 8, "uniform-bytes", i))
        _, report = run_pipeline(X, cfg)
        rep = check_balance(report.plan, BalanceBound(n, p, r))
        assert rep.passed, (p, r, rep.max_size, rep.limit)
        runs += 1
    assert runs > 100
