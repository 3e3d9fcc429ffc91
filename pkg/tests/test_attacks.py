import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqpstab.attacks import (
    AttackConfig,
    AttackReport,
    RoundInfo,
    UnsupportedCandidates,
    _random_nonzero,
    acceptance_probability,
    candidate_correlation,
    double_meyer,
    expected_iterations,
    extract_secret_linearity,
    good_d_probability_check,
    hammings_razor,
    kernel_dimension,
    km_extract,
    lazy_linearity,
    log2_expected_iterations,
    multi_secret_sample,
    naive_sample,
    property_check,
    radical_attack,
    razor_threshold_sweep,
    sample_by_rows,
    spoof,
    validate_candidates,
)
from iqpstab.cli import recovered
from iqpstab.f2linalg import BitMatrix, BitVector, gram, in_row_space, kernel_basis, rank, vstack
from iqpstab.protocol import estimate_correlation
from iqpstab.scheme import hardened_construct, qrc_construct, stabilizer_construct

seeds = st.integers(0, 2**32 - 1)


# ---- config and report -----------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        AttackConfig(check_budget=0)
    with pytest.raises(ValueError):
        AttackConfig(stop="never")


def test_report_serialization():
    rep = AttackReport("linearity", rounds=[RoundInfo(0, 3, 7, True)], candidates=[BitVector.from_str("101")])
    assert rep.serialize() == "round=0 dim=3 checks=7 found=1\nSECRET 101\n"
    assert AttackReport("x").serialize() == "FAIL\n"


# ---- property check --------------------------------------------------------


def test_property_check_accepts_true_secret(rng):
    for g in (1, 2, 3):
        inst = stabilizer_construct(30, 50, g, 0, rng)
        assert property_check(inst.H, inst.s, g)
        assert property_check(inst.H, inst.s)
        if g > 1:
            assert not property_check(inst.H, inst.s, g - 1)


# ---- Linearity attack ------------------------------------------------------


def test_linearity_breaks_original_qrc_shape():
    hits = 0
    for seed in range(100):
        inst = qrc_construct(7, 5, 14, 0, np.random.default_rng(seed))
        cfg = AttackConfig(check_budget=1 << 10, g_threshold=1, seed=seed, stop="budget")
        hits += recovered(inst, extract_secret_linearity(inst.H, cfg).candidates)
    assert hits >= 90


@given(seeds, st.integers(1, 200), st.sampled_from(["first", "round", "budget"]))
@settings(max_examples=25)
def test_linearity_budget_and_consistency(seed, budget, stop):
    inst = stabilizer_construct(24, 40, 2, 0, np.random.default_rng(seed))
    cfg = AttackConfig(check_budget=budget, g_threshold=2, seed=seed, stop=stop, d_resample_budget=16)
    rep = extract_secret_linearity(inst.H, cfg)
    assert rep.checks_used <= budget
    assert sum(r.checks for r in rep.rounds) == rep.checks_used
    for c in rep.candidates:
        assert c.any() and property_check(inst.H, c, 2)


def test_budget_one_uses_one_check(rng):
    inst = stabilizer_construct(24, 40, 2, 0, rng)
    rep = extract_secret_linearity(inst.H, AttackConfig(check_budget=1, seed=1))
    assert rep.checks_used == 1


def test_bad_d_keeps_secret_out_of_kernel(rng):
    # G_s d != 0 implies G_d s != 0, so s is not in ker(G_d)
    inst = stabilizer_construct(24, 40, 2, 0, rng)
    g_s = gram(inst.H.select_rows((inst.H @ inst.s).to_array().astype(bool)))
    for _ in range(30):
        d = _random_nonzero(24, rng)
        if not (g_s @ d).any():
            continue
        g_d = gram(inst.H.select_rows((inst.H @ d).to_array().astype(bool)))
        assert (g_d @ inst.s).any()
        assert not in_row_space(kernel_basis(g_d).T, inst.s)


def test_double_meyer_k1_matches_linearity(rng):
    inst = stabilizer_construct(24, 40, 1, 0, rng)
    cfg = AttackConfig(check_budget=500, g_threshold=1, seed=5)
    a, b = double_meyer(inst.H, 1, cfg), extract_secret_linearity(inst.H, cfg)
    assert a.candidates == b.candidates and a.checks_used == b.checks_used
    assert a.kernel_dims_seen == b.kernel_dims_seen
    with pytest.raises(ValueError):
        double_meyer(inst.H, 0, cfg)


def test_double_meyer_intersection_shrinks():
    inst = stabilizer_construct(60, 80, 2, 0, np.random.default_rng(3))
    means = []
    for k in range(1, 6):
        dims = []
        for seed in range(10):
            cfg = AttackConfig(check_budget=1, d_resample_budget=1, seed=seed)
            dims += double_meyer(inst.H, k, cfg).kernel_dims_seen
        means.append(np.mean(dims))
    assert all(a >= b for a, b in zip(means, means[1:])) and means[0] > means[-1]


def test_secret_survives_k_probes_with_prob_2_pow_minus_gk(rng):
    inst = stabilizer_construct(20, 36, 1, 0, rng)
    g_s = gram(inst.H.select_rows((inst.H @ inst.s).to_array().astype(bool)))
    trials, k = 1200, 2
    hits = sum(all(not (g_s @ BitVector.random(20, rng)).any() for _ in range(k)) for _ in range(trials))
    p = 2.0 ** (-1 * k)
    assert abs(hits / trials - p) <= 3 * math.sqrt(p * (1 - p) / trials)


# ---- Lazy Linearity --------------------------------------------------------


def test_lazy_expected_iterations_large_instance():
    assert log2_expected_iterations(10, 150, 1200, 8) > 60


def test_lazy_with_large_threshold_is_plain_linearity(rng):
    inst = stabilizer_construct(24, 40, 1, 0, rng)
    A = 10 + 5 * math.sqrt(40) / 2 + 24
    assert acceptance_probability(10, 40, A) > 0.999
    cfg = AttackConfig(check_budget=300, g_threshold=1, seed=2)
    lazy = lazy_linearity(inst.H, int(A), cfg)
    plain = extract_secret_linearity(inst.H, cfg)
    assert lazy.extra["accepted_d"] == lazy.extra["sampled_d"]
    assert lazy.candidates == plain.candidates


def test_lazy_counts_are_consistent(rng):
    inst = stabilizer_construct(40, 60, 2, 0, rng)
    rep = lazy_linearity(inst.H, 12, AttackConfig(check_budget=1 << 12, g_threshold=2, seed=4, d_resample_budget=40))
    assert rep.extra["accepted_d"] == sum(d <= 12 for d in rep.kernel_dims_seen)
    assert all(r.checks == 0 for r in rep.rounds if r.dim > 12)


def test_lazy_gaussian_model_at_desk_scale():
    dims = []
    for seed in range(400):
        r = np.random.default_rng(seed)
        inst = stabilizer_construct(40, 60, 2, 0, r)
        dims += [kernel_dimension(inst.H, _random_nonzero(40, r)) for _ in range(5)]
    dims = np.array(dims)
    # spread matches sqrt(m)/2
    assert abs(dims.std() - math.sqrt(60) / 2) <= 0.15 * math.sqrt(60) / 2
    # the CDF model at the empirical mean predicts the acceptance rate
    p = acceptance_probability(dims.mean(), 60, 8)
    assert abs((dims <= 8).mean() - p) <= 3 * math.sqrt(p * (1 - p) / dims.size)
    # the lambda1 = n - m/2 model is attacker-favourable
    assert (dims <= 8).mean() <= acceptance_probability(40 - 30, 60, 8)


def test_expected_iterations_formula():
    assert math.isclose(expected_iterations(3, 10, 64, 10), 2**3 / 0.5, rel_tol=1e-12)


# ---- KM --------------------------------------------------------------------


def test_km_breaks_original_qrc_shape():
    hits = 0
    for seed in range(40):
        inst = qrc_construct(7, 5, 14, 0, np.random.default_rng(seed))
        rep = km_extract(inst.H, 4, AttackConfig(check_budget=1 << 10, seed=seed))
        hits += recovered(inst, rep.candidates)
    assert hits >= 30


def test_km_l0_exhausts_budget_on_large_n(rng):
    inst = stabilizer_construct(40, 60, 2, 0, rng)
    rep = km_extract(inst.H, 0, AttackConfig(check_budget=64, seed=1, d_resample_budget=1))
    assert rep.kernel_dims_seen == [40] and rep.checks_used == 64


# ---- structural attacks ----------------------------------------------------


def test_radical_recovers_unconstrained(rng):
    for _ in range(5):
        inst = stabilizer_construct(60, 100, 4, 0, rng, m1=60, d=20)
        assert recovered(inst, radical_attack(inst.H).candidates)


def test_radical_fails_with_countermeasure(rng):
    for _ in range(5):
        inst = stabilizer_construct(60, 100, 4, 0, rng, m1=40, d=13, enforce_radical=True)
        assert not recovered(inst, radical_attack(inst.H).candidates)


def test_radical_trivial_kernel():
    rep = radical_attack(BitMatrix.identity(6))
    assert not rep.candidates and rep.extra["support"] == 0


def test_razor_without_deletions_fails(rng):
    inst = stabilizer_construct(40, 70, 2, 0, rng)
    rep = hammings_razor(inst.H, p=0.001, rounds=4, rng=1, g_threshold=2)
    assert rep.kernel_dims_seen == [0, 0, 0, 0]
    assert not recovered(inst, rep.candidates)


def test_razor_rejects_bad_p(rng):
    with pytest.raises(ValueError):
        hammings_razor(BitMatrix.identity(3), p=1.5, rng=rng)


def test_razor_threshold_sparsity_shifts_first_system():
    dense = stabilizer_construct(60, 100, 4, 0, np.random.default_rng(0), m1=40, d=13, enforce_radical=True, keep_trace=True)
    hard = hardened_construct(60, 100, 4, 40, 13, 8, 3, 1, np.random.default_rng(0), keep_trace=True)
    sweeps = {}
    for name, inst in (("dense", dense), ("hard", hard)):
        sweeps[name] = razor_threshold_sweep(inst.trace.H0, inst.meta.g + inst.meta.d, rounds=16, rng=1)
    # the second system gains solutions well before p = 0.5 in both
    assert all(s[-1].frac_second == 1.0 for s in sweeps.values())
    # sparse (A, B) and concatenated D make the first system degenerate earlier
    assert sweeps["hard"][-1].frac_first > sweeps["dense"][-1].frac_first


# ---- sampling --------------------------------------------------------------


def test_naive_sample_corr_one(rng):
    sp = BitVector.from_str("0110")
    batch = naive_sample(sp, 1.0, 200, rng)
    assert not batch.parities(sp).any()


def test_naive_sample_wrong_secret_has_zero_correlation():
    inst = qrc_construct(7, 5, 14, 0, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    wrong = inst.s ^ BitVector.unit(5, 2)
    batch = naive_sample(wrong, inst.correlation().value, 4000, rng)
    assert abs(estimate_correlation(batch, inst.s)) <= 3 / math.sqrt(4000)


def test_sample_by_rows_in_row_space(rng):
    inst = stabilizer_construct(16, 30, 2, 0, rng)
    batch = sample_by_rows(inst.H, inst.s, inst.correlation().value, 100, rng)
    basis = inst.H
    for i in range(0, 100, 10):
        assert in_row_space(basis, batch.samples.row(i))


def test_sample_by_rows_corr_minus_one(rng):
    inst = stabilizer_construct(16, 30, 2, 0, rng)
    batch = sample_by_rows(inst.H, inst.s, -1.0, 200, rng)
    assert batch.parities(inst.s).all()


def test_row_sampling_beats_naive_on_equivalent_secret():
    # rank-deficient H: s' = s + k with H k = 0 is an equivalent secret
    rng = np.random.default_rng(5)
    inst = stabilizer_construct(12, 24, 1, 0, rng)
    extra = BitMatrix.zeros(inst.H.rows, 1)
    h = BitMatrix.from_dense(np.hstack([inst.H.to_dense(), extra.to_dense()]))
    s = inst.s.concat(BitVector(1))
    k = BitVector.unit(13, 12)
    s_prime = s ^ k
    corr = inst.correlation().value
    naive = naive_sample(s_prime, corr, 4000, rng)
    rows = sample_by_rows(h, s_prime, corr, 4000, rng)
    tol = 3 / math.sqrt(4000)
    assert abs(estimate_correlation(naive, s) - corr) > tol
    assert abs(estimate_correlation(rows, s) - corr) <= tol


def test_multi_secret_two_biases(rng):
    a, b = BitVector.from_str("110010"), BitVector.from_str("011001")
    corrs = [2 * 0.9 - 1, 2 * 0.6 - 1]
    batch = multi_secret_sample([a, b], corrs, 10_000, rng)
    for s, c in zip((a, b), corrs):
        assert abs(estimate_correlation(batch, s) - c) <= 3 / math.sqrt(10_000)


def test_multi_secret_single_candidate(rng):
    a = BitVector.from_str("1101")
    batch = multi_secret_sample([a], [0.5], 8000, rng)
    assert abs(estimate_correlation(batch, a) - 0.5) <= 3 / math.sqrt(8000)


def test_multi_secret_dependent_candidates(rng):
    a = BitVector.from_str("1101")
    with pytest.raises(UnsupportedCandidates):
        multi_secret_sample([a, a], [0.5, 0.5], 10, rng)
    with pytest.raises(ValueError):
        multi_secret_sample([a], [0.5, 0.1], 10, rng)


def test_spoof_and_validate(rng):
    inst = stabilizer_construct(16, 30, 2, 0, rng)
    assert validate_candidates(inst.H, inst.s, inst.correlation(), [inst.s], rng)
    assert spoof(inst.H, [], 10, rng) is None
    assert candidate_correlation(inst.H, inst.s) == inst.correlation()


# ---- good-d ----------------------------------------------------------------


def test_good_d_qrc_is_one_half():
    inst = qrc_construct(7, 5, 14, 0, np.random.default_rng(2))
    st_ = good_d_probability_check(inst.H, inst.s, 2000, np.random.default_rng(3))
    assert st_.identity_holds and abs(st_.frequency - 0.5) <= 3 * math.sqrt(0.25 / 2000)


def test_good_d_g3_is_one_eighth(rng):
    inst = stabilizer_construct(30, 50, 3, 0, rng)
    st_ = good_d_probability_check(inst.H, inst.s, 2000, rng)
    p = 1 / 8
    assert abs(st_.frequency - p) <= 3 * math.sqrt(p * (1 - p) / 2000)


@given(st.integers(1, 30), st.integers(1, 20), seeds)
def test_gram_identity_on_random_matrices(rows, cols, seed):
    # G_s d = G_d s for arbitrary H, s, d
    r = np.random.default_rng(seed)
    h = BitMatrix.random(rows, cols, r)
    s, d = BitVector.random(cols, r), BitVector.random(cols, r)
    g_of = lambda v: gram(h.select_rows((h @ v).to_array().astype(bool)))
    assert g_of(s) @ d == g_of(d) @ s


def test_radical_rejects_unchecked_solutions():
    # seed 20 yields a nonzero solution of H s = 1_S that is not a secret
    inst = hardened_construct(60, 100, 4, 40, 13, 8, 3, 1, seed=20)
    rep = radical_attack(inst.H, 4)
    assert rep.extra["solved"] and not rep.found
