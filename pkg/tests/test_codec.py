import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sscsim.codec import (LLR_CLAMP, CodeParams, IllegalSupportError, SupportSet, compute_bit_budget,
                          constellation, constellation_labels, decode_message, encode_message,
                          hard_decide, llr_demodulate, qam_modulate, rank_to_support,
                          recovery_length_guideline, support_to_rank)
from sscsim.numerics import RandomStream


@pytest.mark.parametrize("N,K,M_mod,expected", [
    (257, 2, 4, (15, 4, 19)),
    (240, 4, 4, (27, 8, 35)),
    (257, 2, 16, (15, 8, 23)),
    (4, 4, 4, (0, 8, 8)),
])
def test_bit_budget(N, K, M_mod, expected):
    assert compute_bit_budget(N, K, M_mod) == expected


def test_bit_budget_matches_factorial_binomials():
    for K in range(1, 9):
        for N in range(K, 301):
            c = math.factorial(N) // (math.factorial(K) * math.factorial(N - K))
            b_I = 0
            while 1 << (b_I + 1) <= c:
                b_I += 1
            assert compute_bit_budget(N, K, 4) == (b_I, 2 * K, b_I + 2 * K)


@pytest.mark.parametrize("N,K,M_mod", [(3, 4, 4), (10, 0, 4), (10, 2, 8), (10, 2, 2)])
def test_bit_budget_rejects_bad_arguments(N, K, M_mod):
    with pytest.raises(ValueError):
        compute_bit_budget(N, K, M_mod)


@pytest.mark.parametrize("M,R,D", [(128, 0.5, 64), (117, 0.125, 15), (117, 0.25, 29),
                                   (117, 0.375, 44), (117, 0.5, 59), (10, 0.01, 1), (10, 1.0, 10)])
def test_column_weight_rounding(M, R, D):
    params = CodeParams(N=240, K=4, M=M, R=R, L_ch=1)
    assert params.D == D
    assert params.effective_R == D / M


def test_cyclic_prefix_defaults_to_channel_memory():
    assert CodeParams(N=257, K=2, M=128, L_ch=4).L_CP == 3
    with pytest.raises(ValueError):
        CodeParams(N=257, K=2, M=128, L_ch=4, L_CP=2)


def test_ranking_is_lexicographic():
    N, K = 9, 3
    b_I = compute_bit_budget(N, K, 4)[0]
    subsets = list(itertools.combinations(range(N), K))[:1 << b_I]
    for rank, subset in enumerate(subsets):
        assert rank_to_support(rank, N, K).indices == subset
        assert support_to_rank(subset, N, K) == rank


def test_rank_examples():
    assert rank_to_support(0, 257, 2).indices == (0, 1)
    assert rank_to_support(7, 5, 2).indices == (2, 3)
    assert rank_to_support(255, 256, 1).indices == (255,)


def test_unmapped_supports():
    # C(5, 2) = 10 subsets, 2**3 = 8 of them mapped
    with pytest.raises(IllegalSupportError):
        support_to_rank((2, 4), 5, 2)
    with pytest.raises(ValueError):
        rank_to_support(8, 5, 2)


def test_large_ranks_are_exact():
    N, K = 4096, 8
    b_I = math.comb(N, K).bit_length() - 1
    rank = (1 << b_I) - 1
    assert support_to_rank(rank_to_support(rank, N, K), N, K) == rank


def test_support_must_increase():
    with pytest.raises(ValueError):
        SupportSet((3, 1))
    with pytest.raises(ValueError):
        SupportSet((2, 2))


@pytest.mark.parametrize("M_mod", [4, 16, 64])
def test_constellation_energy_and_gray_labels(M_mod):
    points = constellation(M_mod)
    labels = constellation_labels(M_mod)
    assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0)
    dist = np.abs(points[:, None] - points[None, :])
    nearest = np.min(dist + np.eye(M_mod) * 10, axis=1)
    for i in range(M_mod):
        for j in np.flatnonzero(np.isclose(dist[i], nearest[i])):
            assert np.count_nonzero(labels[i] != labels[j]) == 1


def test_qpsk_mapping():
    s = qam_modulate([0, 0, 1, 1, 0, 1], 4)
    assert_allclose(s, np.array([1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2))


def test_qam_accepts_uint8_payload_bits():
    bits = np.array([1, 1, 1, 0], dtype=np.uint8)
    assert_allclose(qam_modulate(bits, 4), np.array([-1 - 1j, -1 + 1j]) / math.sqrt(2))
    payload = RandomStream(3, 3).bits(4 * 4096)
    s = qam_modulate(payload, 16)
    assert np.max(np.abs(s)) <= math.sqrt(18 / 10) + 1e-12
    assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, rel=0.05)


def test_qam_rejects_partial_symbols():
    with pytest.raises(ValueError):
        qam_modulate([0, 1, 1], 4)


@pytest.mark.parametrize("M_mod", [4, 16])
def test_llr_hard_decisions_recover_labels(M_mod):
    labels = constellation_labels(M_mod)
    llrs = llr_demodulate(constellation(M_mod), 0.01, M_mod)
    assert_array_equal(hard_decide(llrs), labels)


def test_llr_matches_brute_force():
    points, labels = constellation(16), constellation_labels(16)
    est, noise_var = 0.3 - 0.7j, 0.4
    metric = np.exp(-np.abs(est - points) ** 2 / noise_var)
    expected = [math.log(metric[labels[:, i] == 1].sum() / metric[labels[:, i] == 0].sum())
                for i in range(4)]
    assert_allclose(llr_demodulate(est, noise_var, 16), expected, rtol=1e-10)


def test_llr_signs_for_qpsk():
    assert_array_equal(llr_demodulate(0j, 0.3, 4), [0.0, 0.0])
    assert np.all(llr_demodulate((1 + 1j) / math.sqrt(2), 0.05, 4) < -10)


def test_llrs_are_clamped():
    llrs = llr_demodulate(np.array([5 + 5j, -5 - 5j]), 1e-6, 4)
    assert llrs.shape == (2, 2)
    assert np.all(np.abs(llrs) <= LLR_CLAMP)
    with pytest.raises(ValueError):
        llr_demodulate(1j, 0.0, 4)


@pytest.mark.parametrize("M_mod", [4, 16])
def test_message_round_trip(M_mod):
    params = CodeParams(N=257, K=2, M=128, M_mod=M_mod)
    for trial in range(20):
        payload = RandomStream(11, trial).bits(params.b)
        msg = encode_message(payload, params)
        assert len(msg.support) == params.K
        assert_array_equal(decode_message(msg.support, msg.values, 1e-3, params), payload)


def test_support_only_messages():
    params = CodeParams(N=240, K=4, M=117)
    payload = RandomStream(5, 0).bits(params.b_I)
    msg = encode_message(payload, params, support_only=True)
    assert_array_equal(msg.values, np.ones(4))
    assert_array_equal(decode_message(msg.support, msg.values, 1.0, params, support_only=True), payload)
    with pytest.raises(ValueError):
        encode_message(RandomStream(5, 0).bits(params.b), params, support_only=True)


def test_recovery_guideline():
    assert recovery_length_guideline(257, 2) == pytest.approx(2 * math.log2(128.5))
    assert recovery_length_guideline(240, 4) < 117
