import random

import pytest

from opsched import CostCurve, OpKey, exec_time, profile_op, profiling_cost
from opsched.profiler import histories_from_json, histories_to_json, measure

KEY = OpKey("Conv2D", (32, 8, 8, 384))
CURVE = CostCurve(1, 100, 0.25)


def test_noiseless_sample_equals_exec_time():
    h = profile_op(KEY, CURVE, [20], repeats=1, noise_sigma=0.0, seed=0)
    assert h.samples == {20: 10.75}


def test_noiseless_repeats_are_identical():
    one = profile_op(KEY, CURVE, [4, 20], repeats=1)
    five = profile_op(KEY, CURVE, [4, 20], repeats=5)
    assert one.samples == five.samples


def test_determinism_same_seed():
    a = profile_op(KEY, CURVE, [1, 8, 20], repeats=3, noise_sigma=0.1, seed=99)
    b = profile_op(KEY, CURVE, [1, 8, 20], repeats=3, noise_sigma=0.1, seed=99)
    assert a == b


def test_different_seed_changes_noise():
    a = profile_op(KEY, CURVE, [8], repeats=3, noise_sigma=0.1, seed=1)
    b = profile_op(KEY, CURVE, [8], repeats=3, noise_sigma=0.1, seed=2)
    assert a.samples != b.samples


def test_median_of_odd_noiseless_repeats_exact():
    h = profile_op(KEY, CURVE, [7], repeats=9, noise_sigma=0.0, seed=0)
    assert h.samples[7] == exec_time(CURVE, 7)


def test_widths_validation():
    with pytest.raises(ValueError):
        profile_op(KEY, CURVE, [])
    with pytest.raises(ValueError):
        profile_op(KEY, CURVE, [4, 4])
    with pytest.raises(ValueError):
        profile_op(KEY, CURVE, [0])


def test_total_ms_accumulates_every_draw():
    h = profile_op(KEY, CURVE, [10, 20], repeats=3, noise_sigma=0.0, seed=0)
    assert h.total_ms == pytest.approx(3 * (exec_time(CURVE, 10) + exec_time(CURVE, 20)))


def test_profiling_cost_zero_histories():
    assert profiling_cost([], 100, 10.0) == 0.0


def test_profiling_cost_arithmetic():
    h = profile_op(KEY, CostCurve(0, 1, 0), [1])  # costs exactly 1 ms
    assert profiling_cost([h], 1999, 1.0) == pytest.approx(0.0005)


def test_noise_bound_fuzz():
    # within sigma <= 0.05 and odd repeats >= 5, the median lands within 5%
    # of the true time in at least 99% of trials
    rng = random.Random(20240917)
    ok = 0
    trials = 10_000
    for i in range(trials):
        sigma = rng.uniform(0.0, 0.05)
        repeats = rng.choice([5, 7, 9, 11, 13, 15])
        width = rng.randint(1, 68)
        med, _ = measure(KEY, CURVE, width, repeats, sigma, seed=i)
        true = exec_time(CURVE, width)
        if abs(med - true) / true <= 0.05:
            ok += 1
    assert ok / trials >= 0.99, ok / trials


def test_history_store_round_trip():
    hs = [
        profile_op(KEY, CURVE, [1, 4, 20], repeats=2, noise_sigma=0.05, seed=5),
        profile_op(OpKey("Mul", (64,)), CostCurve(0.1, 2, 0.01), [1, 8]),
    ]
    text = histories_to_json(hs)
    again = histories_from_json(text)
    assert again == sorted(hs, key=lambda h: (h.key.op_type, h.key.signature))
    assert histories_to_json(again) == text
