import random

import pytest

from passforest import InvalidBaseline, ProgramResult, aggregate, overoz


def test_overoz_basic():
    assert overoz(1000, 900) == 10.0


def test_overoz_table_values():
    assert overoz(450, 372) == pytest.approx(17.333333333333332, abs=1e-9)


def test_overoz_identity():
    assert overoz(500, 500) == 0.0


def test_overoz_negative_when_worse():
    assert overoz(100, 150) == -50.0


def test_overoz_zero_baseline():
    with pytest.raises(InvalidBaseline):
        overoz(0, 10)


def test_overoz_antitone_in_tuned():
    values = [overoz(400, tuned) for tuned in range(0, 500, 25)]
    assert values == sorted(values, reverse=True)


def test_aggregate_single_group():
    results = [
        ProgramResult("p1", 100, 90, "cbench"),
        ProgramResult("p2", 100, 80, "cbench"),
    ]
    report = aggregate(results)
    assert report["groups"]["cbench"]["mean_overoz_pct"] == 15.0
    assert report["mean_of_group_means"] == 15.0


def test_aggregate_mean_of_group_means():
    results = [
        ProgramResult("p1", 100, 90, "x"),   # 10
        ProgramResult("p2", 100, 80, "y"),   # 20
    ]
    report = aggregate(results)
    assert report["mean_of_group_means"] == 15.0


def test_aggregate_single_program():
    report = aggregate([ProgramResult("p", 200, 100, "solo")])
    assert report["groups"]["solo"]["mean_overoz_pct"] == 50.0
    assert report["per_program_mean"] == 50.0


def test_aggregate_permutation_invariant():
    rng = random.Random(8)
    results = [
        ProgramResult(f"p{i}", 100 + i, 90 - i, f"d{i % 3}") for i in range(12)
    ]
    shuffled = results[:]
    rng.shuffle(shuffled)
    assert aggregate(results) == aggregate(shuffled)


def test_aggregate_empty_rejected():
    with pytest.raises(ValueError):
        aggregate([])


def test_headline_convention_on_published_rows():
    rows = [11.84, 6.86, 8.02, 7.99, 21.03, 8.05, 31.58]
    results = [
        ProgramResult(f"p{i}", 10_000, round(10_000 * (1 - pct / 100)), f"d{i}")
        for i, pct in enumerate(rows)
    ]
    report = aggregate(results)
    assert report["mean_of_group_means"] == pytest.approx(13.62, abs=0.01)