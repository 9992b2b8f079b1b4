"""Connection scores, daily matrices and index series."""

import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsconn.connectivity import (
    build_mci_series,
    connection_scores,
    daily_matrix,
    events_by_day,
    mci_daily,
    monthly_matrices,
    offdiag_fraction,
    standardize_series,
    tone_scalar,
)
from newsconn.ingest import StockIndex, ToneTriple, build_stock_index

from ._oracles import dense_mci_series, prefix_standardized
from .conftest import mk_event, random_events

D = dt.date(2004, 1, 5)


class TestToneScalar:
    def test_pure_positive_opt(self):
        assert tone_scalar(ToneTriple(1, 0, 0), "opt") == 1.0

    def test_opt_is_positive_minus_negative(self):
        assert tone_scalar(ToneTriple(0.2, 0.3, 0.5), "opt") == pytest.approx(-0.1)

    def test_neg_projection(self):
        assert tone_scalar(ToneTriple(0.2, 0.3, 0.5), "neg") == 0.3

    def test_bounds(self):
        assert -1.0 <= tone_scalar(ToneTriple(0, 1, 0), "opt") <= 1.0


class TestConnectionScores:
    def test_single_mention_diagonal_only(self):
        event = mk_event("a1", D, {"A": 0.5})
        index = build_stock_index([event])
        scores = {(t, i, j): v for t, i, j, v in connection_scores(event, "opt", index)}
        assert scores == {(1, 0, 0): 0.5, (2, 0, 0): 0.25, (3, 0, 0): 1}

    def test_two_stock_product(self):
        # tones 0.8 and 0.2: the co-movement score is their product
        event = mk_event("a1", D, {"S1": 0.8, "S2": 0.2})
        index = build_stock_index([event])
        scores = {(t, i, j): v for t, i, j, v in connection_scores(event, "opt", index)}
        assert scores[(2, 0, 1)] == pytest.approx(0.16)
        assert scores[(1, 0, 1)] == pytest.approx(0.8)
        assert scores[(3, 0, 1)] == 1

    def test_both_negative_tones_positive_comovement(self):
        event = mk_event("a1", D, {"S3": -0.6, "S4": -0.2})
        index = build_stock_index([event])
        scores = {(t, i, j): v for t, i, j, v in connection_scores(event, "opt", index)}
        assert scores[(2, 0, 1)] == pytest.approx(0.12)
        assert scores[(2, 0, 1)] > 0

    def test_type2_equals_type1_times_tone(self):
        event = mk_event("a1", D, {"A": 0.7, "B": -0.4, "C": 0.1})
        index = build_stock_index([event])
        tones = {index.of(s): tone_scalar(t, "opt") for s, t in event.mentions.items()}
        scores = {(t, i, j): v for t, i, j, v in connection_scores(event, "opt", index)}
        for (t, i, j), v in scores.items():
            if t == 1:
                assert scores[(2, i, j)] == pytest.approx(v * tones[j])


class TestDailyMatrix:
    def test_zero_events(self):
        m = daily_matrix([], 2, "opt", StockIndex(["A"]))
        assert m.entries == {}
        assert m.total_sum() == 0

    def test_worked_two_news_example(self):
        # two connected articles, tones 0.8/0.2 then 0.2/0.8
        events = [
            mk_event("a1", D, {"S1": 0.8, "S2": 0.2}),
            mk_event("a2", D, {"S1": 0.2, "S2": 0.8}),
        ]
        index = build_stock_index(events)
        m = daily_matrix(events, 2, "opt", index)
        expected = 0.8 * 0.2 + 0.2 * 0.8
        assert m.entries[(0, 1)] == expected
        assert m.entries[(0, 1)] == pytest.approx(0.32)
        assert m.entries[(1, 0)] == expected

    def test_chunked_equals_serial_bitwise(self):
        rng = np.random.default_rng(7)
        events = random_events(rng, n_days=1, n_stocks=10, lam=1000.0)
        events = events[:1000]
        index = build_stock_index(events)
        for score_type, variant in ((1, "opt"), (2, "opt"), (2, "neg"), (3, None)):
            serial = daily_matrix(events, score_type, variant, index)
            chunked = daily_matrix(events, score_type, variant, index, chunks=8)
            assert serial.entries == chunked.entries

    def test_type3_diagonal_counts_articles(self):
        events = [
            mk_event("a1", D, {"A": 0.5, "B": 0.1}),
            mk_event("a2", D, {"A": -0.2}),
            mk_event("a3", D, {"B": 0.0, "C": 0.3}),
        ]
        index = build_stock_index(events)
        m = daily_matrix(events, 3, None, index)
        assert m.entries[(0, 0)] == 2  # A in a1, a2
        assert m.entries[(1, 1)] == 2  # B in a1, a3
        assert m.entries[(2, 2)] == 1
        assert all(isinstance(v, int) and v >= 0 for v in m.entries.values())

    def test_symmetry_types_2_and_3(self):
        rng = np.random.default_rng(3)
        events = random_events(rng, n_days=1, n_stocks=8, lam=60.0)
        index = build_stock_index(events)
        for score_type in (2, 3):
            m = daily_matrix(events, score_type, "opt", index)
            for (i, j), v in m.entries.items():
                assert m.entries[(j, i)] == pytest.approx(v, abs=1e-15)

    def test_zero_tone_still_counts_for_type3(self):
        event = mk_event("a1", D, {"A": 0.0, "B": 0.5})
        index = build_stock_index([event])
        m3 = daily_matrix([event], 3, None, index)
        m2 = daily_matrix([event], 2, "opt", index)
        assert m3.entries[(0, 1)] == 1
        assert m2.entries[(0, 1)] == 0.0


class TestOffdiagFraction:
    def test_all_self_connected(self):
        events = [mk_event(f"a{i}", D, {f"S{i}": 0.4}) for i in range(5)]
        index = build_stock_index(events)
        assert offdiag_fraction(daily_matrix(events, 3, None, index)) == 0.0

    def test_single_connected_pair_type3(self):
        # one two-stock article: off-diagonal 2, total 4
        event = mk_event("a1", D, {"A": 0.5, "B": 0.5})
        index = build_stock_index([event])
        assert offdiag_fraction(daily_matrix([event], 3, None, index)) == 0.5

    def test_empty_day_undefined(self):
        assert offdiag_fraction(daily_matrix([], 3, None, StockIndex(["A"]))) is None

    def test_type3_fraction_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            events = random_events(rng, n_days=1, n_stocks=6, lam=10.0)
            if not events:
                continue
            index = build_stock_index(events)
            frac = offdiag_fraction(daily_matrix(events, 3, None, index))
            assert 0.0 <= frac < 1.0


class TestMciDaily:
    def test_equal_fractions(self):
        assert mci_daily(0.5, 0.5) == 0.0

    def test_subtraction(self):
        assert mci_daily(0.6, 0.5) == pytest.approx(0.1)

    def test_undefined_propagates(self):
        assert mci_daily(None, 0.5) is None
        assert mci_daily(0.5, None) is None


class TestBuildMciSeries:
    def test_identical_news_every_day(self):
        events = []
        for d in range(10):
            day = dt.date(2004, 1, 5) + dt.timedelta(days=d)
            events.append(mk_event(f"a{d}s", day, {"A": 0.5}))
            events.append(mk_event(f"a{d}t", day, {"A": 0.4, "B": 0.4}))
        index = build_stock_index(events)
        series = build_mci_series(events, 3, None, index)
        assert all(v == 0.0 for _, v in series.daily)
        assert all(v == 0.0 for _, v in series.monthly)

    def test_ramping_connected_share_positive_monthly_sign(self):
        # connected-news share rises linearly through the month
        events = []
        serial = 0
        days = [dt.date(2004, 1, 1) + dt.timedelta(days=d) for d in range(20)]
        for k, day in enumerate(days):
            n_connected = k // 2
            for a in range(10 - n_connected):
                events.append(mk_event(f"a{serial:05d}", day, {f"S{a}": 0.3}))
                serial += 1
            for a in range(n_connected):
                events.append(
                    mk_event(f"a{serial:05d}", day, {f"S{a}": 0.3, f"S{a+1}": 0.2})
                )
                serial += 1
        index = build_stock_index(events)
        series = build_mci_series(events, 3, None, index)
        assert len(series.monthly) == 1
        assert series.monthly[0][1] > 0

    def test_brute_force_oracle_full_year(self, oracle_events):
        events, index = oracle_events
        for score_type, variant in ((1, "opt"), (1, "neg"), (2, "opt"), (2, "pos"), (3, None)):
            series = build_mci_series(events, score_type, variant, index)
            oracle = dense_mci_series(events, variant or "opt", len(index), score_type)
            assert len(series.daily) == len(oracle)
            for (d1, v1), (d2, v2) in zip(series.daily, oracle):
                assert d1 == d2
                assert v1 == pytest.approx(v2, abs=1e-10)

    def test_weighted_coverage_identity_type2_vs_type3(self, oracle_events):
        # the co-movement index is the coverage index with tone-product weights
        events, index = oracle_events
        series2 = build_mci_series(events, 2, "opt", index)
        weighted = []
        prev = None
        for day, day_events in events_by_day(events):
            num = den = 0.0
            for e in day_events:
                tones = {s: tone_scalar(t, "opt") for s, t in e.mentions.items()}
                for si in e.mentions:
                    for sj in e.mentions:
                        w = tones[si] * tones[sj]  # weight on each coverage pair
                        den += w
                        if si != sj:
                            num += w
            frac = num / den if abs(den) >= 1e-12 else None
            if frac is None:
                continue
            if prev is not None:
                weighted.append((day, frac - prev))
            prev = frac
        assert len(series2.daily) == len(weighted)
        for (d1, v1), (d2, v2) in zip(series2.daily, weighted):
            assert d1 == d2
            assert v1 == pytest.approx(v2, abs=1e-10)

    def test_previous_defined_day_skips_degenerate(self):
        # day 2 has no news; day 3 differences against day 1
        events = [
            mk_event("a1", dt.date(2004, 1, 5), {"A": 0.5, "B": 0.5}),
            mk_event("a2", dt.date(2004, 1, 5), {"A": 0.5}),
            mk_event("a3", dt.date(2004, 1, 7), {"A": 0.5, "B": 0.5}),
        ]
        index = build_stock_index(events)
        series = build_mci_series(events, 3, None, index)
        frac1 = 2 / 5  # one connected (4 cells) + one self (1 cell)
        frac3 = 2 / 4
        assert series.daily == [(dt.date(2004, 1, 7), frac3 - frac1)]

    def test_literal_lag_mode_truncates_previous_day(self):
        # day 1 has two articles, day 2 has one: literal mode compares
        # against day 1 truncated to its first article only
        events = [
            mk_event("a1", dt.date(2004, 1, 5), {"A": 0.5, "B": 0.5}),
            mk_event("a2", dt.date(2004, 1, 5), {"C": 0.5}),
            mk_event("b1", dt.date(2004, 1, 6), {"A": 0.5, "B": 0.5}),
        ]
        index = build_stock_index(events)
        per_day = build_mci_series(events, 3, None, index, lag_mode="per_day")
        literal = build_mci_series(events, 3, None, index, lag_mode="literal")
        assert per_day.daily == [(dt.date(2004, 1, 6), 0.5 - 2 / 5)]
        assert literal.daily == [(dt.date(2004, 1, 6), 0.5 - 0.5)]

    def test_monthly_aggregation_modes(self):
        events = [
            mk_event("a1", dt.date(2004, 1, 5), {"A": 0.5, "B": 0.5}),
            mk_event("b1", dt.date(2004, 1, 6), {"A": 0.5}),
            mk_event("c1", dt.date(2004, 1, 7), {"A": 0.5, "B": 0.5}),
        ]
        index = build_stock_index(events)
        daily = build_mci_series(events, 3, None, index).daily
        values = [v for _, v in daily]
        assert len(values) == 2
        mean = build_mci_series(events, 3, None, index, monthly_agg="mean").monthly[0][1]
        last = build_mci_series(events, 3, None, index, monthly_agg="last").monthly[0][1]
        total = build_mci_series(events, 3, None, index, monthly_agg="sum").monthly[0][1]
        assert mean == pytest.approx(sum(values) / 2)
        assert last == values[-1]
        assert total == pytest.approx(sum(values))

    def test_fewer_than_two_defined_days_empty(self):
        events = [mk_event("a1", dt.date(2004, 1, 5), {"A": 0.5})]
        index = build_stock_index(events)
        series = build_mci_series(events, 3, None, index)
        assert series.daily == [] and series.monthly == []

    def test_permutation_invariance(self, oracle_events):
        events, index = oracle_events
        # relabel stocks by reversing the id mapping
        relabel = {s: f"Z{999 - i:03d}" for i, s in enumerate(index.ids)}
        renamed = [
            mk_event(e.article_id, e.date, {relabel[s]: t for s, t in e.mentions.items()})
            for e in events
        ]
        index2 = build_stock_index(renamed)
        for score_type, variant in ((2, "opt"), (3, None)):
            a = build_mci_series(events, score_type, variant, index)
            b = build_mci_series(renamed, score_type, variant, index2)
            assert len(a.daily) == len(b.daily)
            for (d1, v1), (d2, v2) in zip(a.daily, b.daily):
                assert d1 == d2
                assert v1 == pytest.approx(v2, abs=1e-12)

    def test_pos_neg_variant_matrices_nonnegative(self, oracle_events):
        events, index = oracle_events
        for day, day_events in events_by_day(events)[:10]:
            for variant in ("pos", "neg"):
                m = daily_matrix(day_events, 2, variant, index)
                assert all(v >= 0.0 for v in m.entries.values())


class TestMonthlyMatrices:
    def test_sums_dailies(self, oracle_events):
        events, index = oracle_events
        by_month = monthly_matrices(events, 3, None, index)
        total = sum(m.total_sum() for m in by_month.values())
        expected = sum(len(e.mentions) ** 2 for e in events)
        assert total == expected


class TestStandardize:
    def test_symmetric_case(self):
        np.testing.assert_array_equal(standardize_series([1, 2, 3]), [-1.0, 0.0, 1.0])

    def test_full_sample_moments(self):
        rng = np.random.default_rng(0)
        z = standardize_series(rng.normal(3, 7, size=500))
        assert np.mean(z) == pytest.approx(0.0, abs=1e-12)
        assert np.std(z, ddof=1) == pytest.approx(1.0, abs=1e-12)

    def test_constant_errors(self):
        with pytest.raises(ValueError, match="zero-variance"):
            standardize_series([2.0, 2.0, 2.0])

    def test_recursive_matches_prefix_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=60)
        z = standardize_series(x, "recursive")
        expected = prefix_standardized(x)
        np.testing.assert_allclose(z[1:], expected[1:], atol=1e-12)
        assert np.isnan(z[0]) and np.isnan(expected[0])

    def test_recursive_differs_from_full_sample(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=40)
        full = standardize_series(x, "full-sample")
        rec = standardize_series(x, "recursive")
        assert np.sum(np.isclose(full[1:-1], rec[1:-1])) < 5

    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_recursive_never_looks_ahead(self, values):
        x = np.asarray(values)
        if float(np.std(x, ddof=1)) == 0.0:
            return
        rec = standardize_series(x, "recursive")
        # perturbing the tail cannot change earlier standardized values
        cut = len(x) // 2
        if float(np.std(x[: cut + 1] if cut else x, ddof=1)) == 0.0:
            return
        bumped = x.copy()
        bumped[cut:] += 123.456
        if float(np.std(bumped, ddof=1)) == 0.0:
            return
        rec2 = standardize_series(bumped, "recursive")
        np.testing.assert_array_equal(rec[:cut], rec2[:cut])
