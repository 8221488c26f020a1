import math
import random

import numpy as np
import pytest

from trolldet.errors import ValidationError
from trolldet.formatting import fmt_rate, fmt_sci
from trolldet.sage import (SageRow, count_ngrams, merge_counts, render_sage_csv, sage_fit,
                           sage_report)


def test_identical_corpora_have_zero_eta():
    counts = {"alpha": 300, "beta": 200, "gamma": 100, "delta gamma": 150}
    result = sage_fit(counts, dict(counts))
    assert result.converged
    assert np.max(np.abs(result.eta)) == 0.0


def test_overrepresented_term_gets_positive_eta():
    base = {"a": 1, "b": 1}
    treatment = {"a": 1, "b": 99}
    result = sage_fit(treatment, base)
    assert result.eta_of("b") > 0.0
    assert result.eta_of("a") < 0.0


def test_penalty_off_matches_log_odds_closed_form():
    treatment = {"x": 5, "y": 3, "z": 2}
    base = {"x": 4, "y": 4, "z": 1}
    result = sage_fit(treatment, base, base_penalty=0.0)
    C = sum(treatment.values())
    B = sum(base.values())
    V = 3
    for j, term in enumerate(result.terms):
        m = math.log((base[term] + 0.1) / (B + 0.1 * V))
        expected = math.log(treatment[term] / C) - m
        assert result.eta[j] == pytest.approx(expected, abs=1e-12)


def test_penalty_off_requires_positive_treatment_counts():
    with pytest.raises(ValidationError, match="positive treatment"):
        sage_fit({"x": 5, "y": 0}, {"x": 1, "y": 1}, base_penalty=0.0)


def test_eta_depends_on_treatment_only_through_rates():
    # scaling every treatment count leaves the rates, and so eta, unchanged;
    # the smoothed background is deliberately scale-sensitive
    treatment = {"a": 30, "b": 70, "c": 10}
    base = {"a": 50, "b": 50, "c": 20}
    r1 = sage_fit(treatment, base)
    r2 = sage_fit({t: c * 10 for t, c in treatment.items()}, base)
    assert np.allclose(r1.eta, r2.eta, atol=1e-12)


def test_term_missing_from_treatment_gets_negative_eta():
    treatment = {"common": 500}
    base = {"common": 400, "rare": 100}
    result = sage_fit(treatment, base)
    assert result.eta_of("rare") < 0.0


def test_zero_base_count_needs_smoothing():
    with pytest.raises(ValidationError, match="smoothing"):
        sage_fit({"x": 5, "y": 5}, {"x": 10}, smoothing=0.0)


def test_negative_count_rejected():
    with pytest.raises(ValidationError):
        sage_fit({"x": -1}, {"x": 1})


def test_empty_vocabulary_rejected():
    with pytest.raises(ValidationError):
        sage_fit({}, {})


def test_objective_history_is_nondecreasing():
    rng = random.Random(3)
    for trial in range(10):
        vocab = [f"w{i}" for i in range(rng.randint(2, 40))]
        treatment = {w: rng.randint(0, 50) for w in vocab}
        treatment[vocab[0]] += 1
        base = {w: rng.randint(1, 50) for w in vocab}
        result = sage_fit(treatment, base)
        hist = result.objective_history
        assert all(b >= a - 1e-9 * max(1.0, abs(a))
                   for a, b in zip(hist, hist[1:]))
        assert result.converged


def test_terms_cover_union_of_both_corpora():
    result = sage_fit({"only_t": 5, "shared": 5}, {"only_b": 5, "shared": 5})
    assert result.terms == ("only_b", "only_t", "shared")


def test_report_orders_by_eta_count_then_term():
    result = sage_fit({"aaa": 40, "bbb": 40, "ccc": 10}, {"aaa": 30, "bbb": 30, "ccc": 30})
    rows = sage_report(result, top_k=10)
    assert [r.term for r in rows] == ["aaa", "bbb", "ccc"]
    assert [r.rank for r in rows] == [1, 2, 3]
    assert rows[0].eta == rows[1].eta


def test_report_truncates_to_top_k():
    counts = {f"w{i}": 10 + i for i in range(20)}
    result = sage_fit(counts, dict(counts))
    assert len(sage_report(result, top_k=5)) == 5
    assert len(sage_report(result, top_k=100)) == 20


def test_report_rates_are_raw_ratios():
    treatment = {"x": 30, "y": 70}
    base = {"x": 10, "y": 10}
    rows = sage_report(sage_fit(treatment, base), top_k=2)
    by_term = {r.term: r for r in rows}
    assert by_term["x"].treatment_rate == 0.3
    assert by_term["x"].base_rate == 0.5


def test_render_sage_csv_shape_and_formats():
    rows = [SageRow(rank=1, term="fukushima2015", eta=12.19, treatment_count=12498,
                    treatment_rate=12498 / 1837941, base_count=1,
                    base_rate=5.139e-09),
            SageRow(rank=2, term="a,b", eta=1.0, treatment_count=3,
                    treatment_rate=0.25, base_count=0, base_rate=0.0)]
    text = render_sage_csv(rows, meta="note")
    lines = text.splitlines()
    assert lines[0] == "# note"
    assert lines[1] == "rank,ngram,sage,treatment_count,treatment_rate,base_count,base_rate"
    assert lines[2] == "1,fukushima2015,12.19,12498,0.0068,1,5.14e-09"
    # a comma inside a term may not break the CSV column count
    assert lines[3].startswith("2,a b,")
    assert all(len(l.split(",")) == 7 for l in lines[1:])


def test_rate_formatting_fixtures():
    assert fmt_rate(12498 / 1837941) == "0.0068"
    assert fmt_sci(5.139e-09) == "5.14e-09"
    assert fmt_sci(0.0) == "0"


def test_count_ngrams_and_merge(golden_dataset):
    counts = count_ngrams(golden_dataset)
    assert counts["зима близко"] == 1
    assert counts["winter coming"] == 1
    assert "the" not in counts
    assert sum(counts.values()) == 21
    doubled = merge_counts([counts, counts])
    assert doubled["зима близко"] == 2


def test_seeded_perturbation_keeps_most_terms_quiet():
    # resample one corpus multinomially; only sampling noise separates the
    # two, so the penalty should pin nearly every eta at zero
    rng = np.random.default_rng(12)
    vocab = [f"term{i:04d}" for i in range(1000)]
    weights = rng.random(1000) + 0.05
    probs = weights / weights.sum()
    total = 120_000
    base_counts = rng.multinomial(total, probs)
    treat_counts = rng.multinomial(total, probs)
    base = {t: int(c) for t, c in zip(vocab, base_counts)}
    treatment = {t: int(c) for t, c in zip(vocab, treat_counts)}
    result = sage_fit(treatment, base)
    near_zero = np.mean(np.abs(result.eta) < 0.01)
    assert near_zero >= 0.9
