"""Sparse additive keyword analysis between two corpora.

Fits per-term log-deviations (eta) of a treatment corpus against a
smoothed background log-distribution m, maximizing the treatment
multinomial likelihood (in its Poisson working form, which pins the
additive gauge so the unpenalized optimum is exactly log(rate) - m)
under a self-tuned L1 penalty.  Each outer iteration re-estimates the
per-term penalty weight as the inverse of (|eta_j| + epsilon), normalized
so the weights average to `base_penalty`, then solves every coordinate
exactly (the objective is separable, so a soft-thresholded coordinate
step lands on the per-term optimum).  Terms whose treatment rate sits
within the penalty of the background rate stay at exactly zero, which is
what makes the ranking sparse.

Counting is sequential here; corpora may be counted in chunks elsewhere
and combined with merge_counts, which is order-independent.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import Dataset
from .errors import ValidationError
from .featurize import tokenize, tweet_ngrams
from .formatting import fmt_num, fmt_rate, fmt_sci

DEFAULT_SMOOTHING = 0.1
DEFAULT_BASE_PENALTY = 1e-3
DEFAULT_EPSILON = 1e-4
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 500


def count_ngrams(dataset: Dataset) -> Counter:
    """Corpus-wide unigram+bigram counts under the shared tokenizer rules
    (stop words excluded)."""
    counts: Counter = Counter()
    for tl in dataset.timelines:
        for tweet in tl.tweets:
            counts.update(tweet_ngrams(tokenize(tweet.text)))
    return counts


def merge_counts(parts: Iterable[Mapping[str, int]]) -> Counter:
    total: Counter = Counter()
    for part in parts:
        total.update(part)
    return total


def _validate_counts(counts: Mapping[str, int], name: str) -> None:
    for term, value in counts.items():
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValidationError(f"{name} count for {term!r} must be a non-negative integer")


@dataclass
class SageResult:
    terms: tuple[str, ...]          # lexicographic coordinate order
    eta: np.ndarray
    background_logprob: np.ndarray  # m
    treatment_counts: np.ndarray
    base_counts: np.ndarray
    treatment_total: int
    base_total: int
    converged: bool
    iterations: int
    objective_history: list = field(default_factory=list, repr=False)

    def eta_of(self, term: str) -> float:
        return float(self.eta[self.terms.index(term)])


def _coordinate_update(rate: float, a: float, tau: float) -> float:
    """Exact maximizer of rate*eta - a*exp(eta) - tau*|eta| for one term."""
    if tau <= 0.0:
        if rate <= 0.0:
            raise ValidationError("penalty-free fit requires a positive treatment "
                                  "count for every term")
        return math.log(rate / a)
    if rate - tau > a:
        return math.log((rate - tau) / a)
    if rate + tau < a:
        return math.log((rate + tau) / a)
    return 0.0


def sage_fit(treatment: Mapping[str, int], base: Mapping[str, int],
             smoothing: float = DEFAULT_SMOOTHING,
             base_penalty: float = DEFAULT_BASE_PENALTY,
             epsilon: float = DEFAULT_EPSILON,
             tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER) -> SageResult:
    """Fit eta over the union vocabulary of both corpora.

    base_penalty is the average L1 weight per term; epsilon floors the
    reweighting; convergence is max |delta eta| <= tol between outer
    iterations.  The result carries a converged flag rather than raising
    when max_iter is exhausted.
    """
    _validate_counts(treatment, "treatment")
    _validate_counts(base, "base")
    if smoothing < 0:
        raise ValidationError("smoothing must be >= 0")
    if base_penalty < 0:
        raise ValidationError("base_penalty must be >= 0")
    if epsilon <= 0 or tol <= 0 or max_iter < 1:
        raise ValidationError("epsilon and tol must be positive, max_iter >= 1")

    terms = tuple(sorted(set(treatment) | set(base)))
    if not terms:
        raise ValidationError("both corpora are empty; nothing to fit")
    c = np.array([treatment.get(t, 0) for t in terms], dtype=np.float64)
    b = np.array([base.get(t, 0) for t in terms], dtype=np.float64)
    c_total = int(c.sum())
    b_total = int(b.sum())
    if c_total == 0:
        raise ValidationError("treatment corpus has no term occurrences")
    if smoothing == 0.0 and (b == 0).any():
        raise ValidationError("smoothing must be positive when a term is absent "
                              "from the base corpus")

    v = len(terms)
    m = np.log((b + smoothing) / (b_total + smoothing * v))
    a = np.exp(m)
    rates = c / c_total

    eta = np.zeros(v, dtype=np.float64)
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        inv = 1.0 / (np.abs(eta) + epsilon)
        tau = base_penalty * inv / inv.mean()
        before = _objective(rates, m, a, eta, tau)
        delta = 0.0
        for j in range(v):  # fixed lexicographic coordinate order
            new = _coordinate_update(rates[j], a[j], tau[j])
            delta = max(delta, abs(new - eta[j]))
            eta[j] = new
        after = _objective(rates, m, a, eta, tau)
        assert after >= before - 1e-9 * max(1.0, abs(before)), \
            "penalized objective decreased within an iteration"
        history.append(after)
        if delta <= tol:
            converged = True
            break

    return SageResult(
        terms=terms, eta=eta, background_logprob=m,
        treatment_counts=c.astype(np.int64), base_counts=b.astype(np.int64),
        treatment_total=c_total, base_total=b_total,
        converged=converged, iterations=iterations, objective_history=history,
    )


def _objective(rates, m, a, eta, tau) -> float:
    return float(np.sum(rates * (m + eta) - a * np.exp(eta)) - np.sum(tau * np.abs(eta)))


# --- reporting -------------------------------------------------------------


@dataclass
class SageRow:
    rank: int
    term: str
    eta: float
    treatment_count: int
    treatment_rate: float
    base_count: int
    base_rate: float


def sage_report(result: SageResult, top_k: int = 30) -> list[SageRow]:
    """Top terms by eta, descending; ties broken by higher treatment count,
    then lexicographically.  Rates are raw count/total (no smoothing).  A
    top_k beyond the vocabulary just returns the full ranking."""
    if top_k < 0:
        raise ValidationError("top_k must be >= 0")
    order = sorted(
        range(len(result.terms)),
        key=lambda j: (-result.eta[j], -result.treatment_counts[j], result.terms[j]),
    )
    rows = []
    for rank, j in enumerate(order[:top_k], start=1):
        rows.append(SageRow(
            rank=rank,
            term=result.terms[j],
            eta=float(result.eta[j]),
            treatment_count=int(result.treatment_counts[j]),
            treatment_rate=result.treatment_counts[j] / result.treatment_total,
            base_count=int(result.base_counts[j]),
            base_rate=(result.base_counts[j] / result.base_total) if result.base_total else 0.0,
        ))
    return rows


def render_sage_csv(rows: Sequence[SageRow], meta: Optional[str] = None) -> str:
    lines = []
    if meta:
        lines.append(f"# {meta}")
    lines.append("rank,ngram,sage,treatment_count,treatment_rate,base_count,base_rate")
    for row in rows:
        lines.append(",".join([
            str(row.rank),
            row.term.replace(",", " "),
            fmt_num(row.eta),
            str(row.treatment_count),
            fmt_rate(row.treatment_rate),
            str(row.base_count),
            fmt_sci(row.base_rate),
        ]))
    return "\n".join(lines) + "\n"
