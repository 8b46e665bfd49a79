"""Evaluation: rank correlations, cross-validation, ranking pipelines.

Two Kendall-style correlations are provided. kendall_tau_b is the
classic tie-adjusted statistic

    tau_b = (n_c - n_d) / sqrt((n_c + n_d + t_x)(n_c + n_d + t_y))

where t_x / t_y count pairs tied only in x / only in y (pairs tied in
both appear in neither radicand). kendall_tau_m is a variant for
candidate rankings with absent items scored zero: pairs tied in x with
a non-zero value count as concordant, pairs tied at zero stay neutral,
and the denominator is the total pair count n(n-1)/2; ties in y alone
are neutral. When a denominator is zero the statistic is defined as 0
and flagged degenerate.

Reference rankings arrive as rank numbers where smaller means better
(sales-rank convention); they are negated internally so that all
correlations run on higher-is-better scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .features import FeaturePipeline, FeatureVector
from .svm import LinearModel, TrainConfig, predict, train_csvm

__all__ = [
    "CrossValResult",
    "ItemRanking",
    "RankCorrelation",
    "SweepResult",
    "cross_validate",
    "kendall_tau_b",
    "kendall_tau_m",
    "long_tail_report",
    "rank_items",
    "sweep_cneg",
]


@dataclass(frozen=True)
class RankCorrelation:
    """A correlation value with its pair-count breakdown.

    t_x / t_y count ties in the first / second series only; t_zero
    counts zero-zero ties in the first series (tau_m only). degenerate
    marks an all-tied input whose statistic is defined as 0.
    """

    tau: float
    n_c: int
    n_d: int
    t_x: int
    t_y: int
    t_zero: int = 0
    degenerate: bool = False


def _as_series(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"series lengths differ: {x.size} vs {y.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("series must be finite")
    return x, y


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> RankCorrelation:
    """Tie-adjusted Kendall correlation from exact pair counts."""
    x, y = _as_series(x, y)
    n = x.size
    n_c = n_d = t_x = t_y = 0
    for i in range(n - 1):
        dx = x[i] - x[i + 1:]
        dy = y[i] - y[i + 1:]
        sx = np.sign(dx)
        sy = np.sign(dy)
        prod = sx * sy
        n_c += int(np.count_nonzero(prod > 0))
        n_d += int(np.count_nonzero(prod < 0))
        t_x += int(np.count_nonzero((sx == 0) & (sy != 0)))
        t_y += int(np.count_nonzero((sy == 0) & (sx != 0)))
    radicand = float(n_c + n_d + t_x) * float(n_c + n_d + t_y)
    if radicand == 0.0:
        return RankCorrelation(0.0, n_c, n_d, t_x, t_y, degenerate=True)
    return RankCorrelation((n_c - n_d) / math.sqrt(radicand), n_c, n_d, t_x, t_y)


def kendall_tau_m(x: Sequence[float], y: Sequence[float]) -> RankCorrelation:
    """Kendall variant treating non-zero ties in x as concordant.

    x is the candidate score series (0 marks an unranked item); y is
    the reference. Zero-zero ties in x are neutral but still occupy the
    all-pairs denominator.
    """
    x, y = _as_series(x, y)
    n = x.size
    total_pairs = n * (n - 1) // 2
    if total_pairs == 0:
        return RankCorrelation(0.0, 0, 0, 0, 0, degenerate=True)
    n_c = n_d = t_nonzero = t_zero = t_y = 0
    for i in range(n - 1):
        xi = x[i]
        dx = xi - x[i + 1:]
        dy = y[i] - y[i + 1:]
        tied_x = dx == 0
        zero_tie = tied_x & (xi == 0)
        t_zero += int(np.count_nonzero(zero_tie))
        t_nonzero += int(np.count_nonzero(tied_x & (xi != 0)))
        live = ~tied_x
        sy = np.sign(dy[live])
        sx = np.sign(dx[live])
        prod = sx * sy
        n_c += int(np.count_nonzero(prod > 0))
        n_d += int(np.count_nonzero(prod < 0))
        t_y += int(np.count_nonzero(sy == 0))
    tau = (n_c + t_nonzero - n_d) / total_pairs
    return RankCorrelation(tau, n_c, n_d, t_nonzero, t_y, t_zero=t_zero)


@dataclass(frozen=True)
class CrossValResult:
    """Stratified k-fold accuracy."""

    mean: float
    stdev: float
    folds: tuple[float, ...]


def cross_validate(
    examples: Sequence[tuple[FeatureVector, int]],
    k: int = 10,
    config: TrainConfig | None = None,
    seed: int = 0,
) -> CrossValResult:
    """Stratified k-fold accuracy of the credibility classifier.

    Each class is shuffled with the given seed and dealt round-robin
    into k folds, so class balance carries into every fold.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    labels = np.array([lab for _, lab in examples])
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    if min(pos.size, neg.size) < k:
        raise ValueError(
            f"need at least {k} examples of each class for {k} folds, "
            f"got {pos.size} positive / {neg.size} negative"
        )
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(examples), dtype=np.int64)
    for cls_idx in (pos, neg):
        shuffled = rng.permutation(cls_idx)
        fold_of[shuffled] = np.arange(shuffled.size) % k
    accuracies = []
    for fold in range(k):
        train = [examples[i] for i in np.flatnonzero(fold_of != fold)]
        test = [examples[i] for i in np.flatnonzero(fold_of == fold)]
        model = train_csvm(train, config)
        correct = sum(1 for vec, lab in test if predict(model, vec)[0] == lab)
        accuracies.append(correct / len(test))
    folds = tuple(accuracies)
    return CrossValResult(
        mean=float(np.mean(folds)), stdev=float(np.std(folds)), folds=folds
    )


@dataclass(frozen=True)
class ItemRanking:
    """Credibility-filtered item scores.

    score = mean rating over reviews the classifier accepts as
    credible; an item with no accepted review scores 0.
    """

    scores: dict[str, float]
    credible_counts: dict[str, int]
    review_counts: dict[str, int]


def rank_items(
    corpus: Corpus,
    classifier: LinearModel,
    pipeline: FeaturePipeline,
    jobs: int = 1,
) -> ItemRanking:
    """Score every item by the mean rating of its credible reviews."""
    vectors = pipeline.extract(corpus, jobs=jobs)
    accepted = [predict(classifier, vec)[0] == 1 for vec in vectors]
    return _rank_from_accepts(corpus, accepted)


def _rank_from_accepts(corpus: Corpus, accepted: Sequence[bool]) -> ItemRanking:
    scores: dict[str, float] = {}
    credible_counts: dict[str, int] = {}
    review_counts: dict[str, int] = {}
    for item_id, positions in corpus.by_item.items():
        kept = [corpus.reviews[p].rating for p in positions if accepted[p]]
        review_counts[item_id] = len(positions)
        credible_counts[item_id] = len(kept)
        scores[item_id] = sum(kept) / len(kept) if kept else 0.0
    return ItemRanking(scores, credible_counts, review_counts)


@dataclass(frozen=True)
class SweepResult:
    """Negative-cost sweep outcome.

    rows hold (c_neg, tau_m, fraction classified non-credible) in grid
    order; best_cneg is the smallest grid value attaining the maximum
    tau_m.
    """

    best_cneg: float
    rows: tuple[tuple[float, float, float], ...]


def _filtered_scores(
    validation: Mapping[str, Sequence[tuple[FeatureVector, int]]],
    model: LinearModel,
) -> tuple[dict[str, float], float]:
    scores: dict[str, float] = {}
    flagged = 0
    total = 0
    for item_id in sorted(validation):
        kept = []
        for vec, rating in validation[item_id]:
            total += 1
            if predict(model, vec)[0] == 1:
                kept.append(rating)
            else:
                flagged += 1
        scores[item_id] = sum(kept) / len(kept) if kept else 0.0
    return scores, (flagged / total if total else 0.0)


def sweep_cneg(
    train_examples: Sequence[tuple[FeatureVector, int]],
    validation: Mapping[str, Sequence[tuple[FeatureVector, int]]],
    reference_ranks: Mapping[str, float],
    grid: Sequence[float],
    config: TrainConfig | None = None,
) -> SweepResult:
    """Retrain across a grid of negative-class costs and score each.

    validation maps item_id -> (vector, rating) pairs; reference_ranks
    uses the smaller-is-better convention. For every grid value the
    classifier is retrained, validation items are re-scored by filtered
    mean rating, and tau_m against the reference is recorded.
    """
    if config is None:
        config = TrainConfig()
    grid = [float(c) for c in grid]
    if not grid:
        raise ValueError("empty cost grid")
    missing = [i for i in validation if i not in reference_ranks]
    if missing:
        raise ValueError(f"validation items missing from reference: {sorted(missing)[:5]}")
    item_order = sorted(validation)
    reference = np.array([-float(reference_ranks[i]) for i in item_order])
    rows = []
    for c_neg in grid:
        model = train_csvm(train_examples, replace(config, c_neg=c_neg))
        scores, fraction = _filtered_scores(validation, model)
        candidate = np.array([scores[i] for i in item_order])
        tau = kendall_tau_m(candidate, reference).tau
        rows.append((c_neg, tau, fraction))
    best_cneg = rows[0][0]
    best_tau = rows[0][1]
    for c_neg, tau, _ in rows[1:]:
        if tau > best_tau:
            best_cneg, best_tau = c_neg, tau
    return SweepResult(best_cneg=best_cneg, rows=tuple(rows))


def long_tail_report(
    scores: Mapping[str, float],
    reference_ranks: Mapping[str, float],
    review_counts: Mapping[str, int],
    thresholds: Sequence[float],
) -> list[tuple[float, int, float | None]]:
    """tau_m per review-count stratum.

    Each row is (threshold, n_items, tau_m) over items with at most
    threshold reviews (math.inf for the overall row); strata with fewer
    than two items report None.
    """
    missing = [i for i in scores if i not in reference_ranks]
    if missing:
        raise ValueError(f"scored items missing from reference: {sorted(missing)[:5]}")
    rows: list[tuple[float, int, float | None]] = []
    for threshold in thresholds:
        ids = sorted(i for i in scores if review_counts[i] <= threshold)
        if len(ids) < 2:
            rows.append((float(threshold), len(ids), None))
            continue
        candidate = np.array([scores[i] for i in ids])
        reference = np.array([-float(reference_ranks[i]) for i in ids])
        rows.append((float(threshold), len(ids), kendall_tau_m(candidate, reference).tau))
    return rows
