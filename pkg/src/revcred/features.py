"""Feature extraction: language, consistency, and behavioral blocks.

Every review maps to one sparse vector over a fixed feature space with
three contiguous blocks:

* language: one feature per vocabulary entry (unigrams and adjacent
  bigrams), valued 1/raw_length when present (presence, not counts,
  normalized by the pre-stopword token count);
* consistency: temporal burstiness, divergence of the review's
  facet-sentiment profile from its item's aggregate profile, the
  flattened profile itself, the element-wise gap between the rating's
  implied label distribution and the text-inferred one, and the
  inferred distribution;
* behavioral: user and item rating statistics, with an extended tier
  adding engagement counters (friends, check-in, elite, helpful votes).

Burstiness of review i against its item's timestamps is
sum_{j != i} 1 / (1 + exp(t_i - t_j)) with time in days. The formula is
asymmetric (later-posted peers contribute nearly 1); a symmetric
|t_i - t_j| variant is available via FeatureConfig. The implementation
evaluates the logistic so that the two directed terms of any pair sum
to exactly 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Review, TokenSeq, TokenizeConfig, Vocabulary, ngram_entries, tokenize
from .errors import DataError
from .jst import JstModel, ReviewFacetProfile, infer_review_facets

__all__ = [
    "FeatureConfig",
    "FeaturePipeline",
    "FeatureSpace",
    "FeatureVector",
    "ItemContext",
    "UserContext",
    "assemble",
    "behavioral_features",
    "build_item_contexts",
    "build_user_contexts",
    "burstiness",
    "consistency_features",
    "js_divergence",
    "language_features",
    "rating_deviation",
    "rating_to_distribution",
    "read_feature_matrix",
    "read_feature_names",
    "write_feature_matrix",
    "write_feature_names",
]

NGRAM_PREFIX = "ngram:"
FACET_CELL_PREFIX = "facet_dist:"

BEHAVIORAL_MINUS_NAMES = (
    "user_post_count",
    "review_length",
    "user_mean_dev",
    "user_median_dev",
    "user_rating_mean",
    "user_rating_var",
    "user_rating_skew",
    "item_mean_dev",
    "item_median_dev",
    "item_rating_mean",
    "item_rating_var",
    "item_rating_skew",
)
BEHAVIORAL_PLUS_EXTRA = ("friends_count", "checked_in", "elite", "helpful_votes")


@dataclass(frozen=True)
class FeatureConfig:
    """Extraction settings.

    tier selects the behavioral block ("minus" or "plus").
    symmetric_burstiness switches the burstiness kernel to |t_i - t_j|.
    leave_one_out_item_profile removes the review under test from its
    item's aggregate profile before the divergence is computed.
    include_item_jsd drops the divergence feature when False (ablation).
    """

    r_max: int = 5
    tier: str = "minus"
    symmetric_burstiness: bool = False
    leave_one_out_item_profile: bool = False
    include_item_jsd: bool = True
    pi_aggregation: str = "joint"

    def __post_init__(self):
        if self.tier not in ("minus", "plus"):
            raise ValueError(f"tier must be 'minus' or 'plus', got {self.tier!r}")
        if self.r_max < 2:
            raise ValueError(f"r_max must be >= 2, got {self.r_max}")


class FeatureSpace:
    """Ordered, named feature universe with block spans."""

    def __init__(self, names: Sequence[str], blocks: dict[str, slice]):
        names = tuple(names)
        if len(set(names)) != len(names):
            seen = set()
            dup = next(n for n in names if n in seen or seen.add(n))
            raise ValueError(f"duplicate feature name {dup!r}")
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}
        self.blocks = dict(blocks)

    def __len__(self) -> int:
        return len(self.names)

    def block_names(self, block: str) -> tuple[str, ...]:
        return self.names[self.blocks[block]]

    @classmethod
    def build(
        cls,
        vocab: Vocabulary,
        n_facets: int,
        n_labels: int,
        tier: str = "minus",
        include_item_jsd: bool = True,
    ) -> "FeatureSpace":
        """Lay out the language, consistency, and behavioral blocks.

        Facet-cell names embed the facet count so that models trained
        with different facet dimensions share no facet-cell names: that
        makes by-name domain transfer drop them automatically.
        """
        lang = [NGRAM_PREFIX + e for e in vocab.entries]
        consistency = ["burstiness"]
        if include_item_jsd:
            consistency.append("item_jsd")
        consistency.extend(
            f"{FACET_CELL_PREFIX}K{n_facets}:k{k}:l{j}"
            for k in range(n_facets)
            for j in range(n_labels)
        )
        consistency.extend(f"rating_dev:l{j}" for j in range(n_labels))
        consistency.extend(f"inferred_rating:l{j}" for j in range(n_labels))
        behavioral = list(BEHAVIORAL_MINUS_NAMES)
        if tier == "plus":
            behavioral.extend(BEHAVIORAL_PLUS_EXTRA)
        elif tier != "minus":
            raise ValueError(f"tier must be 'minus' or 'plus', got {tier!r}")
        names = lang + consistency + behavioral
        n_lang = len(lang)
        n_cons = len(consistency)
        blocks = {
            "language": slice(0, n_lang),
            "consistency": slice(n_lang, n_lang + n_cons),
            "behavioral": slice(n_lang + n_cons, len(names)),
        }
        return cls(names, blocks)


class FeatureVector:
    """Sparse vector over a FeatureSpace: sorted indices, aligned values."""

    __slots__ = ("space", "indices", "values")

    def __init__(self, space: FeatureSpace, indices: np.ndarray, values: np.ndarray):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be aligned 1-D arrays")
        if indices.size:
            if indices.min() < 0 or indices.max() >= len(space):
                raise ValueError("feature index out of range")
            if np.any(np.diff(indices) <= 0):
                order = np.argsort(indices, kind="stable")
                indices = indices[order]
                values = values[order]
                if np.any(np.diff(indices) == 0):
                    raise ValueError("duplicate feature index")
        self.space = space
        self.indices = indices
        self.values = values

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.space.names[i] for i in self.indices)

    def get(self, name: str, default: float = 0.0) -> float:
        pos = self.space.index.get(name)
        if pos is None:
            return default
        at = np.searchsorted(self.indices, pos)
        if at < self.indices.size and self.indices[at] == pos:
            return float(self.values[at])
        return default

    def items(self) -> Iterable[tuple[str, float]]:
        for i, v in zip(self.indices, self.values):
            yield self.space.names[i], float(v)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(len(self.space))
        dense[self.indices] = self.values
        return dense

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.space.names == other.space.names
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"FeatureVector({self.indices.size} of {len(self.space)} features)"


def language_features(tokens: TokenSeq, vocab: Vocabulary) -> dict[str, float]:
    """In-vocabulary unigrams and adjacent bigrams, each valued
    1/raw_length (presence semantics: repeats do not stack)."""
    if not tokens.tokens:
        return {}
    weight = 1.0 / tokens.raw_length
    present = {}
    for entry in ngram_entries(tokens.tokens):
        if entry in vocab.index:
            present[entry] = weight
    return present


def rating_to_distribution(rating: int, r_max: int = 5) -> np.ndarray:
    """Map a star rating to a [positive, negative] mass pair."""
    if r_max < 2:
        raise ValueError(f"r_max must be >= 2, got {r_max}")
    if not isinstance(rating, (int, np.integer)) or isinstance(rating, bool):
        raise ValueError(f"rating must be an integer, got {rating!r}")
    if not 1 <= rating <= r_max:
        raise ValueError(f"rating {rating} out of range 1..{r_max}")
    positive = (rating - 1) / (r_max - 1)
    return np.array([positive, 1.0 - positive])


def rating_deviation(pi_rating: np.ndarray, pi_inferred: np.ndarray) -> np.ndarray:
    """Element-wise absolute gap between two label distributions."""
    pi_rating = np.asarray(pi_rating, dtype=np.float64)
    pi_inferred = np.asarray(pi_inferred, dtype=np.float64)
    if pi_rating.shape != pi_inferred.shape:
        raise ValueError(
            f"distribution lengths differ: {pi_rating.shape} vs {pi_inferred.shape}"
        )
    return np.abs(pi_rating - pi_inferred)


def _logistic_term(delta: float) -> float:
    """1 / (1 + exp(delta)), evaluated so term(d) + term(-d) == 1.0."""
    if delta >= 0:
        if delta > 700.0:
            return 0.0
        return 1.0 / (1.0 + math.exp(delta))
    return 1.0 - _logistic_term(-delta)


def burstiness(
    t_i: float, item_timestamps: Sequence[float], symmetric: bool = False
) -> float:
    """Temporal burstiness of one review against its item's timeline.

    Sums 1 / (1 + exp(t_i - t_j)) over the item's other reviews, with
    one occurrence of t_i excluded as the review itself. Timestamps are
    in days. With symmetric=True the exponent is |t_i - t_j|, which
    scores both members of a close pair equally.
    """
    t_i = float(t_i)
    seen_self = False
    acc = 0.0
    for t_j in item_timestamps:
        t_j = float(t_j)
        if not seen_self and t_j == t_i:
            seen_self = True
            continue
        delta = t_i - t_j
        if symmetric:
            delta = abs(delta)
        acc += _logistic_term(delta)
    if not seen_self:
        raise ValueError("t_i must be one of item_timestamps")
    return acc


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence in bits (base-2 logs), in [0, 1].

    Both inputs must be same-length distributions summing to 1 within
    1e-6; zero entries contribute nothing (0 * log 0 = 0).
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.shape != q.shape:
        raise ValueError(f"distribution lengths differ: {p.size} vs {q.size}")
    for name, dist in (("first", p), ("second", q)):
        if not np.all(np.isfinite(dist)):
            raise ValueError(f"{name} distribution has non-finite entries")
        if np.any(dist < -1e-12):
            raise ValueError(f"{name} distribution has negative entries")
        if abs(dist.sum() - 1.0) > 1e-6:
            raise ValueError(
                f"{name} distribution sums to {dist.sum():.8f}, expected 1 within 1e-6"
            )
    p = np.clip(p, 0.0, None)
    q = np.clip(q, 0.0, None)
    m = 0.5 * (p + q)

    def _kl(a: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

    return max(0.0, 0.5 * _kl(p) + 0.5 * _kl(q))


def _moments(values: np.ndarray) -> tuple[float, float, float]:
    """Population mean, variance, and skewness (0 for constant series)."""
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    centered = values - mean
    var = float(np.mean(centered**2))
    if var == 0.0:
        return mean, 0.0, 0.0
    skew = float(np.mean(centered**3) / var**1.5)
    return mean, var, skew


@dataclass(frozen=True)
class UserContext:
    """Rating behavior of one user across the corpus."""

    user_id: str
    post_count: int
    rating_mean: float
    rating_median: float
    rating_moments: tuple[float, float, float]
    friends_count: int | None = None
    elite: bool | None = None


@dataclass(frozen=True)
class ItemContext:
    """Rating pattern, timeline, and aggregate profile of one item."""

    item_id: str
    n_reviews: int
    timestamps: np.ndarray
    rating_mean: float
    rating_median: float
    rating_moments: tuple[float, float, float]
    raw_profile: np.ndarray = field(default=None)

    def profile(self, exclude: ReviewFacetProfile | None = None) -> np.ndarray:
        """Normalized aggregate profile, optionally excluding one review."""
        raw = self.raw_profile
        if exclude is not None:
            raw = raw - exclude.raw_phi_prime
        total = raw.sum()
        if total <= 0:
            return np.full(raw.shape, 1.0 / raw.size)
        return raw / total


def build_user_contexts(corpus: Corpus) -> dict[str, UserContext]:
    """User rating statistics over the whole corpus, review included."""
    contexts = {}
    for user_id, positions in corpus.by_user.items():
        reviews = [corpus.reviews[i] for i in positions]
        ratings = np.array([r.rating for r in reviews], dtype=np.float64)
        friends = next((r.friends_count for r in reviews if r.friends_count is not None), None)
        elite = next((r.elite for r in reviews if r.elite is not None), None)
        contexts[user_id] = UserContext(
            user_id=user_id,
            post_count=len(reviews),
            rating_mean=float(ratings.mean()),
            rating_median=float(np.median(ratings)),
            rating_moments=_moments(ratings),
            friends_count=friends,
            elite=elite,
        )
    return contexts


def build_item_contexts(
    corpus: Corpus,
    model: JstModel | None = None,
    profiles: Sequence[ReviewFacetProfile] | None = None,
) -> dict[str, ItemContext]:
    """Item statistics; pass per-review profiles (aligned with corpus
    order) to include aggregate facet profiles."""
    contexts = {}
    K = model.n_facets if model is not None else 1
    L = model.n_labels if model is not None else 1
    for item_id, positions in corpus.by_item.items():
        reviews = [corpus.reviews[i] for i in positions]
        ratings = np.array([r.rating for r in reviews], dtype=np.float64)
        raw = np.zeros((K, L))
        if profiles is not None:
            for pos in positions:
                raw += profiles[pos].raw_phi_prime
        contexts[item_id] = ItemContext(
            item_id=item_id,
            n_reviews=len(reviews),
            timestamps=np.array([r.timestamp for r in reviews], dtype=np.float64),
            rating_mean=float(ratings.mean()),
            rating_median=float(np.median(ratings)),
            rating_moments=_moments(ratings),
            raw_profile=raw,
        )
    return contexts


def consistency_features(
    model: JstModel,
    review: Review,
    tokens: TokenSeq,
    item_ctx: ItemContext,
    config: FeatureConfig | None = None,
    profile: ReviewFacetProfile | None = None,
) -> np.ndarray:
    """The consistency block for one review, in feature-space order.

    Layout: [burstiness, profile-vs-item divergence (unless ablated),
    flattened facet-sentiment profile (K*L), |rating distribution -
    inferred distribution| (L), inferred distribution (L)].
    """
    if config is None:
        config = FeatureConfig()
    if profile is None:
        profile = infer_review_facets(model, tokens, pi_aggregation=config.pi_aggregation)
    L = model.n_labels
    burst = burstiness(
        review.timestamp, item_ctx.timestamps, symmetric=config.symmetric_burstiness
    )
    values = [burst]
    if config.include_item_jsd:
        item_profile = item_ctx.profile(
            exclude=profile if config.leave_one_out_item_profile else None
        )
        values.append(js_divergence(profile.phi_prime.reshape(-1), item_profile.reshape(-1)))
    if L == 2:
        pi_rating = rating_to_distribution(review.rating, config.r_max)
    elif L == 1:
        pi_rating = np.array([1.0])
    else:
        raise ValueError(f"rating distribution is defined for 1 or 2 labels, model has {L}")
    deviation = rating_deviation(pi_rating, profile.pi_prime)
    return np.concatenate([values, profile.phi_prime.reshape(-1), deviation, profile.pi_prime])


def behavioral_features(
    review: Review,
    tokens: TokenSeq,
    user_ctx: UserContext,
    item_ctx: ItemContext,
    tier: str = "minus",
) -> np.ndarray:
    """The behavioral block for one review.

    The base tier uses rating statistics only; the "plus" tier appends
    friends_count, checked_in, elite, helpful_votes and raises DataError
    when any of those is missing from the record.
    """
    values = [
        float(user_ctx.post_count),
        float(tokens.raw_length),
        abs(review.rating - user_ctx.rating_mean),
        abs(review.rating - user_ctx.rating_median),
        *user_ctx.rating_moments,
        abs(review.rating - item_ctx.rating_mean),
        abs(review.rating - item_ctx.rating_median),
        *item_ctx.rating_moments,
    ]
    if tier == "plus":
        missing = []
        if user_ctx.friends_count is None:
            missing.append("friends_count")
        if review.checked_in is None:
            missing.append("checked_in")
        if user_ctx.elite is None:
            missing.append("elite")
        if review.helpful_votes is None:
            missing.append("helpful_votes")
        if missing:
            raise DataError(
                f"review {review.review_id!r}: extended behavioral tier needs "
                f"missing field(s) {missing}"
            )
        values.extend(
            [
                float(user_ctx.friends_count),
                1.0 if review.checked_in else 0.0,
                1.0 if user_ctx.elite else 0.0,
                float(review.helpful_votes),
            ]
        )
    elif tier != "minus":
        raise ValueError(f"tier must be 'minus' or 'plus', got {tier!r}")
    return np.array(values, dtype=np.float64)


def assemble(
    space: FeatureSpace,
    language: dict[str, float],
    consistency: np.ndarray,
    behavioral: np.ndarray,
) -> FeatureVector:
    """Combine the three blocks into one sparse vector.

    Exact zeros are dropped; the stored form is canonical, so the same
    inputs always produce identical vectors.
    """
    indices: list[int] = []
    values: list[float] = []
    for entry, value in language.items():
        pos = space.index.get(NGRAM_PREFIX + entry)
        if pos is None:
            raise ValueError(f"language entry {entry!r} is not in the feature space")
        if value != 0.0:
            indices.append(pos)
            values.append(value)
    for block, arr in (("consistency", consistency), ("behavioral", behavioral)):
        span = space.blocks[block]
        width = span.stop - span.start
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (width,):
            raise ValueError(
                f"{block} block has {arr.size} values, feature space expects {width}"
            )
        for off, value in enumerate(arr):
            if value != 0.0:
                indices.append(span.start + off)
                values.append(float(value))
    vec = FeatureVector(space, np.array(indices, dtype=np.int64), np.array(values))
    if not np.all(np.isfinite(vec.values)):
        raise ValueError("non-finite feature value")
    return vec


class FeaturePipeline:
    """End-to-end extraction: corpus -> one sparse vector per review.

    Tokenization, user and item contexts, and per-review profiles are
    computed once per corpus. Vectors come back in corpus order.
    """

    def __init__(
        self,
        model: JstModel,
        vocab: Vocabulary,
        config: FeatureConfig | None = None,
        tokenize_config: TokenizeConfig | None = None,
    ):
        self.model = model
        self.vocab = vocab
        self.config = config if config is not None else FeatureConfig()
        self.tokenize_config = tokenize_config if tokenize_config is not None else TokenizeConfig()
        self.space = FeatureSpace.build(
            vocab,
            model.n_facets,
            model.n_labels,
            tier=self.config.tier,
            include_item_jsd=self.config.include_item_jsd,
        )

    def tokenized(self, corpus: Corpus) -> list[TokenSeq]:
        return [tokenize(r.text, self.tokenize_config) for r in corpus.reviews]

    def extract(self, corpus: Corpus, jobs: int = 1) -> list[FeatureVector]:
        """Feature vectors for every review, in corpus order.

        jobs > 1 splits the per-review assembly across worker threads;
        results are identical to the serial path and keep corpus order.
        """
        token_seqs = self.tokenized(corpus)
        profiles = [
            infer_review_facets(self.model, seq, pi_aggregation=self.config.pi_aggregation)
            for seq in token_seqs
        ]
        user_ctxs = build_user_contexts(corpus)
        item_ctxs = build_item_contexts(corpus, self.model, profiles)

        def one(pos: int) -> FeatureVector:
            review = corpus.reviews[pos]
            seq = token_seqs[pos]
            profile = profiles[pos]
            item_ctx = item_ctxs[review.item_id]
            lang = language_features(seq, self.vocab)
            cons = consistency_features(
                self.model, review, seq, item_ctx, self.config, profile=profile
            )
            behav = behavioral_features(
                review, seq, user_ctxs[review.user_id], item_ctx, tier=self.config.tier
            )
            return assemble(self.space, lang, cons, behav)

        if jobs > 1 and len(corpus) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(one, range(len(corpus))))
        return [one(pos) for pos in range(len(corpus))]


def write_feature_matrix(
    path: str | Path,
    review_ids: Sequence[str],
    vectors: Sequence[FeatureVector],
    labels: Sequence[int | None] | None = None,
) -> None:
    """Write sparse vectors as text: ``review_id [+1|-1] idx:value ...``."""
    if labels is not None and len(labels) != len(vectors):
        raise ValueError("labels and vectors length mismatch")
    with Path(path).open("w", encoding="utf-8") as fh:
        for row, (rid, vec) in enumerate(zip(review_ids, vectors)):
            parts = [rid]
            if labels is not None and labels[row] is not None:
                parts.append(f"{labels[row]:+d}")
            parts.extend(
                f"{int(i)}:{float(v)!r}" for i, v in zip(vec.indices, vec.values)
            )
            fh.write(" ".join(parts))
            fh.write("\n")


def write_feature_names(path: str | Path, space: FeatureSpace) -> None:
    """Sidecar name index: ``idx<TAB>name<TAB>block`` per line."""
    block_of = {}
    for block, span in space.blocks.items():
        for i in range(span.start, span.stop):
            block_of[i] = block
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, name in enumerate(space.names):
            fh.write(f"{i}\t{name}\t{block_of.get(i, '')}\n")


def read_feature_names(path: str | Path) -> FeatureSpace:
    """Rebuild a FeatureSpace from a sidecar written by write_feature_names."""
    names: list[str] = []
    blocks_list: list[str] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}: line {line_no}: expected 'idx\\tname\\tblock'")
        idx, name, block = parts
        if int(idx) != line_no - 1:
            raise DataError(f"{path}: line {line_no}: indices must be consecutive from 0")
        names.append(name)
        blocks_list.append(block)
    blocks: dict[str, slice] = {}
    start = 0
    for i in range(len(names) + 1):
        if i == len(names) or (i > 0 and blocks_list[i] != blocks_list[i - 1]):
            block = blocks_list[start] if start < len(names) else ""
            if block:
                if block in blocks:
                    raise DataError(f"{path}: block {block!r} is not contiguous")
                blocks[block] = slice(start, i)
            start = i
    return FeatureSpace(names, blocks)


def read_feature_matrix(
    path: str | Path, names_path: str | Path
) -> tuple[list[str], list[FeatureVector], list[int | None]]:
    """Read back a sparse matrix and its name sidecar."""
    space = read_feature_names(names_path)
    review_ids: list[str] = []
    vectors: list[FeatureVector] = []
    labels: list[int | None] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        rid = parts[0]
        rest = parts[1:]
        label: int | None = None
        if rest and rest[0] in ("+1", "-1"):
            label = int(rest[0])
            rest = rest[1:]
        indices = []
        values = []
        for chunk in rest:
            try:
                idx_s, val_s = chunk.split(":", 1)
                indices.append(int(idx_s))
                values.append(float(val_s))
            except ValueError:
                raise DataError(
                    f"{path}: line {line_no}: malformed entry {chunk!r}"
                ) from None
        try:
            vec = FeatureVector(space, np.array(indices, dtype=np.int64), np.array(values))
        except ValueError as exc:
            raise DataError(f"{path}: line {line_no}: {exc}") from None
        review_ids.append(rid)
        vectors.append(vec)
        labels.append(label)
    return review_ids, vectors, labels
