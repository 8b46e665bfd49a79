"""Synthetic credibility corpora with planted structure.

The generator plants K_true disjoint facet word lists plus shared
positive/negative sentiment pools (both drawn from the built-in
lexicon so label seeding works on generated text). Credible reviews
draw their rating from the item's latent quality, their sentiment from
the rating, and their words from the planted facet-sentiment word
distributions. Non-credible reviews follow one of four archetypes:

* mismatch: extreme rating, text of the opposite polarity;
* off_facet: polarity-consistent text about facets the item is not
  about;
* burst: posted inside a narrow window at the start of the item's
  timeline with uniform extreme ratings (promotion for low-quality
  items, demotion for high-quality ones) and short generic text;
* extreme: an extreme rating carried by one to three sentiment words
  and an exclamation run.

Each review flips non-credible independently with probability
spam_rate; archetypes are drawn from the configured weights. The
sidecar records labels, archetypes, item qualities, reference ranks
(1 = best quality), and the planted word tensor, and generation is
byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import DEFAULT_STOPWORDS, Corpus, Review, tokenize
from .lexicon import builtin_lexicon

__all__ = ["SynthSpec", "default_facet_words", "generate", "load_spec", "write_truth"]

ARCHETYPES = ("mismatch", "off_facet", "burst", "extreme")

_FACET_WORD_SETS = (
    ("room", "bed", "bathroom", "shower", "pillow", "mattress", "suite",
     "towel", "linen", "carpet"),
    ("breakfast", "coffee", "pizza", "burger", "salad", "dessert", "menu",
     "pasta", "steak", "sauce"),
    ("staff", "waiter", "manager", "reception", "desk", "checkout",
     "reservation", "concierge", "housekeeping", "bellhop"),
    ("downtown", "airport", "beach", "parking", "subway", "neighborhood",
     "street", "station", "plaza", "riverfront"),
    ("price", "rate", "fee", "deal", "discount", "charge", "bill", "budget",
     "cost", "surcharge"),
    ("wifi", "pool", "gym", "spa", "lobby", "elevator", "balcony", "minibar",
     "television", "aircon"),
)

_POSITIVE_POOL = (
    "great", "excellent", "amazing", "wonderful", "fantastic", "perfect",
    "delicious", "friendly", "clean", "comfortable", "lovely", "awesome",
    "helpful", "nice", "fresh", "enjoyed", "recommend", "superb",
    "outstanding", "pleasant",
)
_NEGATIVE_POOL = (
    "terrible", "awful", "horrible", "bad", "worst", "dirty", "rude",
    "disappointing", "bland", "slow", "filthy", "disgusting", "overpriced",
    "broken", "stale", "noisy", "mediocre", "poor", "gross", "unfriendly",
)

# Spread reviews start two days after the burst window so burst members
# sit strictly earlier than every ordinary review of their item.
_BURST_WINDOW = 0.1
_SPREAD_START = 2.0


def default_facet_words(k: int) -> tuple[tuple[str, ...], ...]:
    """The first k built-in facet word lists."""
    if k > len(_FACET_WORD_SETS):
        raise ValueError(
            f"only {len(_FACET_WORD_SETS)} built-in facet word lists, need {k}"
        )
    return _FACET_WORD_SETS[:k]


def _default_weights() -> dict[str, float]:
    return {"mismatch": 0.25, "off_facet": 0.25, "burst": 0.25, "extreme": 0.25}


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings; see the module docstring for semantics."""

    n_items: int = 200
    n_users: int = 300
    reviews_per_item: tuple[int, int] = (8, 12)
    k_true: int = 3
    spam_rate: float = 0.25
    archetype_weights: dict[str, float] = field(default_factory=_default_weights)
    facet_words: tuple[tuple[str, ...], ...] | None = None
    positive_pool: tuple[str, ...] = _POSITIVE_POOL
    negative_pool: tuple[str, ...] = _NEGATIVE_POOL
    facet_word_mass: float = 0.3
    review_length_mean: float = 30.0
    time_span_days: float = 365.0
    seed: int = 0

    def __post_init__(self):
        if self.n_items < 1 or self.n_users < 1:
            raise ValueError("n_items and n_users must be >= 1")
        lo, hi = self.reviews_per_item
        if not 1 <= lo <= hi:
            raise ValueError(f"bad reviews_per_item range {self.reviews_per_item}")
        if not 0.0 <= self.spam_rate <= 1.0:
            raise ValueError(f"spam_rate must be in [0, 1], got {self.spam_rate}")
        if self.k_true < 1:
            raise ValueError("k_true must be >= 1")
        if self.facet_words is None:
            object.__setattr__(self, "facet_words", default_facet_words(self.k_true))
        if len(self.facet_words) != self.k_true:
            raise ValueError(
                f"facet_words has {len(self.facet_words)} lists, k_true is {self.k_true}"
            )
        unknown = set(self.archetype_weights) - set(ARCHETYPES)
        if unknown:
            raise ValueError(f"unknown archetypes {sorted(unknown)}")
        if any(w < 0 for w in self.archetype_weights.values()):
            raise ValueError("archetype weights must be >= 0")
        if self.spam_rate > 0:
            total = sum(self.archetype_weights.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"archetype weights sum to {total}, expected 1")
            if self.archetype_weights.get("off_facet", 0.0) > 0 and self.k_true < 2:
                raise ValueError("off_facet archetype needs k_true >= 2")
        if not 0.0 < self.facet_word_mass < 1.0:
            raise ValueError("facet_word_mass must be in (0, 1)")
        if self.review_length_mean <= 0 or self.time_span_days <= _SPREAD_START:
            raise ValueError("review_length_mean and time_span_days out of range")
        self._check_words()

    def _check_words(self) -> None:
        lexicon = builtin_lexicon()
        if not self.positive_pool or not self.negative_pool:
            raise ValueError("sentiment pools must be non-empty")
        bad = [w for w in self.positive_pool if w not in lexicon.positive]
        bad += [w for w in self.negative_pool if w not in lexicon.negative]
        if bad:
            raise ValueError(
                f"sentiment pool words missing from the built-in lexicon: {bad[:5]}"
            )
        pools = set(self.positive_pool) | set(self.negative_pool)
        seen: set[str] = set()
        for words in self.facet_words:
            if not words:
                raise ValueError("facet word lists must be non-empty")
            for word in words:
                if word in seen:
                    raise ValueError(f"facet word {word!r} appears in two facets")
                seen.add(word)
        if seen & pools:
            raise ValueError(
                f"facet words collide with sentiment pools: {sorted(seen & pools)[:5]}"
            )
        for word in sorted(seen | pools):
            if word in DEFAULT_STOPWORDS:
                raise ValueError(f"planted word {word!r} is a stopword")
            seq = tokenize(word)
            if seq.tokens != (word,):
                raise ValueError(f"planted word {word!r} does not survive tokenization")

    def vocabulary_words(self) -> tuple[str, ...]:
        """All planted words: facet lists in order, then the two pools."""
        words: list[str] = []
        for facet in self.facet_words:
            words.extend(facet)
        words.extend(self.positive_pool)
        words.extend(self.negative_pool)
        return tuple(words)

    def phi_true(self) -> np.ndarray:
        """Planted word tensor (k_true x 2 x V over vocabulary_words)."""
        words = self.vocabulary_words()
        pos = {w: i for i, w in enumerate(words)}
        K = self.k_true
        phi = np.zeros((K, 2, len(words)))
        for k, facet in enumerate(self.facet_words):
            share = self.facet_word_mass / len(facet)
            for w in facet:
                phi[k, 0, pos[w]] = share
                phi[k, 1, pos[w]] = share
        for w in self.positive_pool:
            phi[:, 0, pos[w]] = (1.0 - self.facet_word_mass) / len(self.positive_pool)
        for w in self.negative_pool:
            phi[:, 1, pos[w]] = (1.0 - self.facet_word_mass) / len(self.negative_pool)
        return phi


def load_spec(path: str | Path) -> SynthSpec:
    """Read a SynthSpec from a JSON file (keys match the field names)."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: spec file must hold a JSON object")
    kwargs = dict(raw)
    if "reviews_per_item" in kwargs:
        kwargs["reviews_per_item"] = tuple(kwargs["reviews_per_item"])
    if kwargs.get("facet_words") is not None:
        kwargs["facet_words"] = tuple(tuple(ws) for ws in kwargs["facet_words"])
    for pool in ("positive_pool", "negative_pool"):
        if pool in kwargs:
            kwargs[pool] = tuple(kwargs[pool])
    return SynthSpec(**kwargs)


def _positive_prob(rating: int) -> float:
    """Probability that a token carries positive sentiment."""
    return 0.1 + 0.2 * (rating - 1)


class _Generator:
    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.pos_pool = list(spec.positive_pool)
        self.neg_pool = list(spec.negative_pool)
        self.facets = [list(ws) for ws in spec.facet_words]

    def _draw_words(self, n: int, rating: int, facet_probs: np.ndarray) -> list[str]:
        rng = self.rng
        p_pos = _positive_prob(rating)
        words = []
        for _ in range(n):
            label = 0 if rng.random() < p_pos else 1
            facet = int(rng.choice(len(self.facets), p=facet_probs))
            if rng.random() < self.spec.facet_word_mass:
                pool = self.facets[facet]
            else:
                pool = self.pos_pool if label == 0 else self.neg_pool
            words.append(pool[int(rng.integers(len(pool)))])
        return words

    def _length(self, mean: float) -> int:
        return int(np.clip(self.rng.poisson(mean), 5, 100))

    def _item_theta(self, main_facet: int) -> np.ndarray:
        K = self.spec.k_true
        if K == 1:
            return np.array([1.0])
        theta = np.full(K, 0.2 / (K - 1))
        theta[main_facet] = 0.8
        return theta

    def _alien_theta(self, main_facet: int) -> np.ndarray:
        K = self.spec.k_true
        theta = np.full(K, 1.0 / (K - 1))
        theta[main_facet] = 0.0
        return theta

    def generate(self) -> tuple[Corpus, dict]:
        spec = self.spec
        rng = self.rng
        archetype_names = list(ARCHETYPES)
        archetype_p = np.array(
            [spec.archetype_weights.get(a, 0.0) for a in archetype_names]
        )
        reviews: list[Review] = []
        labels: dict[str, str] = {}
        archetypes: dict[str, str | None] = {}
        qualities: dict[str, float] = {}
        counter = 0
        lo, hi = spec.reviews_per_item
        for item_idx in range(spec.n_items):
            item_id = f"i{item_idx:04d}"
            quality = float(rng.uniform(1.0, 5.0))
            qualities[item_id] = quality
            main_facet = int(rng.integers(spec.k_true))
            item_theta = self._item_theta(main_facet)
            burst_rating = 5 if quality <= 3.0 else 1
            n_rev = int(rng.integers(lo, hi + 1))
            for _ in range(n_rev):
                review_id = f"r{counter:05d}"
                counter += 1
                user_id = f"u{int(rng.integers(spec.n_users)):04d}"
                spam = bool(rng.random() < spec.spam_rate)
                archetype: str | None = None
                if spam:
                    archetype = archetype_names[
                        int(rng.choice(len(archetype_names), p=archetype_p))
                    ]
                if archetype is None:
                    rating = int(np.clip(np.rint(rng.normal(quality, 0.7)), 1, 5))
                    words = self._draw_words(
                        self._length(spec.review_length_mean), rating, item_theta
                    )
                    timestamp = float(rng.uniform(_SPREAD_START, spec.time_span_days))
                elif archetype == "mismatch":
                    rating = int(rng.choice((1, 5)))
                    words = self._draw_words(
                        self._length(spec.review_length_mean), 6 - rating, item_theta
                    )
                    timestamp = float(rng.uniform(_SPREAD_START, spec.time_span_days))
                elif archetype == "off_facet":
                    rating = int(np.clip(np.rint(rng.normal(quality, 0.7)), 1, 5))
                    words = self._draw_words(
                        self._length(spec.review_length_mean),
                        rating,
                        self._alien_theta(main_facet),
                    )
                    timestamp = float(rng.uniform(_SPREAD_START, spec.time_span_days))
                elif archetype == "burst":
                    rating = burst_rating
                    words = self._draw_words(self._length(12.0), rating, item_theta)
                    timestamp = float(rng.uniform(0.0, _BURST_WINDOW))
                else:  # extreme
                    rating = int(rng.choice((1, 5)))
                    pool = self.pos_pool if rating == 5 else self.neg_pool
                    n_words = int(rng.integers(1, 4))
                    words = [
                        pool[int(rng.integers(len(pool)))] for _ in range(n_words)
                    ]
                    words.append("!!!")
                    timestamp = float(rng.uniform(_SPREAD_START, spec.time_span_days))
                label = "non_credible" if spam else "credible"
                labels[review_id] = label
                archetypes[review_id] = archetype
                reviews.append(
                    Review(
                        review_id=review_id,
                        item_id=item_id,
                        user_id=user_id,
                        rating=rating,
                        timestamp=timestamp,
                        text=" ".join(words),
                        label=label,
                    )
                )
        ranked = sorted(qualities, key=lambda i: (-qualities[i], i))
        reference_ranks = {item_id: rank for rank, item_id in enumerate(ranked, start=1)}
        truth = {
            "labels": labels,
            "archetypes": archetypes,
            "item_quality": qualities,
            "reference_ranks": reference_ranks,
            "phi_true": {
                "words": list(spec.vocabulary_words()),
                "tensor": self.spec.phi_true().tolist(),
            },
            "spec": _spec_to_json(spec),
        }
        return Corpus(reviews), truth


def _spec_to_json(spec: SynthSpec) -> dict:
    raw = asdict(spec)
    raw["reviews_per_item"] = list(spec.reviews_per_item)
    raw["facet_words"] = [list(ws) for ws in spec.facet_words]
    raw["positive_pool"] = list(spec.positive_pool)
    raw["negative_pool"] = list(spec.negative_pool)
    return raw


def generate(spec: SynthSpec) -> tuple[Corpus, dict]:
    """Generate a labeled corpus and its ground-truth sidecar."""
    return _Generator(spec).generate()


def write_truth(truth: dict, path: str | Path) -> None:
    """Write the sidecar JSON."""
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(truth, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
