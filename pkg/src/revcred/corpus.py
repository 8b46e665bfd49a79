"""Review corpus loading, tokenization, and vocabulary construction.

A corpus is a flat collection of reviews, each tied to one item and one
user. Reviews arrive as JSON Lines (one object per line) or CSV with
identical field names. Timestamps are normalized to real-valued days
since the Unix epoch on load: numeric values are interpreted as epoch
seconds, strings as ISO-8601 datetimes (naive datetimes are taken as
UTC).

Tokenization lowercases everything except fully-capitalized tokens of
length >= 2 (kept verbatim as exaggeration cues), emits runs of ``!``
and ``?`` as standalone tokens, and strips other punctuation. The token
count before stopword removal is recorded as ``raw_length`` because
several downstream features normalize by it.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

__all__ = [
    "DEFAULT_STOPWORDS",
    "Corpus",
    "Review",
    "TokenSeq",
    "TokenizeConfig",
    "VocabConfig",
    "Vocabulary",
    "build_vocabulary",
    "load_corpus",
    "load_stopwords",
    "ngram_entries",
    "tokenize",
    "write_corpus",
]

SECONDS_PER_DAY = 86400.0

# Compact English stopword list. Deliberately small: sentiment-bearing
# and domain words must survive filtering, so only grammatical filler is
# listed. Override via TokenizeConfig(stopwords=load_stopwords(path)).
DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are aren't as at be
because been before being below between both but by can cannot could
couldn't did didn't do does doesn't doing don't down during each few for
from further had hadn't has hasn't have haven't having he he's her here
hers herself him himself his how i i'm i've if in into is isn't it it's
its itself just me more most mustn't my myself no nor not of off on once
only or other ought our ours ourselves out over own same shan't she
she's should shouldn't so some such than that that's the their theirs
them themselves then there there's these they they're this those through
to too under until up upon very was wasn't we we're were weren't what
when where which while who whom why will with won't would wouldn't you
you're your yours yourself yourselves
""".split())

# A word token is a run of word characters (underscore excluded), with
# internal hyphens or apostrophes allowed ("wi-fi", "don't"). Runs of
# '!' / '?' are tokens of their own; every other punctuation character
# is a separator.
_TOKEN_RE = re.compile(r"[!?]+|[^\W_]+(?:['\-][^\W_]+)*")

_LABELS = ("credible", "non_credible")


@dataclass(frozen=True)
class TokenizeConfig:
    """Tokenizer settings: the stopword set to filter with."""

    stopwords: frozenset[str] = DEFAULT_STOPWORDS


@dataclass(frozen=True)
class VocabConfig:
    """Vocabulary pruning settings.

    min_df: minimum number of distinct documents an entry must appear in.
    max_vocab: hard cap on vocabulary size after pruning.
    """

    min_df: int = 2
    max_vocab: int = 50000


@dataclass(frozen=True)
class TokenSeq:
    """Token sequence for one review.

    tokens: surviving tokens after stopword removal, in text order.
    raw_length: token count before stopword removal.
    """

    tokens: tuple[str, ...]
    raw_length: int


@dataclass(frozen=True)
class Review:
    """One review record.

    rating is an integer in 1..r_max (r_max fixed by the corpus, 5 by
    default). timestamp is in days since the Unix epoch. The optional
    user/engagement fields are only required when extracting the
    extended behavioral tier.
    """

    review_id: str
    item_id: str
    user_id: str
    rating: int
    timestamp: float
    text: str
    label: str | None = None
    helpful_votes: int | None = None
    friends_count: int | None = None
    checked_in: bool | None = None
    elite: bool | None = None


class Corpus:
    """Immutable review collection with item and user indexes."""

    def __init__(self, reviews: Sequence[Review], r_max: int = 5):
        reviews = tuple(reviews)
        seen: set[str] = set()
        by_item: dict[str, list[int]] = {}
        by_user: dict[str, list[int]] = {}
        for pos, rev in enumerate(reviews):
            if rev.review_id in seen:
                raise DataError(f"duplicate review_id {rev.review_id!r}")
            seen.add(rev.review_id)
            if not isinstance(rev.rating, int) or isinstance(rev.rating, bool):
                raise DataError(
                    f"review {rev.review_id!r}: field 'rating': "
                    f"expected integer, got {rev.rating!r}"
                )
            if not 1 <= rev.rating <= r_max:
                raise DataError(
                    f"review {rev.review_id!r}: field 'rating': "
                    f"value {rev.rating} out of range 1..{r_max}"
                )
            if rev.label is not None and rev.label not in _LABELS:
                raise DataError(
                    f"review {rev.review_id!r}: field 'label': "
                    f"expected one of {_LABELS}, got {rev.label!r}"
                )
            by_item.setdefault(rev.item_id, []).append(pos)
            by_user.setdefault(rev.user_id, []).append(pos)
        self.reviews = reviews
        self.r_max = r_max
        self.by_item = {k: tuple(v) for k, v in by_item.items()}
        self.by_user = {k: tuple(v) for k, v in by_user.items()}

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)

    def item_reviews(self, item_id: str) -> list[Review]:
        return [self.reviews[i] for i in self.by_item[item_id]]

    def user_reviews(self, user_id: str) -> list[Review]:
        return [self.reviews[i] for i in self.by_user[user_id]]


@dataclass(frozen=True)
class Vocabulary:
    """Ordered n-gram vocabulary.

    entries holds unigrams and adjacent bigrams (parts joined by "_"),
    sorted by document frequency descending, ties broken
    lexicographically, so the ordering does not depend on input record
    order. index maps entry -> position in entries; doc_freq is aligned
    with entries.
    """

    entries: tuple[str, ...]
    index: dict[str, int]
    doc_freq: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def fingerprint(self) -> str:
        """Hex digest identifying this vocabulary's entry list."""
        import hashlib

        h = hashlib.sha256("\n".join(self.entries).encode("utf-8"))
        return h.hexdigest()


def tokenize(text: str, config: TokenizeConfig | None = None) -> TokenSeq:
    """Tokenize review text.

    Emits word tokens (lowercased unless fully capitalized and at least
    two characters long) and standalone runs of '!'/'?'. Stopwords are
    then removed by exact match against the configured list; the
    pre-removal token count is kept as raw_length.
    """
    if config is None:
        config = TokenizeConfig()
    raw: list[str] = []
    for match in _TOKEN_RE.finditer(text):
        tok = match.group()
        if tok[0] not in "!?" and not (len(tok) >= 2 and tok.isupper()):
            tok = tok.lower()
        raw.append(tok)
    kept = tuple(t for t in raw if t not in config.stopwords)
    return TokenSeq(tokens=kept, raw_length=len(raw))


def ngram_entries(tokens: Sequence[str]) -> list[str]:
    """Unigrams plus adjacent bigrams (joined by "_") for a token list."""
    grams = list(tokens)
    grams.extend(f"{a}_{b}" for a, b in zip(tokens, tokens[1:]))
    return grams


def build_vocabulary(
    tokenized_docs: Iterable[TokenSeq], config: VocabConfig | None = None
) -> Vocabulary:
    """Build the n-gram vocabulary over a tokenized corpus.

    Counts document frequency of every unigram and adjacent bigram,
    drops entries below min_df, and keeps at most max_vocab entries
    ordered by doc frequency descending then lexicographically.
    """
    if config is None:
        config = VocabConfig()
    if config.min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {config.min_df}")
    if config.max_vocab < 1:
        raise ValueError(f"max_vocab must be >= 1, got {config.max_vocab}")
    df: dict[str, int] = {}
    for seq in tokenized_docs:
        for entry in set(ngram_entries(seq.tokens)):
            df[entry] = df.get(entry, 0) + 1
    kept = [e for e, n in df.items() if n >= config.min_df]
    kept.sort(key=lambda e: (-df[e], e))
    kept = kept[: config.max_vocab]
    return Vocabulary(
        entries=tuple(kept),
        index={e: i for i, e in enumerate(kept)},
        doc_freq=tuple(df[e] for e in kept),
    )


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: one word per line, '#' lines are comments."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return frozenset(words)


def _parse_timestamp(value, where: str) -> float:
    """Normalize a timestamp value to days since the Unix epoch."""
    if isinstance(value, bool):
        raise DataError(f"{where}: expected number or ISO-8601 string, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value) / SECONDS_PER_DAY
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise DataError(f"{where}: empty timestamp")
        try:
            return float(text) / SECONDS_PER_DAY
        except ValueError:
            pass
        try:
            dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
        except ValueError:
            raise DataError(
                f"{where}: could not parse {value!r} as epoch seconds or ISO-8601"
            ) from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp() / SECONDS_PER_DAY
    raise DataError(f"{where}: expected number or ISO-8601 string, got {type(value).__name__}")


def _parse_int(value, where: str) -> int:
    if isinstance(value, bool):
        raise DataError(f"{where}: expected integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise DataError(f"{where}: expected integer, got {value!r}")


def _parse_bool(value, where: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str):
        low = value.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
    raise DataError(f"{where}: expected boolean, got {value!r}")


_REQUIRED_FIELDS = ("review_id", "item_id", "user_id", "rating", "timestamp", "text")
_OPTIONAL_FIELDS = ("label", "helpful_votes", "friends_count", "checked_in", "elite")


def _record_to_review(record: dict, line_no: int, r_max: int) -> Review:
    def where(field: str) -> str:
        return f"line {line_no}: field {field!r}"

    for field in _REQUIRED_FIELDS:
        if field not in record or record[field] is None or record[field] == "":
            raise DataError(f"{where(field)}: missing")
    rating = _parse_int(record["rating"], where("rating"))
    if not 1 <= rating <= r_max:
        raise DataError(f"{where('rating')}: value {rating} out of range 1..{r_max}")
    label = record.get("label")
    if label == "":
        label = None
    if label is not None and label not in _LABELS:
        raise DataError(f"{where('label')}: expected one of {_LABELS}, got {label!r}")

    def opt_int(field: str) -> int | None:
        value = record.get(field)
        if value is None or value == "":
            return None
        parsed = _parse_int(value, where(field))
        if parsed < 0:
            raise DataError(f"{where(field)}: value {parsed} must be >= 0")
        return parsed

    def opt_bool(field: str) -> bool | None:
        value = record.get(field)
        if value is None or value == "":
            return None
        return _parse_bool(value, where(field))

    return Review(
        review_id=str(record["review_id"]),
        item_id=str(record["item_id"]),
        user_id=str(record["user_id"]),
        rating=rating,
        timestamp=_parse_timestamp(record["timestamp"], where("timestamp")),
        text=str(record["text"]),
        label=label,
        helpful_votes=opt_int("helpful_votes"),
        friends_count=opt_int("friends_count"),
        checked_in=opt_bool("checked_in"),
        elite=opt_bool("elite"),
    )


def load_corpus(path: str | Path, format: str = "jsonl", r_max: int = 5) -> Corpus:
    """Load a review corpus from a JSONL or CSV file.

    Raises DataError naming the line and field for malformed records,
    out-of-range ratings, or duplicate review ids. An empty file yields
    an empty corpus.
    """
    path = Path(path)
    if format not in ("jsonl", "csv"):
        raise ValueError(f"format must be 'jsonl' or 'csv', got {format!r}")
    reviews: list[Review] = []
    if format == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"line {line_no}: invalid JSON: {exc.msg}") from None
                if not isinstance(record, dict):
                    raise DataError(f"line {line_no}: expected a JSON object")
                reviews.append(_record_to_review(record, line_no, r_max))
    else:
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is not None:
                missing = [f for f in _REQUIRED_FIELDS if f not in reader.fieldnames]
                if missing:
                    raise DataError(f"line 1: missing CSV columns {missing}")
            # DictReader consumes the header, so data starts at line 2.
            for line_no, record in enumerate(reader, start=2):
                record.pop(None, None)
                reviews.append(_record_to_review(record, line_no, r_max))
    return Corpus(reviews, r_max=r_max)


def _review_to_record(review: Review) -> dict:
    record = {
        "review_id": review.review_id,
        "item_id": review.item_id,
        "user_id": review.user_id,
        "rating": review.rating,
        "timestamp": review.timestamp * SECONDS_PER_DAY,
        "text": review.text,
    }
    for field in _OPTIONAL_FIELDS:
        value = getattr(review, field)
        if value is not None:
            record[field] = value
    return record


def write_corpus(path: str | Path, corpus: Corpus | Sequence[Review], format: str = "jsonl") -> None:
    """Serialize reviews to JSONL or CSV (timestamps as epoch seconds)."""
    path = Path(path)
    reviews = corpus.reviews if isinstance(corpus, Corpus) else tuple(corpus)
    if format == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for review in reviews:
                fh.write(json.dumps(_review_to_record(review), ensure_ascii=False))
                fh.write("\n")
    elif format == "csv":
        fields = list(_REQUIRED_FIELDS) + list(_OPTIONAL_FIELDS)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for review in reviews:
                record = _review_to_record(review)
                row = {f: record.get(f, "") for f in fields}
                for key, value in row.items():
                    if isinstance(value, bool):
                        row[key] = "true" if value else "false"
                writer.writerow(row)
    else:
        raise ValueError(f"format must be 'jsonl' or 'csv', got {format!r}")
