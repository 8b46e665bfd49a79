"""Sentiment word lists used to seed label assignments.

Label convention throughout the package: label 0 is positive, label 1 is
negative. The built-in lists are compact, high-precision opinion words;
larger domain lexicons can be loaded from plain text files (one word per
line, '#' lines are comments).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

__all__ = ["SentimentLexicon", "builtin_lexicon", "load_lexicon"]

POSITIVE_LABEL = 0
NEGATIVE_LABEL = 1

_POSITIVE_WORDS = frozenset("""
affordable amazing attentive authentic awesome bargain beautiful best
brilliant charming clean comfortable cozy courteous crisp delicious
delightful efficient elegant enjoyable enjoyed exceptional excellent
fabulous fantastic favorite fine flavorful fresh friendly fun generous
gem glad gorgeous great happy helpful impressive incredible juicy love
loved lovely nice outstanding perfect pleasant polite professional
prompt quick quiet recommend recommended reliable satisfied satisfying
smooth solid spacious speedy spotless stellar sturdy stylish superb
tasty tender terrific value vibrant warm welcoming wonderful worth
""".split())

_NEGATIVE_WORDS = frozenset("""
atrocious avoid awful bad bland broken burnt cancel cancelled careless
chaotic cheap cold complain complaint cracked cramped crowded damaged
defective dirty disappointed disappointing disappointment disgusting
dishonest dreadful expensive faulty filthy flimsy fraud frozen greasy
gross horrible ignored inedible leaking lie lies lousy mediocre
misleading moldy musty nasty never noisy overcooked overpriced pathetic
poor refund rotten rude scam shoddy sloppy slow smelly soggy stained
stale tasteless terrible undercooked unfriendly unhelpful
unprofessional unresponsive useless waste worst worthless
""".split())


@dataclass(frozen=True)
class SentimentLexicon:
    """Disjoint positive and negative word sets."""

    positive: frozenset[str]
    negative: frozenset[str]

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise ValueError(
                f"lexicon lists overlap on {sorted(overlap)[:5]}"
                f"{'...' if len(overlap) > 5 else ''}"
            )

    def label_for(self, word: str) -> int | None:
        """Seed label for a word, or None if the word is unlisted."""
        if word in self.positive:
            return POSITIVE_LABEL
        if word in self.negative:
            return NEGATIVE_LABEL
        return None


def builtin_lexicon() -> SentimentLexicon:
    """The package's built-in opinion-word lexicon."""
    return SentimentLexicon(positive=_POSITIVE_WORDS, negative=_NEGATIVE_WORDS)


def _read_words(path: str | Path) -> frozenset[str]:
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line.lower())
    return frozenset(words)


def load_lexicon(positive_path: str | Path, negative_path: str | Path) -> SentimentLexicon:
    """Load a lexicon from two word-list files."""
    return SentimentLexicon(
        positive=_read_words(positive_path), negative=_read_words(negative_path)
    )
