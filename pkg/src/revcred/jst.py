"""Joint facet-sentiment model over review text.

Each token in a review carries two latent assignments: a facet (topic)
and a sentiment label. Inference is collapsed Gibbs sampling over the
token-level assignments; the per-token conditional is the product of
three smoothed count ratios (facet given label within the document, word
given facet and label, label within the document), with the token's own
assignment excluded from every count.

After training, a review's facet-sentiment profile and its inferred
rating distribution are read off the word-probability tensor: for each
facet the dominant-label probability of every observed word accumulates
into that facet's cell, and the globally dominant (facet, label) pair of
every observed word accumulates into the label marginal. Ties in these
argmaxes break toward the lower index.

Randomness: all draws come from one ``numpy.random.Generator`` seeded by
``JstHyperParams.seed``. Initialization consumes a label stream then a
facet stream (one value per token); each sweep consumes one uniform per
token. This makes training bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .corpus import TokenSeq, Vocabulary
from .errors import DataError
from .lexicon import SentimentLexicon

__all__ = [
    "ItemFacetProfile",
    "JstHyperParams",
    "JstModel",
    "JstState",
    "ReviewFacetProfile",
    "gibbs_sweep",
    "infer_review_facets",
    "init_model",
    "item_facet_profile",
    "load_model",
    "model_vocabulary",
    "save_model",
    "train",
]


@dataclass(frozen=True)
class JstHyperParams:
    """Sampler hyperparameters.

    alpha defaults to 50 / n_facets when not given. The sampling
    schedule keeps one state estimate every sample_lag sweeps after
    burn_in and averages them; if the schedule yields no sample (lag
    longer than the post-burn-in run), the final state is used.
    """

    n_facets: int
    n_labels: int = 2
    alpha: float | None = None
    beta: float = 0.01
    gamma: float = 0.1
    iterations: int = 1000
    burn_in: int = 200
    sample_lag: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.n_facets < 1:
            raise ValueError(f"n_facets must be >= 1, got {self.n_facets}")
        if self.n_labels < 1:
            raise ValueError(f"n_labels must be >= 1, got {self.n_labels}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.n_facets)
        if self.alpha <= 0 or self.beta <= 0 or self.gamma <= 0:
            raise ValueError("alpha, beta, gamma must all be > 0")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(
                f"burn_in must satisfy 0 <= burn_in < iterations, "
                f"got burn_in={self.burn_in} iterations={self.iterations}"
            )
        if self.sample_lag < 1:
            raise ValueError(f"sample_lag must be >= 1, got {self.sample_lag}")


@dataclass
class JstState:
    """Token-level sampler state with incremental count tensors.

    tokens/doc_of/facet/label are flat per-token arrays in document
    order. Count tensors: n_dlk (doc x label x facet), n_dl (doc x
    label), n_d (doc), n_klw (facet x label x word), n_kl (facet x
    label).
    """

    tokens: np.ndarray
    doc_of: np.ndarray
    facet: np.ndarray
    label: np.ndarray
    n_dlk: np.ndarray
    n_dl: np.ndarray
    n_d: np.ndarray
    n_klw: np.ndarray
    n_kl: np.ndarray
    n_docs: int
    vocab_size: int

    def retally(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Recompute all count tensors from the raw assignments."""
        K, L, V = self.n_klw.shape
        n_dlk = np.zeros((self.n_docs, L, K), dtype=np.int64)
        n_klw = np.zeros((K, L, V), dtype=np.int64)
        np.add.at(n_dlk, (self.doc_of, self.label, self.facet), 1)
        np.add.at(n_klw, (self.facet, self.label, self.tokens), 1)
        return (
            n_dlk,
            n_dlk.sum(axis=2),
            n_dlk.sum(axis=(1, 2)),
            n_klw,
            n_klw.sum(axis=2),
        )

    def check_counts(self) -> None:
        """Raise if the incremental counts disagree with a fresh tally."""
        n_dlk, n_dl, n_d, n_klw, n_kl = self.retally()
        for name, kept, fresh in (
            ("n_dlk", self.n_dlk, n_dlk),
            ("n_dl", self.n_dl, n_dl),
            ("n_d", self.n_d, n_d),
            ("n_klw", self.n_klw, n_klw),
            ("n_kl", self.n_kl, n_kl),
        ):
            if not np.array_equal(kept, fresh):
                raise ValueError(f"count tensor {name} is inconsistent with assignments")


@dataclass
class JstModel:
    """Trained model: averaged posterior estimates plus the vocabulary.

    theta: doc x label x facet, rows sum to 1 over facets.
    phi: facet x label x word, rows sum to 1 over words.
    pi: doc x label, rows sum to 1 over labels.
    The vocabulary entries ride along so the model can score corpora
    other than the one it was trained on.
    """

    hyper: JstHyperParams
    vocab_entries: tuple[str, ...]
    vocab_fingerprint: str
    theta: np.ndarray
    phi: np.ndarray
    pi: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_facets(self) -> int:
        return self.phi.shape[0]

    @property
    def n_labels(self) -> int:
        return self.phi.shape[1]

    @property
    def vocab_index(self) -> dict[str, int]:
        if "vocab_index" not in self._cache:
            self._cache["vocab_index"] = {e: i for i, e in enumerate(self.vocab_entries)}
        return self._cache["vocab_index"]

    def _argmax_tables(self):
        """Per-word argmax tables used by profile inference.

        lstar[k, w]: dominant label of word w within facet k (ties to
        the lower label). phi_lstar[k, w]: phi at that label.
        joint_label[w]/joint_value[w]: label and phi value of the
        globally dominant (facet, label) pair (ties to lower facet,
        then lower label).
        """
        if "argmax" not in self._cache:
            K, L, V = self.phi.shape
            lstar = np.argmax(self.phi, axis=1)
            phi_lstar = np.take_along_axis(self.phi, lstar[:, None, :], axis=1)[:, 0, :]
            flat = self.phi.reshape(K * L, V)
            joint = np.argmax(flat, axis=0)
            joint_label = joint % L
            joint_value = flat[joint, np.arange(V)]
            self._cache["argmax"] = (lstar, phi_lstar, joint_label, joint_value)
        return self._cache["argmax"]


@dataclass(frozen=True)
class ReviewFacetProfile:
    """Per-review facet-sentiment mass and inferred rating distribution.

    phi_prime (facet x label) and pi_prime (label) are normalized to sum
    to 1; raw_phi_prime / raw_pi_prime keep the unnormalized
    accumulations. uniform_fallback marks reviews with no in-vocabulary
    token, whose normalized profiles are uniform.
    """

    phi_prime: np.ndarray
    pi_prime: np.ndarray
    raw_phi_prime: np.ndarray
    raw_pi_prime: np.ndarray
    n_tokens_in_vocab: int
    uniform_fallback: bool


@dataclass(frozen=True)
class ItemFacetProfile:
    """Aggregated facet-sentiment profile over an item's reviews."""

    phi_item: np.ndarray
    raw_phi_item: np.ndarray
    n_reviews: int
    uniform_fallback: bool


@njit(cache=True)
def _sweep_kernel(tokens, doc_of, facet, label, n_dlk, n_dl, n_d, n_klw, n_kl,
                  alpha, beta, gamma, uniforms):  # pragma: no cover - jitted
    K, L, V = n_klw.shape
    cum = np.empty(K * L, dtype=np.float64)
    for t in range(tokens.shape[0]):
        d = doc_of[t]
        w = tokens[t]
        zk = facet[t]
        lj = label[t]
        n_dlk[d, lj, zk] -= 1
        n_dl[d, lj] -= 1
        n_d[d] -= 1
        n_klw[zk, lj, w] -= 1
        n_kl[zk, lj] -= 1
        total = 0.0
        idx = 0
        doc_denom = n_d[d] + L * gamma
        for k in range(K):
            for j in range(L):
                p = (
                    (n_dlk[d, j, k] + alpha) / (n_dl[d, j] + K * alpha)
                    * (n_klw[k, j, w] + beta) / (n_kl[k, j] + V * beta)
                    * (n_dl[d, j] + gamma) / doc_denom
                )
                total += p
                cum[idx] = total
                idx += 1
        u = uniforms[t] * total
        sel = K * L - 1
        for i in range(K * L):
            if u < cum[i]:
                sel = i
                break
        zk = sel // L
        lj = sel % L
        facet[t] = zk
        label[t] = lj
        n_dlk[d, lj, zk] += 1
        n_dl[d, lj] += 1
        n_d[d] += 1
        n_klw[zk, lj, w] += 1
        n_kl[zk, lj] += 1


def init_model(
    corpus_tokens: Sequence[TokenSeq],
    vocab: Vocabulary,
    lexicon: SentimentLexicon | None,
    hyper: JstHyperParams,
    rng: np.random.Generator | None = None,
) -> JstState:
    """Build the initial sampler state.

    Out-of-vocabulary tokens are skipped. Labels of lexicon words are
    forced (positive list -> label 0, negative -> label 1); all other
    labels and every facet are drawn uniformly. A non-empty lexicon
    requires n_labels == 2 since the lists encode a binary polarity.
    """
    if rng is None:
        rng = np.random.default_rng(hyper.seed)
    lexicon_used = lexicon is not None and (lexicon.positive or lexicon.negative)
    if lexicon_used and hyper.n_labels != 2:
        raise ValueError(
            f"lexicon seeding assumes 2 labels, model has {hyper.n_labels}"
        )
    token_ids: list[int] = []
    doc_of: list[int] = []
    forced: list[int] = []  # parallel to token_ids; -1 when not forced
    for d, seq in enumerate(corpus_tokens):
        for tok in seq.tokens:
            wid = vocab.index.get(tok)
            if wid is None:
                continue
            token_ids.append(wid)
            doc_of.append(d)
            lab = lexicon.label_for(tok) if lexicon_used else None
            forced.append(-1 if lab is None else lab)
    n_tokens = len(token_ids)
    tokens = np.asarray(token_ids, dtype=np.int64).reshape(n_tokens)
    docs = np.asarray(doc_of, dtype=np.int64).reshape(n_tokens)
    if n_tokens and (tokens.min() < 0 or tokens.max() >= len(vocab)):
        raise ValueError("token id out of vocabulary range")
    labels = rng.integers(0, hyper.n_labels, size=n_tokens)
    facets = rng.integers(0, hyper.n_facets, size=n_tokens)
    forced_arr = np.asarray(forced, dtype=np.int64).reshape(n_tokens)
    labels = np.where(forced_arr >= 0, forced_arr, labels).astype(np.int64)
    facets = facets.astype(np.int64)

    state = JstState(
        tokens=tokens,
        doc_of=docs,
        facet=facets,
        label=labels,
        n_dlk=np.zeros((len(corpus_tokens), hyper.n_labels, hyper.n_facets), dtype=np.int64),
        n_dl=np.zeros((len(corpus_tokens), hyper.n_labels), dtype=np.int64),
        n_d=np.zeros(len(corpus_tokens), dtype=np.int64),
        n_klw=np.zeros((hyper.n_facets, hyper.n_labels, len(vocab)), dtype=np.int64),
        n_kl=np.zeros((hyper.n_facets, hyper.n_labels), dtype=np.int64),
        n_docs=len(corpus_tokens),
        vocab_size=len(vocab),
    )
    n_dlk, n_dl, n_d, n_klw, n_kl = state.retally()
    state.n_dlk, state.n_dl, state.n_d, state.n_klw, state.n_kl = n_dlk, n_dl, n_d, n_klw, n_kl
    return state


def gibbs_sweep(
    state: JstState,
    hyper: JstHyperParams,
    vocab_size: int,
    rng: np.random.Generator,
) -> JstState:
    """Resample every token once, in document order, in place."""
    if vocab_size != state.vocab_size:
        raise ValueError(
            f"vocab_size {vocab_size} does not match state ({state.vocab_size})"
        )
    if state.tokens.size == 0:
        return state
    uniforms = rng.random(state.tokens.size)
    _sweep_kernel(
        state.tokens, state.doc_of, state.facet, state.label,
        state.n_dlk, state.n_dl, state.n_d, state.n_klw, state.n_kl,
        float(hyper.alpha), float(hyper.beta), float(hyper.gamma), uniforms,
    )
    return state


def _estimates(state: JstState, hyper: JstHyperParams):
    """Smoothed count-ratio estimates of theta, phi, pi."""
    K = hyper.n_facets
    L = hyper.n_labels
    V = state.vocab_size
    theta = (state.n_dlk + hyper.alpha) / (state.n_dl[:, :, None] + K * hyper.alpha)
    phi = (state.n_klw + hyper.beta) / (state.n_kl[:, :, None] + V * hyper.beta)
    pi = (state.n_dl + hyper.gamma) / (state.n_d[:, None] + L * hyper.gamma)
    return theta, phi, pi


def train(
    corpus_tokens: Sequence[TokenSeq],
    vocab: Vocabulary,
    lexicon: SentimentLexicon | None,
    hyper: JstHyperParams,
) -> JstModel:
    """Run the full sampling schedule and average the retained estimates."""
    rng = np.random.default_rng(hyper.seed)
    state = init_model(corpus_tokens, vocab, lexicon, hyper, rng)
    theta_acc = phi_acc = pi_acc = None
    n_samples = 0
    for sweep in range(1, hyper.iterations + 1):
        gibbs_sweep(state, hyper, len(vocab), rng)
        is_sample = sweep > hyper.burn_in and (sweep - hyper.burn_in) % hyper.sample_lag == 0
        if is_sample or (sweep == hyper.iterations and n_samples == 0):
            theta, phi, pi = _estimates(state, hyper)
            if theta_acc is None:
                theta_acc, phi_acc, pi_acc = theta, phi, pi
            else:
                theta_acc += theta
                phi_acc += phi
                pi_acc += pi
            n_samples += 1
    return JstModel(
        hyper=hyper,
        vocab_entries=vocab.entries,
        vocab_fingerprint=vocab.fingerprint(),
        theta=theta_acc / n_samples,
        phi=phi_acc / n_samples,
        pi=pi_acc / n_samples,
    )


def infer_review_facets(
    model: JstModel,
    tokens: TokenSeq | Sequence[str],
    pi_aggregation: str = "joint",
) -> ReviewFacetProfile:
    """Project a review's tokens through the trained word tensor.

    For each facet k, every in-vocabulary token occurrence adds the
    token's dominant-label probability within k to cell (k, dominant
    label). The inferred rating distribution adds, once per occurrence,
    the probability at the globally dominant (facet, label) pair to that
    label ("joint" mode); "per_facet" mode instead adds each facet's
    dominant-label probability to its label, K contributions per
    occurrence. Reviews with no in-vocabulary token get uniform
    normalized profiles and are flagged.
    """
    if pi_aggregation not in ("joint", "per_facet"):
        raise ValueError(f"pi_aggregation must be 'joint' or 'per_facet', got {pi_aggregation!r}")
    words = tokens.tokens if isinstance(tokens, TokenSeq) else tokens
    K = model.n_facets
    L = model.n_labels
    index = model.vocab_index
    ids = [index[t] for t in words if t in index]
    raw_phi = np.zeros((K, L))
    raw_pi = np.zeros(L)
    if not ids:
        return ReviewFacetProfile(
            phi_prime=np.full((K, L), 1.0 / (K * L)),
            pi_prime=np.full(L, 1.0 / L),
            raw_phi_prime=raw_phi,
            raw_pi_prime=raw_pi,
            n_tokens_in_vocab=0,
            uniform_fallback=True,
        )
    lstar, phi_lstar, joint_label, joint_value = model._argmax_tables()
    uniq, counts = np.unique(np.asarray(ids, dtype=np.int64), return_counts=True)
    weights = counts.astype(np.float64)
    for k in range(K):
        np.add.at(raw_phi[k], lstar[k, uniq], weights * phi_lstar[k, uniq])
    if pi_aggregation == "joint":
        np.add.at(raw_pi, joint_label[uniq], weights * joint_value[uniq])
    else:
        for k in range(K):
            np.add.at(raw_pi, lstar[k, uniq], weights * phi_lstar[k, uniq])
    return ReviewFacetProfile(
        phi_prime=raw_phi / raw_phi.sum(),
        pi_prime=raw_pi / raw_pi.sum(),
        raw_phi_prime=raw_phi,
        raw_pi_prime=raw_pi,
        n_tokens_in_vocab=len(ids),
        uniform_fallback=False,
    )


def item_facet_profile(
    model: JstModel, review_tokens: Sequence[TokenSeq | Sequence[str]]
) -> ItemFacetProfile:
    """Aggregate the raw per-review facet mass over an item's reviews."""
    K = model.n_facets
    L = model.n_labels
    raw = np.zeros((K, L))
    for tokens in review_tokens:
        raw += infer_review_facets(model, tokens).raw_phi_prime
    total = raw.sum()
    if total > 0:
        return ItemFacetProfile(
            phi_item=raw / total,
            raw_phi_item=raw,
            n_reviews=len(review_tokens),
            uniform_fallback=False,
        )
    return ItemFacetProfile(
        phi_item=np.full((K, L), 1.0 / (K * L)),
        raw_phi_item=raw,
        n_reviews=len(review_tokens),
        uniform_fallback=True,
    )


_MODEL_FORMAT = "revcred-facet-model"
_MODEL_VERSION = 1


def _write_array(fh, arr: np.ndarray) -> None:
    flat = np.ascontiguousarray(arr, dtype="<f8").reshape(-1)
    fh.write(struct.pack("<Q", flat.size))
    fh.write(flat.tobytes())


def _read_array(fh, expect: int, name: str) -> np.ndarray:
    header = fh.read(8)
    if len(header) != 8:
        raise DataError(f"truncated model file while reading {name} length")
    (count,) = struct.unpack("<Q", header)
    if count != expect:
        raise DataError(f"model array {name} has {count} values, expected {expect}")
    payload = fh.read(8 * count)
    if len(payload) != 8 * count:
        raise DataError(f"truncated model file while reading {name} data")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64)


def save_model(model: JstModel, path: str | Path) -> None:
    """Write a facet model: one JSON header line, then the three tensors
    as length-prefixed little-endian float64 blocks (theta, phi, pi)."""
    D, L, K = model.theta.shape
    V = model.phi.shape[2]
    header = {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "hyper": {
            "n_facets": model.hyper.n_facets,
            "n_labels": model.hyper.n_labels,
            "alpha": model.hyper.alpha,
            "beta": model.hyper.beta,
            "gamma": model.hyper.gamma,
            "iterations": model.hyper.iterations,
            "burn_in": model.hyper.burn_in,
            "sample_lag": model.hyper.sample_lag,
            "seed": model.hyper.seed,
        },
        "vocab_fingerprint": model.vocab_fingerprint,
        "n_docs": D,
        "n_facets": K,
        "n_labels": L,
        "vocab_size": V,
        "vocabulary": list(model.vocab_entries),
        "arrays": ["theta", "phi", "pi"],
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
        fh.write(b"\n")
        _write_array(fh, model.theta)
        _write_array(fh, model.phi)
        _write_array(fh, model.pi)


def load_model(path: str | Path) -> JstModel:
    """Read a facet model written by save_model."""
    with Path(path).open("rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise DataError(f"{path}: not a facet model file") from None
        if header.get("format") != _MODEL_FORMAT:
            raise DataError(f"{path}: not a facet model file")
        if header.get("version") != _MODEL_VERSION:
            raise DataError(
                f"{path}: unsupported model version {header.get('version')!r}"
            )
        D = header["n_docs"]
        K = header["n_facets"]
        L = header["n_labels"]
        V = header["vocab_size"]
        entries = tuple(header["vocabulary"])
        if len(entries) != V:
            raise DataError(f"{path}: vocabulary length disagrees with vocab_size")
        theta = _read_array(fh, D * L * K, "theta").reshape(D, L, K)
        phi = _read_array(fh, K * L * V, "phi").reshape(K, L, V)
        pi = _read_array(fh, D * L, "pi").reshape(D, L)
    hyper = JstHyperParams(**header["hyper"])
    return JstModel(
        hyper=hyper,
        vocab_entries=entries,
        vocab_fingerprint=header["vocab_fingerprint"],
        theta=theta,
        phi=phi,
        pi=pi,
    )


def model_vocabulary(model: JstModel) -> Vocabulary:
    """Vocabulary carried by a trained model.

    Document frequencies are not persisted with the model, so they come
    back as zeros; everything downstream of training keys off entries
    and index only.
    """
    entries = tuple(model.vocab_entries)
    return Vocabulary(
        entries=entries,
        index={e: i for i, e in enumerate(entries)},
        doc_freq=tuple(0 for _ in entries),
    )
