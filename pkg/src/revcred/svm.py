"""Linear classifiers and rankers trained by dual coordinate descent.

The classifier solves the class-weighted L2-regularized squared-hinge
primal

    min_w  1/2 ||w||^2 + sum_i C_{y_i} max(0, 1 - y_i w.x_i)^2

through its dual: min_a 1/2 a'(Q + D)a - 1'a with a >= 0, where
Q_ij = y_i y_j x_i.x_j and D is diagonal with D_ii = 1/(2 C_i), and
w = sum_i a_i y_i x_i. The bias is folded in as a constant-1 feature.
Coordinates are visited in a fresh random permutation each epoch, with
an active-set shrinking heuristic (coordinates stuck at the lower bound
with strongly positive gradient are skipped until the set is reset).
Termination is on the relative duality gap (primal - dual) / primal
computed over the full problem, so shrinking never masks suboptimality.

The ranker reuses the same solver on deduplicated pairwise difference
vectors (better-ranked minus worse-ranked, all labeled +1) with a
single cost and no bias term.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DataError
from .features import FeatureSpace, FeatureVector

__all__ = [
    "LinearModel",
    "SolverState",
    "TrainConfig",
    "aggregate_item_features",
    "load_linear_model",
    "predict",
    "save_linear_model",
    "train_csvm",
    "train_rank",
    "transfer_model",
]

_C_FLOOR = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Solver settings.

    c_pos / c_neg weight the positive (credible) and negative classes;
    a cost of exactly 0 is clamped to 1e-8 ("effectively
    unconstrained"). tol is the relative duality gap at which training
    stops; max_iter caps the number of epochs. The ranker uses c_pos as
    its single cost.
    """

    c_pos: float = 1.0
    c_neg: float = 1.0
    tol: float = 1e-6
    max_iter: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.c_pos < 0 or self.c_neg < 0:
            raise ValueError("costs must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def effective_costs(self) -> tuple[float, float]:
        return (max(self.c_pos, _C_FLOOR), max(self.c_neg, _C_FLOOR))


@dataclass
class SolverState:
    """Final solver diagnostics, with per-epoch objective history."""

    alpha: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    epochs: int
    converged: bool
    history: list[tuple[float, float]]


@dataclass
class LinearModel:
    """Named linear decision function: score(x) = w.x + bias.

    weights stores only nonzero coordinates; feature_names fixes the
    full training universe (needed for domain transfer). kind is
    "classifier" or "ranker".
    """

    kind: str
    feature_names: tuple[str, ...]
    weights: dict[str, float]
    bias: float
    training: dict = field(default_factory=dict)
    solver: SolverState | None = field(default=None, repr=False, compare=False)


@njit(cache=True)
def _cd_epoch(indptr, indices, data, y, diag, qii, w, alpha, order, active,
              pg_threshold):  # pragma: no cover - jitted
    """One shuffled coordinate-descent pass; returns max |projected grad|."""
    pg_max = 0.0
    for oi in range(order.shape[0]):
        i = order[oi]
        if not active[i]:
            continue
        dot = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            dot += w[indices[p]] * data[p]
        g = y[i] * dot + alpha[i] * diag[i] - 1.0
        if alpha[i] == 0.0:
            if g > pg_threshold:
                active[i] = False
                continue
            pg = g if g < 0.0 else 0.0
        else:
            pg = g
        apg = abs(pg)
        if apg > pg_max:
            pg_max = apg
        if apg > 1e-14:
            new_alpha = alpha[i] - g / qii[i]
            if new_alpha < 0.0:
                new_alpha = 0.0
            delta = (new_alpha - alpha[i]) * y[i]
            alpha[i] = new_alpha
            if delta != 0.0:
                for p in range(indptr[i], indptr[i + 1]):
                    w[indices[p]] += delta * data[p]
    return pg_max


@njit(cache=True)
def _csr_matvec(indptr, indices, data, w, out):  # pragma: no cover - jitted
    for i in range(out.shape[0]):
        dot = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            dot += w[indices[p]] * data[p]
        out[i] = dot


def _solve_dual(
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
    y: np.ndarray,
    costs: np.ndarray,
    dim: int,
    tol: float,
    max_iter: int,
    seed: int,
) -> tuple[np.ndarray, SolverState]:
    """Run coordinate descent to the requested relative duality gap."""
    n = y.shape[0]
    diag = 1.0 / (2.0 * costs)
    qii = np.zeros(n)
    for i in range(n):
        row = data[indptr[i]:indptr[i + 1]]
        qii[i] = float(row @ row) + diag[i]
    w = np.zeros(dim)
    alpha = np.zeros(n)
    active = np.ones(n, dtype=np.bool_)
    rng = np.random.default_rng(seed)
    pg_threshold = np.inf
    margins = np.empty(n)
    history: list[tuple[float, float]] = []
    gap = np.inf
    primal = dual = np.nan
    epoch = 0
    for epoch in range(1, max_iter + 1):
        order = rng.permutation(n).astype(np.int64)
        pg_max = _cd_epoch(indptr, indices, data, y, diag, qii, w, alpha, order,
                           active, pg_threshold)
        _csr_matvec(indptr, indices, data, w, margins)
        slack = np.maximum(0.0, 1.0 - y * margins)
        w_norm2 = float(w @ w)
        primal = 0.5 * w_norm2 + float(costs @ slack**2)
        dual = float(alpha.sum()) - 0.5 * (w_norm2 + float(diag @ alpha**2))
        history.append((primal, dual))
        gap = (primal - dual) / max(primal, 1e-300)
        if gap < tol:
            break
        if pg_max < 1e-10:
            # Active set exhausted without reaching the gap: reopen it.
            active[:] = True
            pg_threshold = np.inf
        else:
            pg_threshold = pg_max
    state = SolverState(
        alpha=alpha,
        primal_objective=primal,
        dual_objective=dual,
        gap=gap,
        epochs=epoch,
        converged=gap < tol,
        history=history,
    )
    return w, state


def _check_common_space(vectors: Sequence[FeatureVector]) -> FeatureSpace:
    space = vectors[0].space
    for vec in vectors[1:]:
        if vec.space is not space and vec.space.names != space.names:
            raise ValueError("feature vectors come from different feature spaces")
    return space


def _to_csr(
    vectors: Sequence[FeatureVector], bias_index: int | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nnz = sum(v.indices.size for v in vectors) + (len(vectors) if bias_index is not None else 0)
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indices = np.empty(nnz, dtype=np.int64)
    data = np.empty(nnz, dtype=np.float64)
    at = 0
    for row, vec in enumerate(vectors):
        size = vec.indices.size
        indices[at:at + size] = vec.indices
        data[at:at + size] = vec.values
        at += size
        if bias_index is not None:
            indices[at] = bias_index
            data[at] = 1.0
            at += 1
        indptr[row + 1] = at
    if not np.all(np.isfinite(data)):
        raise ValueError("non-finite feature value in training data")
    return indptr, indices, data


def train_csvm(
    examples: Sequence[tuple[FeatureVector, int]], config: TrainConfig | None = None
) -> LinearModel:
    """Train the class-weighted credibility classifier.

    examples are (vector, label) with labels +1 (credible) / -1
    (non-credible); both classes must be present.
    """
    if config is None:
        config = TrainConfig()
    if not examples:
        raise ValueError("no training examples")
    vectors = [ex[0] for ex in examples]
    labels = np.array([ex[1] for ex in examples], dtype=np.float64)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if not (np.any(labels == 1.0) and np.any(labels == -1.0)):
        raise ValueError("training data must contain both classes")
    space = _check_common_space(vectors)
    bias_index = len(space)
    indptr, indices, data = _to_csr(vectors, bias_index)
    c_pos, c_neg = config.effective_costs()
    costs = np.where(labels > 0, c_pos, c_neg)
    w, state = _solve_dual(
        indptr, indices, data, labels, costs, bias_index + 1,
        config.tol, config.max_iter, config.seed,
    )
    weights = {
        name: float(w[i]) for i, name in enumerate(space.names) if w[i] != 0.0
    }
    return LinearModel(
        kind="classifier",
        feature_names=space.names,
        weights=weights,
        bias=float(w[bias_index]),
        training={
            "c_pos": config.c_pos,
            "c_neg": config.c_neg,
            "tol": config.tol,
            "seed": config.seed,
            "epochs": state.epochs,
            "gap": state.gap,
            "converged": state.converged,
        },
        solver=state,
    )


def predict(model: LinearModel, x: FeatureVector) -> tuple[int, float]:
    """Label (+1 on ties) and raw score for one vector.

    Features absent from the model contribute nothing, which is what
    makes a transferred model directly applicable in the target domain.
    """
    score = model.bias
    weights = model.weights
    for name, value in x.items():
        weight = weights.get(name)
        if weight is not None:
            score += weight * value
    return (1 if score >= 0.0 else -1), score


def aggregate_item_features(vectors: Sequence[FeatureVector]) -> FeatureVector:
    """Element-wise mean of an item's review vectors."""
    if not vectors:
        raise ValueError("cannot aggregate zero vectors")
    space = _check_common_space(vectors)
    if len(vectors) == 1:
        vec = vectors[0]
        return FeatureVector(space, vec.indices.copy(), vec.values.copy())
    acc: dict[int, float] = {}
    for vec in vectors:
        for i, v in zip(vec.indices, vec.values):
            acc[int(i)] = acc.get(int(i), 0.0) + float(v)
    n = float(len(vectors))
    items = sorted((i, s / n) for i, s in acc.items() if s != 0.0)
    return FeatureVector(
        space,
        np.array([i for i, _ in items], dtype=np.int64),
        np.array([v for _, v in items]),
    )


def train_rank(
    items: Sequence[tuple[FeatureVector, float]],
    config: TrainConfig | None = None,
    higher_is_better: bool = True,
) -> LinearModel:
    """Train a ranking function from (item vector, reference value) pairs.

    Every unordered pair of items with distinct reference values yields
    one difference vector, better minus worse, labeled +1; the same
    dual solver fits them with a single cost (c_pos) and no bias. The
    pair list is built over a canonically sorted item order, so input
    permutations produce the identical problem.
    """
    if config is None:
        config = TrainConfig()
    if len(items) < 2:
        raise ValueError("ranking needs at least two items")
    vectors = [it[0] for it in items]
    refs = [float(it[1]) for it in items]
    space = _check_common_space(vectors)
    sign = 1.0 if higher_is_better else -1.0

    def content_key(pos: int) -> bytes:
        return vectors[pos].indices.tobytes() + vectors[pos].values.tobytes()

    order = sorted(range(len(items)), key=lambda p: (-sign * refs[p], content_key(p)))
    diffs: list[FeatureVector] = []
    for a_at, a in enumerate(order):
        for b in order[a_at + 1:]:
            if refs[a] == refs[b]:
                continue
            # order[] is best-first, so a outranks b here.
            merged: dict[int, float] = {
                int(i): float(v) for i, v in zip(vectors[a].indices, vectors[a].values)
            }
            for i, v in zip(vectors[b].indices, vectors[b].values):
                merged[int(i)] = merged.get(int(i), 0.0) - float(v)
            entries = sorted((i, v) for i, v in merged.items() if v != 0.0)
            diffs.append(
                FeatureVector(
                    space,
                    np.array([i for i, _ in entries], dtype=np.int64),
                    np.array([v for _, v in entries]),
                )
            )
    if not diffs:
        raise ValueError("all reference values are tied; no ranking pairs")
    indptr, indices, data = _to_csr(diffs, bias_index=None)
    cost = max(config.c_pos, _C_FLOOR)
    costs = np.full(len(diffs), cost)
    labels = np.ones(len(diffs))
    w, state = _solve_dual(
        indptr, indices, data, labels, costs, len(space),
        config.tol, config.max_iter, config.seed,
    )
    weights = {
        name: float(w[i]) for i, name in enumerate(space.names) if w[i] != 0.0
    }
    return LinearModel(
        kind="ranker",
        feature_names=space.names,
        weights=weights,
        bias=0.0,
        training={
            "c": config.c_pos,
            "tol": config.tol,
            "seed": config.seed,
            "pairs": len(diffs),
            "epochs": state.epochs,
            "gap": state.gap,
            "converged": state.converged,
        },
        solver=state,
    )


def transfer_model(
    model: LinearModel,
    target_names: Sequence[str],
    retrain_data: Sequence[tuple[FeatureVector, int]] | None = None,
    config: TrainConfig | None = None,
) -> LinearModel:
    """Project a trained model onto the feature names of another domain.

    Names are matched by surface form: shared n-grams and behavioral
    features carry over directly, and the consistency roles (deviation,
    inferred distribution, divergence, burstiness) share fixed names.
    Facet-cell names embed their facet count, so facet distributions
    trained with a different dimension never match and drop out. With
    retrain_data the model is refit on the shared subspace; otherwise
    weights outside the shared set are zeroed out and the bias is kept.
    """
    target_set = set(target_names)
    shared = tuple(n for n in model.feature_names if n in target_set)
    if not shared:
        raise ValueError("no shared features between source and target")
    if retrain_data is None:
        weights = {n: w for n, w in model.weights.items() if n in target_set}
        return LinearModel(
            kind=model.kind,
            feature_names=shared,
            weights=weights,
            bias=model.bias,
            training=dict(model.training, transferred=True, retrained=False),
        )
    if model.kind != "classifier":
        raise ValueError("retraining a transferred model is defined for classifiers")
    shared_space = FeatureSpace(shared, {"shared": slice(0, len(shared))})
    shared_pos = {n: i for i, n in enumerate(shared)}
    projected: list[tuple[FeatureVector, int]] = []
    for vec, label in retrain_data:
        entries = sorted(
            (shared_pos[name], value)
            for name, value in vec.items()
            if name in shared_pos and value != 0.0
        )
        projected.append(
            (
                FeatureVector(
                    shared_space,
                    np.array([i for i, _ in entries], dtype=np.int64),
                    np.array([v for _, v in entries]),
                ),
                label,
            )
        )
    refit = train_csvm(projected, config)
    refit.training.update(transferred=True, retrained=True)
    return refit


_LINEAR_FORMAT = "revcred-linear-model"
_LINEAR_VERSION = 1


def save_linear_model(model: LinearModel, path: str | Path) -> None:
    """Write a linear model: JSON header line, one feature name per
    line, then little-endian float64 weights (dense, in name order)
    followed by the bias."""
    header = {
        "format": _LINEAR_FORMAT,
        "version": _LINEAR_VERSION,
        "kind": model.kind,
        "n_features": len(model.feature_names),
        "training": {
            k: v for k, v in model.training.items()
            if isinstance(v, (int, float, bool, str))
        },
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
        fh.write(b"\n")
        for name in model.feature_names:
            fh.write(name.encode("utf-8"))
            fh.write(b"\n")
        dense = np.array(
            [model.weights.get(n, 0.0) for n in model.feature_names], dtype="<f8"
        )
        fh.write(struct.pack("<Q", dense.size))
        fh.write(dense.tobytes())
        fh.write(struct.pack("<d", model.bias))


def load_linear_model(path: str | Path) -> LinearModel:
    """Read a model written by save_linear_model."""
    with Path(path).open("rb") as fh:
        try:
            header = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise DataError(f"{path}: not a linear model file") from None
        if header.get("format") != _LINEAR_FORMAT:
            raise DataError(f"{path}: not a linear model file")
        if header.get("version") != _LINEAR_VERSION:
            raise DataError(f"{path}: unsupported model version {header.get('version')!r}")
        n = header["n_features"]
        names = []
        for _ in range(n):
            line = fh.readline()
            if not line:
                raise DataError(f"{path}: truncated name list")
            names.append(line.decode("utf-8").rstrip("\n"))
        prefix = fh.read(8)
        if len(prefix) != 8:
            raise DataError(f"{path}: truncated weight block")
        (count,) = struct.unpack("<Q", prefix)
        if count != n:
            raise DataError(f"{path}: weight count {count} does not match {n} names")
        payload = fh.read(8 * count)
        if len(payload) != 8 * count:
            raise DataError(f"{path}: truncated weight block")
        weights_arr = np.frombuffer(payload, dtype="<f8")
        bias_raw = fh.read(8)
        if len(bias_raw) != 8:
            raise DataError(f"{path}: missing bias")
        (bias,) = struct.unpack("<d", bias_raw)
    weights = {
        name: float(w) for name, w in zip(names, weights_arr) if w != 0.0
    }
    return LinearModel(
        kind=header["kind"],
        feature_names=tuple(names),
        weights=weights,
        bias=bias,
        training=dict(header.get("training", {})),
    )
