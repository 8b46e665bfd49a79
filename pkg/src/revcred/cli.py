"""Command-line driver for the review-credibility pipeline.

Subcommands cover the whole flow: ``synth`` and ``ingest`` produce
corpora, ``train-facets`` fits the facet-sentiment model,
``features`` extracts sparse vectors, ``train`` fits the classifier,
``classify`` scores reviews (``--explain`` adds per-review evidence
reports), ``rank-items`` orders items by credibility-filtered mean
rating, ``evaluate`` runs cross-validation or rank-correlation
checks, ``sweep-cneg`` traces the negative-class cost curve, and
``transfer`` projects a classifier onto another feature space.

Exit codes: 0 success, 1 usage error, 2 data error (malformed or
inconsistent input files). All randomness flows from ``--seed``:
each stage derives its own stream via
``numpy.random.SeedSequence((seed, stage_id))`` with a fixed per-stage
id, so reruns with the same inputs and seed write byte-identical
artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .corpus import (
    TokenizeConfig,
    VocabConfig,
    build_vocabulary,
    load_corpus,
    load_stopwords,
    tokenize,
    write_corpus,
)
from .errors import DataError
from .evaluation import (
    cross_validate,
    kendall_tau_b,
    kendall_tau_m,
    long_tail_report,
    rank_items,
    sweep_cneg,
)
from .features import (
    FeatureConfig,
    FeaturePipeline,
    read_feature_matrix,
    read_feature_names,
    write_feature_matrix,
    write_feature_names,
)
from .jst import (
    JstHyperParams,
    load_model,
    model_vocabulary,
    save_model,
    train as train_facet_model,
)
from .lexicon import builtin_lexicon, load_lexicon
from .svm import (
    TrainConfig,
    load_linear_model,
    predict,
    save_linear_model,
    train_csvm,
    transfer_model,
)
from .synth import SynthSpec, generate, load_spec, write_truth

__all__ = ["main"]

log = logging.getLogger("revcred")

_LABEL_TO_SIGN = {"credible": 1, "non_credible": -1}
_SIGN_TO_LABEL = {1: "credible", -1: "non_credible"}

# Fixed per-stage ids for seed derivation; changing one would silently
# change every artifact downstream of that stage.
_STAGE_IDS = {
    "synth": 0,
    "train-facets": 1,
    "train": 2,
    "evaluate": 3,
    "sweep-cneg": 4,
}


def stage_seed(seed: int, stage: str) -> int:
    """Derive the RNG seed for one pipeline stage from the global seed."""
    ss = np.random.SeedSequence((int(seed), _STAGE_IDS[stage]))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"grid needs step > 0 and hi >= lo, got {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9))
    return [lo + i * step for i in range(count + 1)]


def _open_out(path: str | None):
    if path is None:
        return sys.stdout
    return Path(path).open("w", encoding="utf-8")


def _tokenize_config(args) -> TokenizeConfig:
    if getattr(args, "stopwords", None):
        return TokenizeConfig(stopwords=load_stopwords(args.stopwords))
    return TokenizeConfig()


def _load_labeled_matrix(matrix_path: str, names_path: str):
    """Matrix rows that carry labels, as (vector, sign) training pairs."""
    ids, vectors, labels = read_feature_matrix(matrix_path, names_path)
    examples = [(v, lab) for v, lab in zip(vectors, labels) if lab is not None]
    dropped = len(vectors) - len(examples)
    if dropped:
        log.info("ignoring %d unlabeled rows", dropped)
    if not examples:
        raise DataError(f"{matrix_path}: no labeled rows")
    return ids, vectors, labels, examples


def _feature_config(args) -> FeatureConfig:
    return FeatureConfig(
        r_max=args.r_max,
        tier=args.tier,
        symmetric_burstiness=args.symmetric_burstiness,
        leave_one_out_item_profile=args.loo_item_profile,
        include_item_jsd=not args.no_item_jsd,
        pi_aggregation=args.pi_aggregation,
    )


def _pipeline_from_args(args) -> FeaturePipeline:
    model = load_model(args.facet_model)
    return FeaturePipeline(
        model,
        model_vocabulary(model),
        config=_feature_config(args),
        tokenize_config=_tokenize_config(args),
    )


def _load_reference_ranks(path: str) -> dict[str, float]:
    """Item -> rank, from either a flat JSON map or a truth sidecar."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, dict) and "reference_ranks" in raw:
        raw = raw["reference_ranks"]
    if not isinstance(raw, dict) or not raw:
        raise DataError(f"{path}: expected a non-empty item -> rank map")
    try:
        return {str(item): float(rank) for item, rank in raw.items()}
    except (TypeError, ValueError):
        raise DataError(f"{path}: ranks must be numeric") from None


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    spec = load_spec(args.spec) if args.spec else SynthSpec()
    if args.seed is not None:
        spec = replace(spec, seed=stage_seed(args.seed, "synth"))
    corpus, truth = generate(spec)
    write_corpus(args.out, corpus)
    truth_path = args.truth if args.truth else f"{args.out}.truth.json"
    write_truth(truth, truth_path)
    n_spam = sum(1 for lab in truth["labels"].values() if lab == "non_credible")
    print(
        f"wrote {len(corpus)} reviews over {spec.n_items} items "
        f"({n_spam} non-credible) to {args.out}; truth in {truth_path}"
    )
    return 0


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.path, format=args.format, r_max=args.r_max)
    if args.out:
        write_corpus(args.out, corpus)
    labeled = sum(1 for r in corpus.reviews if r.label is not None)
    print(
        f"{len(corpus)} reviews, {len(corpus.by_item)} items, "
        f"{len(corpus.by_user)} users, {labeled} labeled"
    )
    return 0


def cmd_train_facets(args) -> int:
    corpus = load_corpus(args.corpus, format=args.format, r_max=args.r_max)
    tok_config = _tokenize_config(args)
    token_seqs = [tokenize(r.text, tok_config) for r in corpus.reviews]
    vocab = build_vocabulary(
        token_seqs, VocabConfig(min_df=args.min_df, max_vocab=args.max_vocab)
    )
    if len(vocab) == 0:
        raise DataError(f"{args.corpus}: empty vocabulary after min_df filtering")
    if args.no_lexicon:
        lexicon = None
    elif args.positive_words or args.negative_words:
        if not (args.positive_words and args.negative_words):
            raise DataError("custom lexicon needs both --positive-words and --negative-words")
        lexicon = load_lexicon(args.positive_words, args.negative_words)
    else:
        lexicon = builtin_lexicon()
    hyper = JstHyperParams(
        n_facets=args.k,
        n_labels=args.labels,
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        iterations=args.iterations,
        burn_in=args.burn_in,
        sample_lag=args.sample_lag,
        seed=stage_seed(args.seed, "train-facets"),
    )
    log.info(
        "sampling %d sweeps over %d docs (K=%d, L=%d, V=%d)",
        hyper.iterations, len(token_seqs), args.k, args.labels, len(vocab),
    )
    model = train_facet_model(token_seqs, vocab, lexicon, hyper)
    save_model(model, args.out)
    print(
        f"facet model: K={model.n_facets}, L={model.n_labels}, "
        f"V={len(vocab)}, docs={len(token_seqs)} -> {args.out}"
    )
    return 0


def cmd_features(args) -> int:
    corpus = load_corpus(args.corpus, format=args.format, r_max=args.r_max)
    pipeline = _pipeline_from_args(args)
    vectors = pipeline.extract(corpus, jobs=args.jobs)
    labels = [
        None if r.label is None else _LABEL_TO_SIGN[r.label] for r in corpus.reviews
    ]
    review_ids = [r.review_id for r in corpus.reviews]
    write_feature_matrix(args.out, review_ids, vectors, labels)
    names_path = args.names if args.names else f"{args.out}.names"
    write_feature_names(names_path, pipeline.space)
    print(
        f"wrote {len(vectors)} x {len(pipeline.space.names)} matrix to "
        f"{args.out}; names in {names_path}"
    )
    return 0


def cmd_train(args) -> int:
    names_path = args.names if args.names else f"{args.matrix}.names"
    _, _, _, examples = _load_labeled_matrix(args.matrix, names_path)
    config = TrainConfig(
        c_pos=args.c_pos,
        c_neg=args.c_neg,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=stage_seed(args.seed, "train"),
    )
    model = train_csvm(examples, config)
    save_linear_model(model, args.out)
    info = model.training
    print(
        f"classifier on {len(examples)} examples: epochs={info['epochs']}, "
        f"gap={info['gap']:.3g}, converged={info['converged']} -> {args.out}"
    )
    return 0


def _percentile_rank(sorted_values: np.ndarray, value: float) -> float:
    """Share of the population at or below value, as a percentage."""
    if sorted_values.size == 0:
        return 0.0
    at_or_below = int(np.searchsorted(sorted_values, value, side="right"))
    return 100.0 * at_or_below / sorted_values.size


def _evidence_report(
    review,
    vector,
    sign: int,
    score: float,
    weights: dict[str, float],
    item_burst_sorted: np.ndarray,
    dev_sorted: np.ndarray,
    jsd_sorted: np.ndarray | None,
    n_labels: int,
) -> dict:
    burst = vector.get("burstiness")
    burst_pct = _percentile_rank(item_burst_sorted, burst)
    dev_l1 = sum(vector.get(f"rating_dev:l{j}") for j in range(n_labels))
    dev_pct = _percentile_rank(dev_sorted, dev_l1)
    contributions = []
    for name, value in vector.items():
        weight = weights.get(name)
        if weight:
            contributions.append((name, weight * value))
    contributions.sort(key=lambda nv: (-abs(nv[1]), nv[0]))
    top = [
        {"name": name, "weight_times_value": wv} for name, wv in contributions[:5]
    ]
    signals = {
        "burstiness": {"value": burst, "item_percentile": burst_pct},
        "rating_deviation_l1": {"value": dev_l1, "percentile": dev_pct},
    }
    reasons = [
        f"burstiness {burst:.3f} sits at the {burst_pct:.0f}th percentile "
        f"within item {review.item_id}",
        f"rating deviates from text sentiment by {dev_l1:.3f} (L1), "
        f"{dev_pct:.0f}th percentile corpus-wide",
    ]
    if jsd_sorted is not None:
        jsd = vector.get("item_jsd")
        jsd_pct = _percentile_rank(jsd_sorted, jsd)
        signals["item_divergence"] = {"value": jsd, "percentile": jsd_pct}
        reasons.append(
            f"facet profile diverges from the item profile by {jsd:.3f} (JSD), "
            f"{jsd_pct:.0f}th percentile corpus-wide"
        )
    if top:
        reasons.append(
            f"strongest classifier signal: {top[0]['name']} "
            f"({top[0]['weight_times_value']:+.4f})"
        )
    return {
        "review_id": review.review_id,
        "label": _SIGN_TO_LABEL[sign],
        "score": score,
        "signals": signals,
        "top_contributions": top,
        "reasons": reasons,
    }


def cmd_classify(args) -> int:
    corpus = load_corpus(args.corpus, format=args.format, r_max=args.r_max)
    classifier = load_linear_model(args.model)
    pipeline = _pipeline_from_args(args)
    vectors = pipeline.extract(corpus, jobs=args.jobs)
    predictions = [predict(classifier, v) for v in vectors]
    out = _open_out(args.out)
    try:
        if not args.explain:
            for review, (sign, score) in zip(corpus.reviews, predictions):
                out.write(f"{review.review_id}\t{_SIGN_TO_LABEL[sign]}\t{score!r}\n")
        else:
            n_labels = pipeline.model.n_labels
            dev_sorted = np.sort(
                [
                    sum(v.get(f"rating_dev:l{j}") for j in range(n_labels))
                    for v in vectors
                ]
            )
            include_jsd = pipeline.config.include_item_jsd
            jsd_sorted = (
                np.sort([v.get("item_jsd") for v in vectors]) if include_jsd else None
            )
            burst_by_item = {
                item_id: np.sort([vectors[p].get("burstiness") for p in positions])
                for item_id, positions in corpus.by_item.items()
            }
            for pos, (review, (sign, score)) in enumerate(
                zip(corpus.reviews, predictions)
            ):
                report = _evidence_report(
                    review,
                    vectors[pos],
                    sign,
                    score,
                    classifier.weights,
                    burst_by_item[review.item_id],
                    dev_sorted,
                    jsd_sorted,
                    n_labels,
                )
                out.write(json.dumps(report, ensure_ascii=False))
                out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    flagged = sum(1 for sign, _ in predictions if sign == -1)
    log.info("classified %d reviews, %d flagged non-credible", len(vectors), flagged)
    return 0


def cmd_rank_items(args) -> int:
    corpus = load_corpus(args.corpus, format=args.format, r_max=args.r_max)
    if args.model:
        if not args.facet_model:
            raise SystemExit(
                _top_parser_error("rank-items with --model needs --facet-model")
            )
        pipeline = _pipeline_from_args(args)
        classifier = load_linear_model(args.model)
        ranking = rank_items(corpus, classifier, pipeline, jobs=args.jobs)
        scores = ranking.scores
        credible = ranking.credible_counts
        totals = ranking.review_counts
    else:
        scores, credible, totals = {}, {}, {}
        for item_id, positions in corpus.by_item.items():
            ratings = [corpus.reviews[p].rating for p in positions]
            scores[item_id] = sum(ratings) / len(ratings)
            credible[item_id] = len(ratings)
            totals[item_id] = len(ratings)
    order = sorted(scores, key=lambda i: (-scores[i], i))
    out = _open_out(args.out)
    try:
        out.write("item_id,score,credible_reviews,total_reviews\n")
        for item_id in order:
            out.write(
                f"{item_id},{scores[item_id]!r},{credible[item_id]},{totals[item_id]}\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _read_scores_csv(path: str) -> tuple[dict[str, float], dict[str, int]]:
    scores: dict[str, float] = {}
    counts: dict[str, int] = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("item_id,"):
        raise DataError(f"{path}: expected a rank-items CSV with a header")
    for line_no, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataError(f"{path}: line {line_no}: expected 4 columns")
        item_id, score, _, total = parts
        if item_id in scores:
            raise DataError(f"{path}: line {line_no}: duplicate item {item_id!r}")
        try:
            scores[item_id] = float(score)
            counts[item_id] = int(total)
        except ValueError:
            raise DataError(f"{path}: line {line_no}: bad numeric field") from None
    if not scores:
        raise DataError(f"{path}: no data rows")
    return scores, counts


def cmd_evaluate(args) -> int:
    if bool(args.matrix) == bool(args.scores):
        raise SystemExit(
            _top_parser_error("evaluate needs exactly one of --matrix or --scores")
        )
    if args.scores and not args.reference:
        raise SystemExit(_top_parser_error("--scores needs --reference"))
    report: dict
    if args.matrix:
        names_path = args.names if args.names else f"{args.matrix}.names"
        _, _, _, examples = _load_labeled_matrix(args.matrix, names_path)
        seed = stage_seed(args.seed, "evaluate")
        config = TrainConfig(
            c_pos=args.c_pos,
            c_neg=args.c_neg,
            tol=args.tol,
            max_iter=args.max_iter,
            seed=seed,
        )
        result = cross_validate(examples, k=args.folds, config=config, seed=seed)
        report = {
            "accuracy": result.mean,
            "accuracy_stdev": result.stdev,
            "fold_accuracies": list(result.folds),
        }
        print(
            f"cv_accuracy mean={result.mean:.4f} stdev={result.stdev:.4f} "
            f"folds={args.folds}"
        )
        for i, acc in enumerate(result.folds):
            print(f"fold {i}: {acc:.4f}")
    else:
        scores, counts = _read_scores_csv(args.scores)
        reference = _load_reference_ranks(args.reference)
        missing = sorted(i for i in scores if i not in reference)
        if missing:
            raise DataError(f"scored items missing from reference: {missing[:5]}")
        items = sorted(scores)
        x = [scores[i] for i in items]
        y = [-reference[i] for i in items]
        tb = kendall_tau_b(x, y)
        tm = kendall_tau_m(x, y)
        report = {"tau_b": tb.tau, "tau_m": tm.tau, "n_items": len(items)}
        print(f"tau_b={tb.tau:.4f} tau_m={tm.tau:.4f} items={len(items)}")
        if args.long_tail:
            thresholds = [float(t) for t in args.long_tail.split(",")] + [math.inf]
            strata = []
            for threshold, n_items, tau in long_tail_report(
                scores, reference, counts, thresholds
            ):
                shown = "all" if math.isinf(threshold) else f"<={threshold:g}"
                tau_s = "n/a" if tau is None else f"{tau:.4f}"
                print(f"reviews {shown}: items={n_items} tau_m={tau_s}")
                strata.append(
                    {
                        "threshold": None if math.isinf(threshold) else threshold,
                        "n_items": n_items,
                        "tau_m": tau,
                    }
                )
            report["long_tail"] = strata
    if args.out:
        with Path(args.out).open("w", encoding="utf-8") as fh:
            json.dump(report, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    return 0


def cmd_sweep_cneg(args) -> int:
    train_names = args.names if args.names else f"{args.matrix}.names"
    _, _, _, examples = _load_labeled_matrix(args.matrix, train_names)
    corpus = load_corpus(args.corpus, format=args.format, r_max=args.r_max)
    pipeline = _pipeline_from_args(args)
    vectors = pipeline.extract(corpus, jobs=args.jobs)
    validation: dict[str, list] = {}
    for item_id, positions in corpus.by_item.items():
        validation[item_id] = [
            (vectors[p], corpus.reviews[p].rating) for p in positions
        ]
    reference = _load_reference_ranks(args.reference)
    missing = sorted(i for i in validation if i not in reference)
    if missing:
        raise DataError(f"validation items missing from reference: {missing[:5]}")
    try:
        grid = _parse_grid(args.grid)
    except ValueError as exc:
        raise SystemExit(_top_parser_error(str(exc)))
    config = TrainConfig(
        c_pos=args.c_pos,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=stage_seed(args.seed, "sweep-cneg"),
    )
    result = sweep_cneg(examples, validation, reference, grid, config)
    out = _open_out(args.out)
    try:
        out.write("c_neg,tau_m,fraction_flagged\n")
        for c_neg, tau, fraction in result.rows:
            out.write(f"{c_neg!r},{tau!r},{fraction!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("best c_neg = %r", result.best_cneg)
    return 0


def cmd_transfer(args) -> int:
    source = load_linear_model(args.model)
    target_space = read_feature_names(args.names)
    retrain_data = None
    config = None
    if args.matrix:
        _, _, _, examples = _load_labeled_matrix(args.matrix, args.names)
        retrain_data = examples
        config = TrainConfig(
            c_pos=args.c_pos,
            c_neg=args.c_neg,
            tol=args.tol,
            max_iter=args.max_iter,
            seed=stage_seed(args.seed, "train"),
        )
    model = transfer_model(
        source, target_space.names, retrain_data=retrain_data, config=config
    )
    save_linear_model(model, args.out)
    shared = len(set(source.feature_names) & set(target_space.names))
    mode = "retrained" if retrain_data is not None else "projected"
    print(
        f"{mode} onto {len(target_space.names)} target features "
        f"({shared} shared with source) -> {args.out}"
    )
    return 0


# ----------------------------------------------------------- parser wiring


def _top_parser_error(message: str) -> int:
    print(f"revcred: error: {message}", file=sys.stderr)
    return 1


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl",
                   help="corpus file format")
    p.add_argument("--r-max", type=int, default=5, help="rating scale maximum")
    p.add_argument("--stopwords", metavar="FILE",
                   help="stopword file overriding the built-in list")


def _add_feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tier", choices=("minus", "plus"), default="minus",
                   help="behavioral tier: minus needs no platform metadata")
    p.add_argument("--symmetric-burstiness", action="store_true",
                   help="use |t_i - t_j| inside the burstiness kernel")
    p.add_argument("--no-item-jsd", action="store_true",
                   help="drop the review-vs-item divergence feature")
    p.add_argument("--loo-item-profile", action="store_true",
                   help="exclude the review itself from its item profile")
    p.add_argument("--pi-aggregation", choices=("joint", "per_facet"),
                   default="joint", help="inferred-rating aggregation mode")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")


def _add_solver_flags(p: argparse.ArgumentParser, with_cneg: bool = True) -> None:
    p.add_argument("--c-pos", type=float, default=1.0, help="cost on credible examples")
    if with_cneg:
        p.add_argument("--c-neg", type=float, default=1.0,
                       help="cost on non-credible examples")
    p.add_argument("--tol", type=float, default=1e-6, help="relative duality gap target")
    p.add_argument("--max-iter", type=int, default=10000, help="epoch cap")


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="revcred", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    registry: dict[str, argparse.ArgumentParser] = {}

    def add(
        name: str,
        func,
        help_text: str,
        required: tuple[str, ...] = (),
        seed_default: int | None = 0,
    ) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="JSON",
                       help="JSON file supplying flag defaults; explicit flags win")
        p.add_argument("--seed", type=int, default=seed_default, help="global seed")
        p.set_defaults(func=func, _required=required)
        registry[name] = p
        return p

    p = add("synth", cmd_synth, "generate a labeled synthetic corpus",
            required=("out",), seed_default=None)
    p.add_argument("--spec", metavar="JSON", help="generator settings file")
    p.add_argument("--out", help="corpus JSONL path")
    p.add_argument("--truth", help="truth sidecar path (default OUT.truth.json)")

    p = add("ingest", cmd_ingest, "validate a corpus and echo its size")
    p.add_argument("path", help="corpus file")
    p.add_argument("--out", help="write the normalized corpus as JSONL")
    _add_corpus_flags(p)

    p = add("train-facets", cmd_train_facets, "fit the facet-sentiment model",
            required=("corpus", "out", "k"))
    p.add_argument("--corpus")
    p.add_argument("--out", help="model file path")
    p.add_argument("--k", type=int, help="number of facets")
    p.add_argument("--labels", type=int, default=2, help="number of sentiment labels")
    p.add_argument("--alpha", type=float, default=None,
                   help="facet smoothing (default 50/K)")
    p.add_argument("--beta", type=float, default=0.01, help="word smoothing")
    p.add_argument("--gamma", type=float, default=0.1, help="label smoothing")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--sample-lag", type=int, default=50)
    p.add_argument("--min-df", type=int, default=2, help="vocabulary document-frequency floor")
    p.add_argument("--max-vocab", type=int, default=50000)
    p.add_argument("--positive-words", metavar="FILE", help="custom positive lexicon")
    p.add_argument("--negative-words", metavar="FILE", help="custom negative lexicon")
    p.add_argument("--no-lexicon", action="store_true",
                   help="skip lexicon seeding entirely")
    _add_corpus_flags(p)

    p = add("features", cmd_features, "extract sparse feature vectors",
            required=("corpus", "facet_model", "out"))
    p.add_argument("--corpus")
    p.add_argument("--facet-model")
    p.add_argument("--out", help="matrix path")
    p.add_argument("--names", help="name sidecar path (default OUT.names)")
    _add_feature_flags(p)
    _add_corpus_flags(p)

    p = add("train", cmd_train, "fit the credibility classifier",
            required=("matrix", "out"))
    p.add_argument("--matrix", help="labeled feature matrix")
    p.add_argument("--names", help="name sidecar (default MATRIX.names)")
    p.add_argument("--out", help="classifier file path")
    _add_solver_flags(p)

    p = add("classify", cmd_classify, "score reviews, optionally with evidence",
            required=("corpus", "facet_model", "model"))
    p.add_argument("--corpus")
    p.add_argument("--facet-model")
    p.add_argument("--model", help="classifier file")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--explain", action="store_true",
                   help="emit one evidence JSON object per review")
    _add_feature_flags(p)
    _add_corpus_flags(p)

    p = add("rank-items", cmd_rank_items, "order items by filtered mean rating",
            required=("corpus",))
    p.add_argument("--corpus")
    p.add_argument("--facet-model", help="needed when --model is given")
    p.add_argument("--model", help="classifier; omit for the unfiltered baseline")
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_feature_flags(p)
    _add_corpus_flags(p)

    p = add("evaluate", cmd_evaluate, "cross-validate or score a ranking")
    p.add_argument("--matrix", help="labeled matrix for cross-validation")
    p.add_argument("--names", help="name sidecar (default MATRIX.names)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--scores", help="rank-items CSV to score against a reference")
    p.add_argument("--reference", help="reference ranks JSON (rank 1 = best)")
    p.add_argument("--long-tail", metavar="T1,T2,...",
                   help="also report tau_m per review-count stratum")
    p.add_argument("--out", help="write the report as JSON")
    _add_solver_flags(p)

    p = add("sweep-cneg", cmd_sweep_cneg, "trace the negative-cost curve",
            required=("matrix", "corpus", "facet_model", "reference", "grid"))
    p.add_argument("--matrix", help="labeled training matrix")
    p.add_argument("--names", help="name sidecar (default MATRIX.names)")
    p.add_argument("--corpus", help="validation corpus")
    p.add_argument("--facet-model")
    p.add_argument("--reference", help="reference ranks JSON")
    p.add_argument("--grid", metavar="LO:HI:STEP", help="inclusive cost grid")
    p.add_argument("--out", help="CSV path (default stdout)")
    _add_solver_flags(p, with_cneg=False)
    _add_feature_flags(p)
    _add_corpus_flags(p)

    p = add("transfer", cmd_transfer, "project a classifier onto another domain",
            required=("model", "names", "out"))
    p.add_argument("--model", help="source classifier")
    p.add_argument("--names", help="target feature names file")
    p.add_argument("--matrix", help="labeled target matrix: retrain instead of project")
    p.add_argument("--out")
    _add_solver_flags(p)

    return parser, registry


def _apply_config(args, registry) -> None:
    """Fill parser defaults from the --config JSON; explicit flags win."""
    path = getattr(args, "config", None)
    if not path:
        return
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise DataError(f"{path}: config must be a JSON object")
    parser = registry[args.command]
    defaults = {
        action.dest: action.default
        for action in parser._actions
        if action.dest not in ("help", "config", "func")
    }
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in defaults:
            raise DataError(f"{path}: unknown option {key!r} for {args.command}")
        if getattr(args, dest) == defaults[dest]:
            setattr(args, dest, value)


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(message)s", level=logging.INFO)
    parser, registry = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        _apply_config(args, registry)
        missing = [d for d in args._required if getattr(args, d) is None]
        if missing:
            flags = ", ".join("--" + d.replace("_", "-") for d in missing)
            registry[args.command].error(f"the following are required: {flags}")
        return args.func(args)
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    except (DataError, ValueError) as exc:
        print(f"revcred: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"revcred: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
