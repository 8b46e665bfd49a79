"""Review-credibility detection: facet-sentiment modeling, consistency
features, a class-weighted linear classifier, and credibility-filtered
item ranking."""

from .corpus import (
    Corpus,
    Review,
    TokenizeConfig,
    VocabConfig,
    Vocabulary,
    build_vocabulary,
    load_corpus,
    tokenize,
    write_corpus,
)
from .errors import DataError
from .evaluation import (
    CrossValResult,
    ItemRanking,
    RankCorrelation,
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
    FeatureSpace,
    FeatureVector,
    burstiness,
    js_divergence,
    rating_deviation,
    rating_to_distribution,
)
from .jst import (
    JstHyperParams,
    JstModel,
    infer_review_facets,
    item_facet_profile,
    load_model,
    model_vocabulary,
    save_model,
)
from .jst import train as train_facets
from .lexicon import SentimentLexicon, builtin_lexicon, load_lexicon
from .svm import (
    LinearModel,
    TrainConfig,
    load_linear_model,
    predict,
    save_linear_model,
    train_csvm,
    train_rank,
    transfer_model,
)
from .synth import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CrossValResult",
    "DataError",
    "FeatureConfig",
    "FeaturePipeline",
    "FeatureSpace",
    "FeatureVector",
    "ItemRanking",
    "JstHyperParams",
    "JstModel",
    "LinearModel",
    "RankCorrelation",
    "Review",
    "SentimentLexicon",
    "SynthSpec",
    "TokenizeConfig",
    "TrainConfig",
    "VocabConfig",
    "Vocabulary",
    "builtin_lexicon",
    "build_vocabulary",
    "burstiness",
    "cross_validate",
    "generate",
    "infer_review_facets",
    "item_facet_profile",
    "js_divergence",
    "kendall_tau_b",
    "kendall_tau_m",
    "load_corpus",
    "load_lexicon",
    "load_linear_model",
    "load_model",
    "long_tail_report",
    "model_vocabulary",
    "predict",
    "rank_items",
    "rating_deviation",
    "rating_to_distribution",
    "save_linear_model",
    "save_model",
    "sweep_cneg",
    "tokenize",
    "train_csvm",
    "train_facets",
    "train_rank",
    "transfer_model",
    "write_corpus",
]
