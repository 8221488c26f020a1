"""Batch toolkit for detecting coordinated troll accounts on Twitter.

The package ingests account/tweet corpora into capped timelines, turns
each timeline into profile, behavioral, stop-word, language, and
bag-of-words features, trains and cross-validates lightweight
classifiers, scores unlabeled accounts, and produces keyword-contrast,
inter-rater agreement, and cohort comparison reports.  Every stage is
deterministic under a single master seed.
"""

__version__ = "0.1.0"

from .corpus import (Account, Dataset, Timeline, Tweet, build_timelines, convert_archive_csv,
                     dataset_summary, ingest, load_dataset, render_summary, save_dataset)
from .errors import SchemaMismatchError, StageError, ValidationError
from .featurize import (FeatureSchema, build_schema, compute_stats, featurize_dataset,
                        load_schema, load_vectors, save_schema, save_vectors, tokenize)
from .models import (BoostedModel, CvReport, LogisticModel, Metrics, ModelBundle, Prediction,
                     TreeModel, auc, cross_validate, evaluate, load_bundle, save_bundle, score,
                     stratified_folds, train_adaboost, train_bundle, train_logistic,
                     train_model, train_tree)
from .pipeline import PipelineConfig, load_config, run_pipeline
from .review import (aggregate_ratings, cohort_compare, krippendorff_alpha, load_ratings,
                     sample_for_review)
from .sage import SageResult, count_ngrams, sage_fit, sage_report
from .synth import SyntheticSpec, generate_synthetic

__all__ = [
    "__version__",
    "Account", "Tweet", "Timeline", "Dataset", "ingest", "build_timelines",
    "save_dataset", "load_dataset", "dataset_summary", "render_summary",
    "convert_archive_csv",
    "ValidationError", "SchemaMismatchError", "StageError",
    "FeatureSchema", "compute_stats", "build_schema", "featurize_dataset",
    "tokenize", "save_schema", "load_schema", "save_vectors", "load_vectors",
    "LogisticModel", "TreeModel", "BoostedModel", "Metrics", "CvReport",
    "ModelBundle", "Prediction", "auc", "evaluate", "train_logistic", "train_tree",
    "train_adaboost", "train_model", "train_bundle", "cross_validate",
    "stratified_folds", "score", "save_bundle", "load_bundle",
    "PipelineConfig", "load_config", "run_pipeline",
    "krippendorff_alpha", "aggregate_ratings", "sample_for_review", "load_ratings",
    "cohort_compare",
    "SageResult", "sage_fit", "sage_report", "count_ngrams",
    "SyntheticSpec", "generate_synthetic",
]
