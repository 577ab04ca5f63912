"""Multi-task sequence labeling toolkit for token-level error detection."""

from seqlab._seqlab import (
    EvalReport,
    Model,
    Prediction,
    TrainedResult,
    evaluate_files,
    fbeta,
    frequency_bin,
    load_corpus_file,
    preprocess_token,
    spans_to_token_labels,
    synth_corpus_file,
    train,
    tune,
)

__all__ = [
    "EvalReport",
    "Model",
    "Prediction",
    "TrainedResult",
    "evaluate_files",
    "fbeta",
    "frequency_bin",
    "load_corpus_file",
    "preprocess_token",
    "spans_to_token_labels",
    "synth_corpus_file",
    "train",
    "tune",
]
