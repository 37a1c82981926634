"""Negation-scope probing: pattern matching, zones, datasets, probes and reports."""

from ._core import (
    AlignmentError,
    DataError,
    Error,
    FormatError,
    NotFoundError,
    ParseError,
    ProbeModel,
    Sentence,
    Tokenization,
    ValidationError,
    annotate,
    breakdown,
    build_dataset,
    clause_gap,
    clause_of,
    corpus_hash,
    evaluate,
    ingest,
    load_probe,
    neg_scope,
    notnpi_masks,
    parse_conllu,
    perm_test,
    pol_masks,
    project_zones,
    read_corpus,
    read_embeddings,
    read_tokenization,
    synth_embeddings,
    train_probe,
    word_level_tokenization,
    write_corpus,
)

__all__ = [name for name in dir() if not name.startswith("_")]
