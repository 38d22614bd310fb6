"""Dataset parsing, vocabulary, embeddings, and trigger augmentation."""

from .embeddings import EmbeddingTable, load_embeddings
from .parsers import (
    DUMMY_INTENT,
    load_custom,
    load_dataset,
    load_e2e,
    load_webnlg,
    parse_custom,
    parse_e2e,
    parse_webnlg,
)
from .samples import DataSample, expand_training_pairs, fields_signature, to_record_line
from .synthetic import TEST_NAMES, TRAIN_NAMES, synthetic_corpus, synthetic_splits
from .tokenizer import detokenize, normalize_field, tokenize
from .triggers import augment_with_triggers
from .vocab import (
    EOS,
    EOS_ID,
    PAD,
    PAD_ID,
    RESERVED,
    SOS,
    SOS_ID,
    UNK,
    UNK_ID,
    UNK_INTENT,
    IntentSet,
    Vocabulary,
    build_intents,
    build_vocab,
)

__all__ = [
    "DUMMY_INTENT",
    "DataSample",
    "EOS",
    "EOS_ID",
    "EmbeddingTable",
    "IntentSet",
    "PAD",
    "PAD_ID",
    "RESERVED",
    "SOS",
    "SOS_ID",
    "TEST_NAMES",
    "TRAIN_NAMES",
    "UNK",
    "UNK_ID",
    "UNK_INTENT",
    "Vocabulary",
    "augment_with_triggers",
    "build_intents",
    "build_vocab",
    "detokenize",
    "expand_training_pairs",
    "fields_signature",
    "load_custom",
    "load_dataset",
    "load_e2e",
    "load_embeddings",
    "load_webnlg",
    "normalize_field",
    "parse_custom",
    "parse_e2e",
    "parse_webnlg",
    "synthetic_corpus",
    "synthetic_splits",
    "to_record_line",
    "tokenize",
]
