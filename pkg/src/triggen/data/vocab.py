"""Token vocabulary and intent label set."""

from __future__ import annotations

from typing import Iterable, Sequence

from ..errors import ContractError
from .tokenizer import tokenize

PAD, SOS, EOS, UNK = "<pad>", "<sos>", "<eos>", "<unk>"
RESERVED = (PAD, SOS, EOS, UNK)
PAD_ID, SOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

UNK_INTENT = "<unk_intent>"


class Vocabulary:
    """Frozen token-id bijection with four reserved ids.

    Build it from the training split only; anything unseen maps to UNK on
    lookup.  Token order is sorted for determinism regardless of the order
    samples were read in.
    """

    def __init__(self, tokens: Iterable[str]):
        uniq = sorted(set(tokens) - set(RESERVED))
        self._id_to_token: list[str] = list(RESERVED) + uniq
        self._token_to_id: dict[str, int] = {t: i for i, t in enumerate(self._id_to_token)}

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    @property
    def content_size(self) -> int:
        """Vocabulary size excluding the reserved tokens."""
        return len(self._id_to_token) - len(RESERVED)

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self._id_to_token):
            raise ContractError(f"vocabulary id {idx} out of range [0, {len(self)})")
        return self._id_to_token[idx]

    def tokens(self) -> list[str]:
        """All tokens in id order (reserved first)."""
        return list(self._id_to_token)

    @classmethod
    def from_tokens_in_order(cls, ordered: Sequence[str]) -> "Vocabulary":
        """Rebuild from a saved id-ordered token list (checkpoint load)."""
        if tuple(ordered[: len(RESERVED)]) != RESERVED:
            raise ContractError("token list does not start with the reserved tokens")
        v = cls.__new__(cls)
        v._id_to_token = list(ordered)
        v._token_to_id = {t: i for i, t in enumerate(v._id_to_token)}
        if len(v._token_to_id) != len(v._id_to_token):
            raise ContractError("duplicate token in saved vocabulary")
        return v


class IntentSet:
    """Intent label-id map with a reserved unknown-intent id 0.

    Labels unseen at build time (say a new category at eval) map to the
    unknown id instead of failing.
    """

    def __init__(self, labels: Iterable[str]):
        uniq = sorted(set(labels) - {UNK_INTENT})
        self._labels: list[str] = [UNK_INTENT] + uniq
        self._ids: dict[str, int] = {lab: i for i, lab in enumerate(self._labels)}

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def id(self, label: str) -> int:
        return self._ids.get(label, 0)

    def label(self, idx: int) -> str:
        if not 0 <= idx < len(self._labels):
            raise ContractError(f"intent id {idx} out of range [0, {len(self)})")
        return self._labels[idx]

    def labels(self) -> list[str]:
        return list(self._labels)

    @classmethod
    def from_labels_in_order(cls, ordered: Sequence[str]) -> "IntentSet":
        if not ordered or ordered[0] != UNK_INTENT:
            raise ContractError("intent list does not start with the unknown-intent label")
        s = cls.__new__(cls)
        s._labels = list(ordered)
        s._ids = {lab: i for i, lab in enumerate(s._labels)}
        return s


def build_vocab(samples) -> Vocabulary:
    """Vocabulary over training fields, values, references, and intent text."""
    if not samples:
        raise ContractError("cannot build a vocabulary from an empty training set")
    tokens: set[str] = set()
    for s in samples:
        tokens.update(s.fields)
        tokens.update(s.values)
        for ref in s.references:
            tokens.update(ref)
        tokens.update(tokenize(s.intent))
    return Vocabulary(tokens)


def build_intents(samples) -> IntentSet:
    return IntentSet(s.intent for s in samples)
