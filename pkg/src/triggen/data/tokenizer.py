"""Whitespace-plus-punctuation tokenizer.

Lowercases, splits on whitespace, then peels leading and trailing ASCII
punctuation off each chunk as separate tokens.  Internal punctuation stays
put, so emails, phone numbers, ids, and times survive as single copyable
tokens ("john@example.com", "9867452301", "10:30").
"""

from __future__ import annotations

import string

_PUNCT = frozenset(string.punctuation)


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for chunk in text.split():
        lead: list[str] = []
        while chunk and chunk[0] in _PUNCT:
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail: list[str] = []
        while chunk and chunk[-1] in _PUNCT:
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return [t.lower() for t in tokens]


def detokenize(tokens: list[str]) -> str:
    """Join tokens, re-attaching single punctuation to the preceding word."""
    out: list[str] = []
    for t in tokens:
        if out and len(t) == 1 and t in _PUNCT:
            out[-1] += t
        else:
            out.append(t)
    return " ".join(out)


def normalize_field(name: str) -> str:
    """Field names must stay single tokens to keep field/value alignment."""
    return "_".join(name.lower().split())
