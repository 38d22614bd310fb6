"""Parsers for the three dataset formats.

Restaurant-MR records arrive as two-column CSV (attribute list, reference).
The custom and normalized-triple formats share one line layout:

    intent <TAB> field[value], field[value], ... <TAB> ref1 ||| ref2

Triple records put both ends of a triple in one value, pipe-separated:
``predicate[subject | object]``; subject tokens then object tokens all align
to the predicate as their field name.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ParseError
from .samples import DataSample
from .tokenizer import normalize_field, tokenize

# intent label used where a dataset has no intent annotation
DUMMY_INTENT = "<none>"

MAX_E2E_ATTRIBUTES = 8
MAX_TRIPLES = 7

_ATTR = re.compile(r"([^\[\]]+)\[([^\[\]]*)\]")


def _parse_attribute_list(
    text: str, *, path: str | None, line: int | None, triple_mode: bool
) -> tuple[list[str], list[str], int]:
    """Returns aligned (fields, values, attribute_count)."""
    fields: list[str] = []
    values: list[str] = []
    count = 0
    pos = 0
    for m in _ATTR.finditer(text):
        gap = text[pos : m.start()]
        if gap.strip(" ,\t"):
            raise ParseError(f"malformed attribute list near {gap.strip()!r}", path, line)
        pos = m.end()
        # attributes are comma-separated; a missing comma would otherwise
        # fold stray text into the next field name
        if count > 0 and not m.group(1).lstrip().startswith(","):
            raise ParseError(
                f"missing comma before attribute {m.group(1).strip()!r}", path, line
            )
        count += 1
        name = normalize_field(m.group(1).strip(" ,"))
        if not name:
            raise ParseError("attribute with an empty name", path, line)
        raw_value = m.group(2)
        if triple_mode:
            sides = raw_value.split("|")
            if len(sides) != 2:
                raise ParseError(
                    f"triple value must be 'subject | object', got {raw_value!r}", path, line
                )
            value_tokens = tokenize(sides[0]) + tokenize(sides[1])
        else:
            value_tokens = tokenize(raw_value)
        if not value_tokens:
            raise ParseError(f"attribute {name!r} has an empty value", path, line)
        fields.extend(name for _ in value_tokens)
        values.extend(value_tokens)
    tail = text[pos:]
    if tail.strip(" ,\t"):
        raise ParseError(f"malformed attribute list near {tail.strip()!r}", path, line)
    if count == 0:
        raise ParseError("record has no field[value] attributes", path, line)
    return fields, values, count


def _parse_references(text: str, *, path: str | None, line: int | None) -> list[list[str]]:
    refs = [tokenize(part) for part in text.split("|||")]
    refs = [r for r in refs if r]
    if not refs:
        raise ParseError("record has no non-empty reference", path, line)
    return refs


def parse_e2e(
    mr: str,
    references: Sequence[str],
    *,
    path: str | None = None,
    line: int | None = None,
    sample_id: str = "",
) -> DataSample:
    """One restaurant record: attribute list plus its reference text(s)."""
    fields, values, count = _parse_attribute_list(mr, path=path, line=line, triple_mode=False)
    if count > MAX_E2E_ATTRIBUTES:
        raise ParseError(f"{count} attributes exceeds the maximum {MAX_E2E_ATTRIBUTES}", path, line)
    refs = _parse_references(" ||| ".join(references), path=path, line=line)
    return DataSample(fields, values, refs, DUMMY_INTENT, sample_id=sample_id)


def _split_record_line(text: str, *, path: str | None, line: int | None) -> tuple[str, str, str]:
    cols = text.rstrip("\n").split("\t")
    if len(cols) != 3:
        raise ParseError(f"expected 3 tab-separated columns, got {len(cols)}", path, line)
    return cols[0].strip(), cols[1], cols[2]


def parse_custom(
    text: str,
    *,
    known_intents: Iterable[str] | None = None,
    path: str | None = None,
    line: int | None = None,
    sample_id: str = "",
) -> DataSample:
    """Intent-annotated record in the tab-separated line format."""
    intent, attrs, refs_col = _split_record_line(text, path=path, line=line)
    if not intent:
        raise ParseError("record has an empty intent label", path, line)
    if known_intents is not None:
        known = sorted(set(known_intents))
        if intent not in known:
            raise ParseError(
                f"unknown intent {intent!r}; known intents: {', '.join(known)}", path, line
            )
    fields, values, _ = _parse_attribute_list(attrs, path=path, line=line, triple_mode=False)
    refs = _parse_references(refs_col, path=path, line=line)
    return DataSample(fields, values, refs, intent, sample_id=sample_id)


def parse_webnlg(
    text: str,
    *,
    path: str | None = None,
    line: int | None = None,
    sample_id: str = "",
) -> DataSample:
    """Normalized triple-set record; the category column stands in for intent."""
    category, attrs, refs_col = _split_record_line(text, path=path, line=line)
    if not category:
        raise ParseError("triple record is missing its category", path, line)
    fields, values, count = _parse_attribute_list(attrs, path=path, line=line, triple_mode=True)
    if count > MAX_TRIPLES:
        raise ParseError(f"{count} triples exceeds the maximum {MAX_TRIPLES}", path, line)
    refs = _parse_references(refs_col, path=path, line=line)
    return DataSample(fields, values, refs, category, sample_id=sample_id)


# ---------------------------------------------------------------------------
# file loaders
# ---------------------------------------------------------------------------


def load_e2e(path: str | Path) -> list[DataSample]:
    """Two-column CSV; rows sharing an attribute list merge their references."""
    path = Path(path)
    grouped: dict[str, tuple[int, list[str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if i == 1 and [c.strip().lower() for c in row[:2]] == ["mr", "ref"]:
                continue
            if len(row) < 2:
                raise ParseError(f"expected 2 CSV columns, got {len(row)}", str(path), i)
            mr, ref = row[0], row[1]
            if mr in grouped:
                grouped[mr][1].append(ref)
            else:
                grouped[mr] = (i, [ref])
    samples = []
    for mr, (line_no, refs) in grouped.items():
        samples.append(
            parse_e2e(mr, refs, path=str(path), line=line_no, sample_id=f"{path.stem}-{line_no}")
        )
    return samples


def _load_lines(path: str | Path, parse_one) -> list[DataSample]:
    path = Path(path)
    samples = []
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            samples.append(parse_one(raw, path=str(path), line=i, sample_id=f"{path.stem}-{i}"))
    return samples


def load_custom(path: str | Path, known_intents: Iterable[str] | None = None) -> list[DataSample]:
    known = list(known_intents) if known_intents is not None else None

    def one(raw, **kw):
        return parse_custom(raw, known_intents=known, **kw)

    return _load_lines(path, one)


def load_webnlg(path: str | Path) -> list[DataSample]:
    return _load_lines(path, parse_webnlg)


def load_dataset(path: str | Path, fmt: str) -> list[DataSample]:
    if fmt == "e2e":
        return load_e2e(path)
    if fmt == "custom":
        return load_custom(path)
    if fmt == "webnlg":
        return load_webnlg(path)
    raise ParseError(f"unknown dataset format {fmt!r}; expected e2e, webnlg, or custom")
