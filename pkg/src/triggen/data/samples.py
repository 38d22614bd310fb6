"""The DataSample record and its text serialization."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..errors import ContractError

# trigger value meaning "no trigger given"; the encoder substitutes the SOS
# embedding for it
NO_TRIGGER = None


@dataclass
class DataSample:
    """One aligned input record with its reference text(s).

    ``fields`` and ``values`` are equal-length token sequences: position j
    carries value token values[j] under field name fields[j] (multi-token
    values repeat their field name).  ``trigger`` is a single token or None
    for the no-trigger placeholder.
    """

    fields: list[str]
    values: list[str]
    references: list[list[str]]
    intent: str
    trigger: str | None = NO_TRIGGER
    sample_id: str = ""

    def __post_init__(self):
        if len(self.fields) != len(self.values):
            raise ContractError(
                f"misaligned sample: {len(self.fields)} field tokens vs "
                f"{len(self.values)} value tokens"
            )
        if not self.references:
            raise ContractError("sample has no references")
        for r in self.references:
            if not r:
                raise ContractError("sample has an empty reference")

    @property
    def n_positions(self) -> int:
        return len(self.values)

    def with_single_reference(self, i: int) -> "DataSample":
        return dataclasses.replace(self, references=[self.references[i]])

    def with_trigger(self, trigger: str | None) -> "DataSample":
        return dataclasses.replace(self, trigger=trigger)


def expand_training_pairs(samples: list[DataSample]) -> list[DataSample]:
    """One training pair per reference; evaluation keeps references together."""
    out: list[DataSample] = []
    for s in samples:
        for i in range(len(s.references)):
            out.append(s.with_single_reference(i))
    return out


def fields_signature(sample: DataSample) -> str:
    """Intent plus populated-field combination key, for grouped reporting."""
    seen: list[str] = []
    for f in sample.fields:
        if f not in seen:
            seen.append(f)
    return sample.intent + "+" + ",".join(sorted(seen))


def _grouped_pairs(sample: DataSample) -> list[tuple[str, list[str]]]:
    groups: list[tuple[str, list[str]]] = []
    for f, v in zip(sample.fields, sample.values):
        if groups and groups[-1][0] == f:
            groups[-1][1].append(v)
        else:
            groups.append((f, [v]))
    return groups


def to_record_line(sample: DataSample) -> str:
    """Serialize to the tab-separated record format parse_custom reads."""
    for ref in sample.references:
        for t in ref:
            if "|||" in t or "\t" in t:
                raise ContractError(f"token {t!r} contains a reserved separator")
    for t in (*sample.fields, *sample.values):
        if "\t" in t or "[" in t or "]" in t:
            raise ContractError(f"token {t!r} contains a reserved separator")
    pairs = ", ".join(f"{f}[{' '.join(vs)}]" for f, vs in _grouped_pairs(sample))
    refs = " ||| ".join(" ".join(r) for r in sample.references)
    return f"{sample.intent}\t{pairs}\t{refs}"
