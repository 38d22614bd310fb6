"""Corpus evaluation: BLEU-4, ROUGE-L F1, METEOR, and grouped reporting.

All three metrics take the same record list and return percentages.  BLEU is
corpus-level with multi-reference clipping and the closest-reference brevity
penalty, unsmoothed.  ROUGE-L and METEOR score each sample against its best
reference and average.  Inputs are normalized identically on both sides
(lowercasing; sequences are already tokenized).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .data.vocab import SOS, Vocabulary
from .errors import ContractError

TRIGGER_CLASSES = ("C1", "C2", "C3", "C4")


@dataclass
class EvalRecord:
    sample_id: str
    candidate: list[str]
    references: list[list[str]]
    intent: str = ""
    signature: str = ""
    trigger_class: str = "C1"

    def __post_init__(self):
        if not self.references:
            raise ContractError(f"record {self.sample_id!r} has no references")
        if self.trigger_class not in TRIGGER_CLASSES:
            raise ContractError(f"unknown trigger class {self.trigger_class!r}")


def _norm(tokens: list[str]) -> list[str]:
    return [t.lower() for t in tokens]


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_corpus(records: list[EvalRecord], max_n: int = 4) -> float:
    """Corpus BLEU as a percentage; zero if any n-gram order has no hits."""
    if not records:
        raise ContractError("BLEU over an empty record set")
    hits = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for rec in records:
        cand = _norm(rec.candidate)
        refs = [_norm(r) for r in rec.references]
        cand_len += len(cand)
        # closest reference length; ties go to the shorter one
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            cand_counts = _ngrams(cand, n)
            if not cand_counts:
                continue
            clip: Counter = Counter()
            for r in refs:
                for g, c in _ngrams(r, n).items():
                    if c > clip[g]:
                        clip[g] = c
            totals[n - 1] += sum(cand_counts.values())
            hits[n - 1] += sum(min(c, clip[g]) for g, c in cand_counts.items())
    if cand_len == 0 or any(h == 0 for h in hits) or any(t == 0 for t in totals):
        return 0.0
    log_precision = sum(math.log(h / t) for h, t in zip(hits, totals)) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * math.exp(log_precision)


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------


def _lcs_len(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l_sentence(candidate: list[str], reference: list[str]) -> float:
    """LCS-based F1 in [0, 1] for one candidate/reference pair."""
    cand, ref = _norm(candidate), _norm(reference)
    lcs = _lcs_len(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return 2.0 * p * r / (p + r)


def rouge_l_f1(records: list[EvalRecord]) -> float:
    """Best-reference ROUGE-L F1 averaged over records, as a percentage."""
    if not records:
        raise ContractError("ROUGE-L over an empty record set")
    scores = [
        max(rouge_l_sentence(rec.candidate, ref) for ref in rec.references)
        for rec in records
    ]
    return 100.0 * sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Porter stemmer (classic 1980 algorithm)
# ---------------------------------------------------------------------------

_VOWELS = set("aeiou")


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences (the m in Porter's rules)."""
    forms = []
    for i in range(len(stem)):
        forms.append("c" if _is_consonant(stem, i) else "v")
    m = 0
    prev = "c"
    for f in forms:
        if prev == "v" and f == "c":
            m += 1
        prev = f
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if not (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
    ):
        return False
    return word[-1] not in "wxy"


def porter_stem(word: str) -> str:
    w = word.lower()
    if len(w) <= 2:
        return w

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    # step 1b
    flag = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed"):
        if _has_vowel(w[:-2]):
            w = w[:-2]
            flag = True
    elif w.endswith("ing"):
        if _has_vowel(w[:-3]):
            w = w[:-3]
            flag = True
    if flag:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_consonant(w) and not w.endswith(("l", "s", "z")):
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    step2 = [
        ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
        ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
        ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
        ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
        ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
    ]
    for suf, rep in step2:
        if w.endswith(suf):
            if _measure(w[: -len(suf)]) > 0:
                w = w[: -len(suf)] + rep
            break

    # step 3
    step3 = [
        ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
        ("ical", "ic"), ("ful", ""), ("ness", ""),
    ]
    for suf, rep in step3:
        if w.endswith(suf):
            if _measure(w[: -len(suf)]) > 0:
                w = w[: -len(suf)] + rep
            break

    # step 4
    step4 = [
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
        "ment", "ent", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    ]
    for suf in step4:
        if w.endswith(suf):
            stem = w[: -len(suf)]
            if _measure(stem) > 1:
                w = stem
            break
        if suf == "ent" and w.endswith("ion"):
            stem = w[:-3]
            if _measure(stem) > 1 and stem and stem[-1] in "st":
                w = stem
            break

    # step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem
    # step 5b
    if _measure(w) > 1 and _ends_double_consonant(w) and w.endswith("l"):
        w = w[:-1]
    return w


# ---------------------------------------------------------------------------
# METEOR
# ---------------------------------------------------------------------------


def _align(cand: list[str], ref: list[str]) -> list[tuple[int, int]]:
    """Greedy left-to-right alignment: exact matches first, then stems."""
    pairs: list[tuple[int, int]] = []
    used_c: set[int] = set()
    used_r: set[int] = set()
    for key in (lambda t: t, porter_stem):
        ref_keys = [key(t) for t in ref]
        for i, tok in enumerate(cand):
            if i in used_c:
                continue
            k = key(tok)
            for j, rk in enumerate(ref_keys):
                if j not in used_r and rk == k:
                    pairs.append((i, j))
                    used_c.add(i)
                    used_r.add(j)
                    break
    return sorted(pairs)


def _chunks(pairs: list[tuple[int, int]]) -> int:
    count = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            count += 1
        prev = (i, j)
    return count


def meteor_sentence(
    candidate: list[str],
    reference: list[str],
    alpha: float = 0.9,
    beta: float = 3.0,
    gamma: float = 0.5,
) -> float:
    """METEOR score in [0, 1] for one pair (exact + stem matching)."""
    cand, ref = _norm(candidate), _norm(reference)
    if not cand or not ref:
        return 0.0
    pairs = _align(cand, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    f_mean = precision * recall / (alpha * precision + (1.0 - alpha) * recall)
    penalty = gamma * (_chunks(pairs) / m) ** beta
    return f_mean * (1.0 - penalty)


def meteor(records: list[EvalRecord]) -> float:
    """Best-reference METEOR averaged over records, as a percentage."""
    if not records:
        raise ContractError("METEOR over an empty record set")
    scores = [
        max(meteor_sentence(rec.candidate, ref) for ref in rec.references)
        for rec in records
    ]
    return 100.0 * sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# trigger classification and grouped reporting
# ---------------------------------------------------------------------------


def classify_trigger(
    trigger: str | None, vocab: Vocabulary, references: list[list[str]]
) -> str:
    """C1 no trigger, C2 out-of-vocabulary, C3 in-vocab but in no
    reference, C4 in-vocab and in some reference (case-insensitive)."""
    if trigger is None:
        return "C1"
    t = trigger.lower()
    if t == SOS:
        return "C1"
    if t not in vocab:
        return "C2"
    for ref in references:
        if any(tok.lower() == t for tok in ref):
            return "C4"
    return "C3"


METRIC_FNS = {
    "bleu": bleu_corpus,
    "rouge_l": rouge_l_f1,
    "meteor": meteor,
}


@dataclass
class MetricReport:
    overall: dict[str, float]
    per_class: dict[str, dict[str, float]]
    per_signature: dict[str, dict[str, float]]
    counts: dict[str, int] = field(default_factory=dict)

    def render(self) -> str:
        lines = ["overall:"]
        for name, value in self.overall.items():
            lines.append(f"  {name} = {value:.2f}")
        if self.per_class:
            lines.append("by trigger class:")
            for cls in sorted(self.per_class):
                vals = ", ".join(
                    f"{k}={v:.2f}" for k, v in self.per_class[cls].items()
                )
                lines.append(f"  {cls} (n={self.counts.get(cls, 0)}): {vals}")
        if self.per_signature:
            lines.append("by intent+fields:")
            for sig in sorted(self.per_signature):
                vals = ", ".join(
                    f"{k}={v:.2f}" for k, v in self.per_signature[sig].items()
                )
                lines.append(f"  {sig}: {vals}")
        return "\n".join(lines)


def aggregate(
    records: list[EvalRecord], metrics: tuple[str, ...] = ("bleu", "rouge_l", "meteor")
) -> MetricReport:
    """Corpus values plus per-trigger-class and per-signature breakdowns."""
    if not records:
        raise ContractError("cannot aggregate an empty record set")
    for m in metrics:
        if m not in METRIC_FNS:
            raise ContractError(f"unknown metric {m!r}; choose from {sorted(METRIC_FNS)}")
    overall = {m: METRIC_FNS[m](records) for m in metrics}

    def grouped(key_fn) -> tuple[dict[str, dict[str, float]], dict[str, int]]:
        groups: dict[str, list[EvalRecord]] = {}
        for rec in records:
            groups.setdefault(key_fn(rec), []).append(rec)
        table = {
            key: {m: METRIC_FNS[m](group) for m in metrics}
            for key, group in groups.items()
        }
        return table, {key: len(group) for key, group in groups.items()}

    per_class, class_counts = grouped(lambda r: r.trigger_class)
    per_signature, _ = grouped(lambda r: r.signature or "(none)")
    return MetricReport(
        overall=overall,
        per_class=per_class,
        per_signature=per_signature,
        counts=class_counts,
    )
