"""Independent brute-force metric oracles and the golden case corpus.

These deliberately avoid the library's own counting code: n-grams are tallied
with plain dicts, the LCS is a memoized recursion, and the brevity penalty is
recomputed from first principles.  Both the metric unit tests and the
acceptance suite compare the real implementations against these.
"""

import math
from functools import lru_cache

from triggen.metrics import EvalRecord


def _ngram_dict(tokens, n):
    out = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i : i + n])
        out[g] = out.get(g, 0) + 1
    return out


def oracle_bleu(records, max_n=4):
    """Corpus BLEU percentage, recomputed from raw counts."""
    hits = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for rec in records:
        cand = [t.lower() for t in rec.candidate]
        refs = [[t.lower() for t in r] for r in rec.references]
        cand_len += len(cand)
        best_len = None
        best_diff = None
        for r in refs:
            d = abs(len(r) - len(cand))
            if best_diff is None or d < best_diff or (d == best_diff and len(r) < best_len):
                best_diff, best_len = d, len(r)
        ref_len += best_len
        for n in range(1, max_n + 1):
            for g, c in _ngram_dict(cand, n).items():
                most = 0
                for r in refs:
                    rc = _ngram_dict(r, n).get(g, 0)
                    if rc > most:
                        most = rc
                hits[n - 1] += min(c, most)
                totals[n - 1] += c
    if cand_len == 0:
        return 0.0
    if any(h == 0 for h in hits) or any(t == 0 for t in totals):
        return 0.0
    geo = 1.0
    for h, t in zip(hits, totals):
        geo *= (h / t) ** (1.0 / max_n)
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * geo


def oracle_lcs(a, b):
    """Longest common subsequence length by memoized recursion."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


def oracle_rouge_l(records):
    """Mean best-reference LCS F1 percentage."""
    scores = []
    for rec in records:
        cand = [t.lower() for t in rec.candidate]
        best = 0.0
        for ref in rec.references:
            r = [t.lower() for t in ref]
            lcs = oracle_lcs(cand, r)
            if lcs == 0:
                continue
            p = lcs / len(cand)
            rr = lcs / len(r)
            best = max(best, 2.0 * p * rr / (p + rr))
        scores.append(best)
    return 100.0 * sum(scores) / len(scores)


def _rec(cand, refs, sid="g"):
    return EvalRecord(sample_id=sid, candidate=cand.split(), references=[r.split() for r in refs])


# twenty hand-constructed corpora spanning clipping, brevity, reference
# selection, word order, repetition, and multi-record pooling
GOLDEN_CASES = [
    ("perfect_single", [_rec("green man is a pub .", ["green man is a pub ."])]),
    ("one_substitution", [_rec("a b c d e", ["a b c d f"])]),
    ("brevity_penalty", [_rec("a b c d", ["a b c d e f"])]),
    ("length_tie_to_shorter", [_rec("a b c d", ["a b c", "a b c d e"])]),
    ("clipped_repetition", [_rec("the the the the", ["the cat"])]),
    ("no_overlap", [_rec("x y z w", ["a b c d"])]),
    ("single_token", [_rec("hi", ["hi"])]),
    ("case_insensitive", [_rec("Green MAN is A pub .", ["green man is a pub ."])]),
    ("swapped_interior", [_rec("a b c d", ["a c b d"])]),
    ("rotated_order", [_rec("d a b c", ["a b c d"])]),
    (
        "multi_reference_union",
        [_rec("the cat sat on the mat", ["the cat sat down", "a cat lay on the mat"])],
    ),
    ("long_candidate", [_rec("a b c d e f g h", ["a b c d"])]),
    ("shared_prefix_suffix", [_rec("a b x y e f", ["a b p q e f"])]),
    (
        "two_record_pooling",
        [_rec("a b c d e", ["a b c d f"]), _rec("a b c d", ["a b c d e f"])],
    ),
    (
        "identical_records_duplicated",
        [_rec("u v w x", ["u v w x"]), _rec("u v w x", ["u v w x"])],
    ),
    ("empty_candidate", [_rec("", ["a b c"])]),
    ("near_miss_four_gram", [_rec("a b c x e", ["a b c d e"])]),
    (
        "mixed_quality_corpus",
        [_rec("p q r s", ["p q r s"]), _rec("x y z w", ["a b c d"])],
    ),
    (
        "three_references",
        [_rec("a b c d e", ["a b q d e", "z b c d e", "a b c d q"])],
    ),
    (
        "punctuation_tokens",
        [_rec("green man , a pub .", ["green man , a pub ."])],
    ),
]
