"""Greedy and beam-search generation over the extended vocabulary.

Search runs against a minimal stepper interface (initial state + one-step
conditional distribution), so the same code decodes real models and the
hand-built toy distributions the tests enumerate exhaustively.

Determinism: score ties break toward the lowest token id everywhere, and
final beam ranking is by length-normalized log-probability (sum divided by
token count, end token included).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from .data.samples import DataSample
from .data.vocab import EOS_ID, PAD_ID, SOS_ID, UNK_ID
from .errors import ContractError
from .model import Encoded, ExtendedVocab, Model
from .numerics import no_grad


class Stepper(Protocol):
    def start(self) -> Any:
        """Initial carry-state."""

    def step(self, state: Any, y_prev: int) -> tuple[np.ndarray, Any]:
        """Probability vector over extended ids, and the next carry-state."""


@dataclass
class Hypothesis:
    ids: list[int]  # emitted extended ids, end token included once finished
    logp: float  # sum of per-token log-probabilities
    state: Any
    finished: bool = False

    def normalized(self) -> float:
        return self.logp / max(len(self.ids), 1)


class ModelStepper:
    """Adapts an encoded sample to the search interface (inference only)."""

    def __init__(self, model: Model, enc: Encoded):
        self.model = model
        self.enc = enc

    def start(self):
        return (self.enc.s0, self.enc.c0, None)

    def step(self, state, y_prev: int):
        s, c, copy_probs = state
        with no_grad():
            out = self.model.decode_step(self.enc, y_prev, s, c, copy_probs)
        return out.probs, (out.s, out.c, out.copy_probs)


def _masked_log(probs: np.ndarray, allow_unk: bool) -> np.ndarray:
    """Log-probabilities with structural tokens suppressed to -inf."""
    masked = probs.copy()
    masked[PAD_ID] = 0.0
    masked[SOS_ID] = 0.0
    if not allow_unk:
        masked[UNK_ID] = 0.0
    if masked.max() <= 0.0:
        # all mass was on suppressed ids; fall back rather than emit nothing
        masked = probs
    with np.errstate(divide="ignore"):
        return np.log(masked)


def greedy_search(
    stepper: Stepper, max_len: int, allow_unk: bool = False
) -> tuple[list[int], float]:
    """Argmax token per step; stops at the end token or max_len."""
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")
    state = stepper.start()
    ids: list[int] = []
    logp = 0.0
    y_prev = SOS_ID
    for _ in range(max_len):
        probs, state = stepper.step(state, y_prev)
        logs = _masked_log(probs, allow_unk)
        y = int(np.argmax(logs))
        ids.append(y)
        logp += float(logs[y])
        if y == EOS_ID:
            break
        y_prev = y
    return ids, logp


def beam_search(
    stepper: Stepper,
    width: int,
    max_len: int,
    allow_unk: bool = False,
) -> list[Hypothesis]:
    """Top-``width`` sequences ranked by length-normalized log-probability.

    Pruning during search uses the raw cumulative log-probability; the
    normalization applies only to the final ranking.
    """
    if width < 1:
        raise ContractError(f"beam width must be >= 1, got {width}")
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")
    live = [Hypothesis(ids=[], logp=0.0, state=stepper.start())]
    finished: list[Hypothesis] = []
    for _ in range(max_len):
        candidates: list[tuple[float, int, int, Any]] = []
        for h_idx, hyp in enumerate(live):
            y_prev = hyp.ids[-1] if hyp.ids else SOS_ID
            probs, new_state = stepper.step(hyp.state, y_prev)
            logs = _masked_log(probs, allow_unk)
            # only the top `width` extensions of one hypothesis can survive;
            # stable sort keeps ties in lowest-id-first order
            k = min(width, logs.size)
            top = np.argsort(-logs, kind="stable")[:k]
            for y in top:
                lp = logs[y]
                if lp == -np.inf:
                    continue
                candidates.append((hyp.logp + float(lp), int(y), h_idx, new_state))
        if not candidates:
            break
        candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
        next_live: list[Hypothesis] = []
        for logp, y, h_idx, state in candidates[:width]:
            hyp = Hypothesis(ids=live[h_idx].ids + [y], logp=logp, state=state)
            if y == EOS_ID:
                hyp.finished = True
                finished.append(hyp)
            else:
                next_live.append(hyp)
        live = next_live
        if not live:
            break
    pool = finished + live
    pool.sort(key=lambda h: (-h.normalized(), h.ids))
    return pool[:width]


def resolve_copies(ids: list[int], ext: ExtendedVocab) -> list[str]:
    """Extended ids back to surface tokens; copied tokens come out verbatim."""
    out: list[str] = []
    for i in ids:
        tok = ext.token(i)  # raises on out-of-range ids
        out.append(tok)
    return out


def _strip_eos(ids: list[int]) -> list[int]:
    return ids[:-1] if ids and ids[-1] == EOS_ID else ids


def greedy_decode(
    model: Model, sample: DataSample, max_len: int | None = None
) -> list[str]:
    """Surface-token greedy generation for one sample."""
    cfg = model.config
    enc = model.encode(sample)
    ids, _ = greedy_search(
        ModelStepper(model, enc), max_len or cfg.max_len, allow_unk=cfg.allow_unk
    )
    return resolve_copies(_strip_eos(ids), enc.ext)


def beam_decode(
    model: Model,
    sample: DataSample,
    width: int | None = None,
    max_len: int | None = None,
) -> list[tuple[list[str], float]]:
    """Ranked (surface tokens, normalized score) pairs for one sample."""
    cfg = model.config
    enc = model.encode(sample)
    hyps = beam_search(
        ModelStepper(model, enc),
        width or cfg.beam_width,
        max_len or cfg.max_len,
        allow_unk=cfg.allow_unk,
    )
    return [
        (resolve_copies(_strip_eos(h.ids), enc.ext), h.normalized()) for h in hyps
    ]
