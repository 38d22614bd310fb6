"""Trigger-ratio optimization.

One model is trained per grid ratio.  Each is evaluated twice: with every
trigger blanked (the 0K variant) and with every sample given its
reference's first word (the +K variant).  The curve value per ratio is the
weighted mean mu' = (w/100) * plusK + (1 - w/100) * zeroK, and the optimum
is the grid ratio maximizing it, ties toward the smallest ratio.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

from .data.samples import DataSample, fields_signature
from .data.vocab import IntentSet, Vocabulary, build_intents, build_vocab
from .decoding import beam_decode
from .errors import ContractError
from .metrics import METRIC_FNS, EvalRecord, classify_trigger
from .model import Model, ModelConfig
from .training import TrainConfig, save_checkpoint, train

DEFAULT_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class SweepConfig:
    grid: tuple[float, ...] = DEFAULT_GRID
    weight: float = 50.0
    metric: str = "bleu"
    model_config: ModelConfig = field(default_factory=ModelConfig)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    beam_width: int | None = None

    def validate(self) -> "SweepConfig":
        if not self.grid:
            raise ContractError("sweep grid is empty")
        if any(not 0.0 <= r <= 1.0 for r in self.grid):
            raise ContractError(f"grid ratios must lie in [0, 1], got {self.grid}")
        if list(self.grid) != sorted(set(self.grid)):
            raise ContractError("grid ratios must be strictly increasing")
        if not 0.0 <= self.weight <= 100.0:
            raise ContractError(f"weight must be in [0, 100], got {self.weight}")
        if self.metric not in METRIC_FNS:
            raise ContractError(f"unknown metric {self.metric!r}")
        return self


@dataclass
class SweepRow:
    ratio: float
    metric_0k: float
    metric_plus_k: float
    mu_prime: float
    failed: bool = False


@dataclass
class SweepResult:
    rows: list[SweepRow]
    best_ratio: float
    checkpoints: dict[float, str] = field(default_factory=dict)


def _eval_records(
    model: Model, samples: list[DataSample], beam_width: int | None
) -> list[EvalRecord]:
    records = []
    for s in samples:
        ranked = beam_decode(model, s, width=beam_width)
        candidate = ranked[0][0] if ranked else []
        records.append(
            EvalRecord(
                sample_id=s.sample_id,
                candidate=candidate,
                references=s.references,
                intent=s.intent,
                signature=fields_signature(s),
                trigger_class=classify_trigger(s.trigger, model.vocab, s.references),
            )
        )
    return records


def eval_extremes(
    model: Model,
    test_samples: list[DataSample],
    metric: str = "bleu",
    beam_width: int | None = None,
) -> tuple[float, float]:
    """Metric with all triggers absent, then with all triggers present."""
    if not test_samples:
        raise ContractError("cannot evaluate an empty test set")
    fn = METRIC_FNS[metric]
    zero_k = [s.with_trigger(None) for s in test_samples]
    plus_k = [s.with_trigger(s.references[0][0]) for s in test_samples]
    m0 = fn(_eval_records(model, zero_k, beam_width))
    m1 = fn(_eval_records(model, plus_k, beam_width))
    return m0, m1


def weighted_mean_curve(rows: list[SweepRow], weight: float) -> list[SweepRow]:
    """Fill mu_prime as the exact affine mix of the two extreme columns."""
    if not rows:
        raise ContractError("cannot build a curve from zero rows")
    if not 0.0 <= weight <= 100.0:
        raise ContractError(f"weight must be in [0, 100], got {weight}")
    frac = weight / 100.0
    return [
        replace(r, mu_prime=frac * r.metric_plus_k + (1.0 - frac) * r.metric_0k)
        for r in rows
    ]


def argmax_ratio(rows: list[SweepRow]) -> float:
    """Grid ratio with the highest curve value; ties take the smallest."""
    usable = [r for r in rows if not r.failed]
    if not usable:
        raise ContractError("no successful sweep rows to choose from")
    best = usable[0]
    for r in usable[1:]:
        if r.mu_prime > best.mu_prime:
            best = r
    return best.ratio


def run_sweep(
    config: SweepConfig,
    train_samples: list[DataSample],
    val_samples: list[DataSample],
    test_samples: list[DataSample],
    checkpoint_dir: str | Path | None = None,
    vocab: Vocabulary | None = None,
    intents: IntentSet | None = None,
    log=None,
) -> SweepResult:
    """Train one model per grid ratio and assemble the optimization curve.

    With ``checkpoint_dir`` set, each ratio's model is saved there and
    reused on rerun instead of retraining (cache key: the ratio).
    """
    config.validate()
    vocab = vocab if vocab is not None else build_vocab(train_samples)
    intents = intents if intents is not None else build_intents(train_samples)
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if ckpt_dir is not None:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    rows: list[SweepRow] = []
    checkpoints: dict[float, str] = {}
    for ratio in config.grid:
        ckpt_path = None
        if ckpt_dir is not None:
            ckpt_path = ckpt_dir / f"sweep_r{ratio:.4f}.ckpt"
        try:
            model = None
            if ckpt_path is not None and ckpt_path.exists():
                from .training import load_checkpoint

                model = load_checkpoint(ckpt_path).build_model()
                if log is not None:
                    log(f"ratio {ratio}: reusing {ckpt_path}")
            if model is None:
                model = Model(
                    config.model_config,
                    vocab,
                    intents,
                    seed=config.train_config.seed,
                )
                tcfg = replace(config.train_config, trigger_ratio=ratio)
                train(model, train_samples, val_samples, tcfg, log=log)
                if ckpt_path is not None:
                    save_checkpoint(ckpt_path, model, meta={"trigger_ratio": ratio})
            m0, m1 = eval_extremes(
                model, test_samples, metric=config.metric, beam_width=config.beam_width
            )
            rows.append(SweepRow(ratio, m0, m1, 0.0))
            if ckpt_path is not None:
                checkpoints[ratio] = str(ckpt_path)
        except Exception as e:  # noqa: BLE001 - keep the sweep's other rows
            if log is not None:
                log(f"ratio {ratio} failed: {e}")
            rows.append(SweepRow(ratio, 0.0, 0.0, 0.0, failed=True))
    rows = weighted_mean_curve(rows, config.weight)
    best = argmax_ratio(rows)
    return SweepResult(rows=rows, best_ratio=best, checkpoints=checkpoints)


def write_curve(path: str | Path, result: SweepResult) -> None:
    """Comma-separated curve table ready for any plotting tool."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r_k", "metric_0k", "metric_plus_k", "mu_prime", "is_argmax"])
        for r in result.rows:
            writer.writerow(
                [
                    f"{r.ratio:g}",
                    f"{r.metric_0k:.6f}",
                    f"{r.metric_plus_k:.6f}",
                    f"{r.mu_prime:.6f}",
                    int(r.ratio == result.best_ratio),
                ]
            )
