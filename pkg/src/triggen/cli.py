"""Command-line surface: train, eval, generate, repl, sweep, convert.

Configuration precedence is defaults < config file < command-line flags.
The config file is flat ``key = value`` text with ``#`` comments; keys are
the ModelConfig/TrainConfig/SweepConfig field names plus data paths.  The
fully resolved configuration is echoed into every output artifact.

Relative data paths resolve under $TRIGGEN_DATA_ROOT and checkpoint paths
under $TRIGGEN_CHECKPOINT_ROOT when those variables are set.

Exit status: 0 success, 2 usage errors (bad flags, missing files, bad
config), 1 runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .data.parsers import DUMMY_INTENT, load_dataset, parse_custom
from .data.samples import DataSample, fields_signature, to_record_line
from .data.vocab import build_intents, build_vocab
from .data.embeddings import load_embeddings
from .decoding import beam_decode
from .errors import ParseError, TriggenError
from .metrics import EvalRecord, aggregate, classify_trigger
from .model import ATTENTION_KINDS, Model, ModelConfig
from .sweep import SweepConfig, run_sweep, write_curve
from .training import TrainConfig, load_checkpoint, save_checkpoint, train

MAX_SOURCE_POSITIONS = 100

_MODEL_FIELDS = {f.name: f.type for f in dataclasses.fields(ModelConfig)}
_TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
_SWEEP_KEYS = {"grid", "weight", "metric"}
_PATH_KEYS = {
    "format",
    "train_data",
    "val_data",
    "test_data",
    "checkpoint",
    "embeddings",
    "out_dir",
    "eval_triggers",
}
_KNOWN_KEYS = set(_MODEL_FIELDS) | set(_TRAIN_FIELDS) | _SWEEP_KEYS | _PATH_KEYS


class UsageError(TriggenError):
    pass


def _parse_scalar(key: str, raw: str):
    raw = raw.strip()
    if key == "grid":
        try:
            return tuple(float(x) for x in raw.replace(",", " ").split())
        except ValueError:
            raise UsageError(f"config key 'grid' must be a list of numbers, got {raw!r}")
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def read_config_file(path: str | Path) -> dict:
    """Flat key = value lines; unknown keys are rejected."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{i}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _KNOWN_KEYS:
                raise UsageError(f"{path}:{i}: unknown config key {key!r}")
            out[key] = _parse_scalar(key, value)
    return out


def _resolve_path(value: str | None, env_var: str) -> str | None:
    if value is None:
        return None
    root = os.environ.get(env_var)
    p = Path(value)
    if root and not p.is_absolute():
        return str(Path(root) / p)
    return str(p)


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file, and explicit flags, in that order."""
    merged: dict = {}
    for f in dataclasses.fields(ModelConfig):
        merged[f.name] = f.default
    for f in dataclasses.fields(TrainConfig):
        merged[f.name] = f.default
    merged.update(
        {
            "grid": SweepConfig.grid,
            "weight": SweepConfig.weight,
            "metric": SweepConfig.metric,
            "format": "custom",
            "train_data": None,
            "val_data": None,
            "test_data": None,
            "checkpoint": None,
            "embeddings": None,
            "out_dir": ".",
            "eval_triggers": "none",
        }
    )
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        merged.update(read_config_file(cfg_path))
    for key in _KNOWN_KEYS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    for key, env in (
        ("train_data", "TRIGGEN_DATA_ROOT"),
        ("val_data", "TRIGGEN_DATA_ROOT"),
        ("test_data", "TRIGGEN_DATA_ROOT"),
        ("embeddings", "TRIGGEN_DATA_ROOT"),
        ("checkpoint", "TRIGGEN_CHECKPOINT_ROOT"),
    ):
        merged[key] = _resolve_path(merged[key], env)
    return merged


def model_config_from(merged: dict) -> ModelConfig:
    kwargs = {k: merged[k] for k in _MODEL_FIELDS}
    return ModelConfig(**kwargs).validate()


def train_config_from(merged: dict) -> TrainConfig:
    kwargs = {k: merged[k] for k in _TRAIN_FIELDS}
    return TrainConfig(**kwargs).validate()


def echo_config(merged: dict) -> str:
    lines = [f"# {k} = {merged[k]}" for k in sorted(merged)]
    return "\n".join(lines)


def _require(merged: dict, *keys: str) -> None:
    for k in keys:
        if merged.get(k) is None:
            raise UsageError(f"missing required setting {k!r} (flag --{k.replace('_', '-')})")
        if k.endswith("_data") or k == "embeddings":
            if not Path(merged[k]).exists():
                raise UsageError(f"{k} path does not exist: {merged[k]}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    merged = resolve_config(args)
    _require(merged, "train_data", "val_data", "checkpoint")
    fmt = merged["format"]
    train_set = load_dataset(merged["train_data"], fmt)
    val_set = load_dataset(merged["val_data"], fmt)
    vocab = build_vocab(train_set)
    intents = build_intents(train_set)

    emb = None
    if merged["embeddings"]:
        emb = load_embeddings(
            merged["embeddings"], vocab, dim=merged["value_emb_dim"], seed=merged["seed"]
        )
        print(f"embeddings: coverage {emb.coverage:.1%}")
    mcfg = model_config_from(merged)
    tcfg = train_config_from(merged)
    model = Model(mcfg, vocab, intents, seed=tcfg.seed, embeddings=emb)
    print(echo_config(merged))
    print(
        f"model: |V|={len(vocab)} intents={len(intents)} "
        f"parameters={model.parameter_count():,}"
    )
    result = train(model, train_set, val_set, tcfg, log=print)

    ckpt_path = merged["checkpoint"]
    Path(ckpt_path).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        ckpt_path,
        model,
        meta={
            "best_epoch": result.best_epoch,
            "best_val_loss": result.best_val_loss,
            "resolved_config": {k: repr(v) for k, v in sorted(merged.items())},
        },
    )
    history_path = str(Path(merged["out_dir"]) / "history.jsonl")
    Path(merged["out_dir"]).mkdir(parents=True, exist_ok=True)
    with open(history_path, "w", encoding="utf-8") as fh:
        fh.write(echo_config(merged) + "\n")
    with open(history_path, "a", encoding="utf-8") as fh:
        for rec in result.history:
            fh.write(
                f'{{"epoch": {rec.epoch}, "train_loss": {rec.train_loss:.6f}, '
                f'"val_loss": {rec.val_loss:.6f}}}\n'
            )
    print(f"best epoch {result.best_epoch} (val loss {result.best_val_loss:.4f})")
    print(f"checkpoint: {ckpt_path}")
    print(f"history: {history_path}")
    return 0


def _records_for_eval(model: Model, samples: list[DataSample], variant: str):
    if variant == "all":
        samples = [s.with_trigger(s.references[0][0]) for s in samples]
    elif variant == "none":
        samples = [s.with_trigger(None) for s in samples]
    elif variant != "as-is":
        raise UsageError(f"eval_triggers must be none, all, or as-is, got {variant!r}")
    records = []
    for s in samples:
        ranked = beam_decode(model, s)
        records.append(
            EvalRecord(
                sample_id=s.sample_id,
                candidate=ranked[0][0] if ranked else [],
                references=s.references,
                intent=s.intent,
                signature=fields_signature(s),
                trigger_class=classify_trigger(s.trigger, model.vocab, s.references),
            )
        )
    return records


def cmd_eval(args) -> int:
    merged = resolve_config(args)
    _require(merged, "checkpoint", "test_data")
    ckpt = load_checkpoint(merged["checkpoint"])
    model = ckpt.build_model()
    test_set = load_dataset(merged["test_data"], merged["format"])
    if not test_set:
        raise UsageError(f"no records in {merged['test_data']}")
    records = _records_for_eval(model, test_set, merged["eval_triggers"])
    report = aggregate(records)
    out_dir = Path(merged["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "eval_report.txt"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(echo_config(merged) + "\n")
        fh.write(report.render() + "\n")
    print(report.render())
    print(f"report: {report_path}")
    return 0


def _check_source_length(sample: DataSample) -> None:
    if sample.n_positions > MAX_SOURCE_POSITIONS:
        raise UsageError(
            f"record has {sample.n_positions} source positions; "
            f"the maximum is {MAX_SOURCE_POSITIONS}"
        )


def _generate_for(model: Model, sample: DataSample, top_k: int):
    _check_source_length(sample)
    ranked = beam_decode(model, sample, width=max(top_k, model.config.beam_width))
    return ranked[:top_k]


def cmd_generate(args) -> int:
    merged = resolve_config(args)
    _require(merged, "checkpoint")
    if not args.record:
        raise UsageError("generate needs --record 'field[value], ...'")
    ckpt = load_checkpoint(merged["checkpoint"])
    model = ckpt.build_model()
    intent = args.intent or DUMMY_INTENT
    line = f"{intent}\t{args.record}\t-"
    sample = parse_custom(line).with_trigger(args.trigger)
    for tokens, score in _generate_for(model, sample, args.top_k):
        print(f"{score:9.4f}  {' '.join(tokens)}")
    return 0


def cmd_repl(args) -> int:
    merged = resolve_config(args)
    _require(merged, "checkpoint")
    ckpt = load_checkpoint(merged["checkpoint"])
    model = ckpt.build_model()
    print("record syntax: intent ; field[value], field[value] ; trigger")
    print("(intent and trigger optional; :quit exits)")
    while True:
        try:
            raw = input("> ")
        except EOFError:
            print()
            return 0
        line = raw.strip()
        if not line:
            continue
        if line == ":quit":
            return 0
        parts = [p.strip() for p in line.split(";")]
        try:
            if len(parts) == 1:
                intent, attrs, trigger = DUMMY_INTENT, parts[0], None
            elif len(parts) == 2:
                intent, attrs, trigger = parts[0], parts[1], None
            elif len(parts) == 3:
                intent, attrs = parts[0] or DUMMY_INTENT, parts[1]
                trigger = parts[2] or None
            else:
                raise UsageError("too many ';' segments")
            sample = parse_custom(f"{intent}\t{attrs}\t-").with_trigger(trigger)
            for tokens, score in _generate_for(model, sample, args.top_k):
                print(f"{score:9.4f}  {' '.join(tokens)}")
        except TriggenError as e:
            print(f"error: {e}", file=sys.stderr)


def cmd_sweep(args) -> int:
    merged = resolve_config(args)
    _require(merged, "train_data", "val_data", "test_data")
    fmt = merged["format"]
    train_set = load_dataset(merged["train_data"], fmt)
    val_set = load_dataset(merged["val_data"], fmt)
    test_set = load_dataset(merged["test_data"], fmt)
    scfg = SweepConfig(
        grid=tuple(merged["grid"]),
        weight=float(merged["weight"]),
        metric=merged["metric"],
        model_config=model_config_from(merged),
        train_config=train_config_from(merged),
    ).validate()
    out_dir = Path(merged["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_sweep(
        scfg,
        train_set,
        val_set,
        test_set,
        checkpoint_dir=out_dir / "sweep_checkpoints",
        log=print,
    )
    curve_path = out_dir / "sweep_curve.csv"
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write(echo_config(merged) + "\n")
    with open(curve_path, "a", newline="", encoding="utf-8") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
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
    for r in result.rows:
        mark = " *" if r.ratio == result.best_ratio else ""
        print(
            f"r_k={r.ratio:g}: 0K={r.metric_0k:.2f} +K={r.metric_plus_k:.2f} "
            f"mu'={r.mu_prime:.2f}{mark}"
        )
    print(f"best ratio: {result.best_ratio:g}")
    print(f"curve: {curve_path}")
    return 0


def cmd_convert(args) -> int:
    merged = resolve_config(args)
    _require(merged, "train_data")
    samples = load_dataset(merged["train_data"], merged["format"])
    out_path = args.output
    with open(out_path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(to_record_line(s) + "\n")
    print(f"wrote {len(samples)} records to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--format", choices=["e2e", "webnlg", "custom"], default=None)
    p.add_argument("--train-data", dest="train_data", default=None)
    p.add_argument("--val-data", dest="val_data", default=None)
    p.add_argument("--test-data", dest="test_data", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--embeddings", default=None, help="pretrained word-vector file")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    # model
    p.add_argument("--field-emb-dim", dest="field_emb_dim", type=int, default=None)
    p.add_argument("--intent-emb-dim", dest="intent_emb_dim", type=int, default=None)
    p.add_argument("--value-emb-dim", dest="value_emb_dim", type=int, default=None)
    p.add_argument("--trigger-emb-dim", dest="trigger_emb_dim", type=int, default=None)
    p.add_argument("--encoder-hidden", dest="encoder_hidden", type=int, default=None)
    p.add_argument("--attention-dim", dest="attention_dim", type=int, default=None)
    p.add_argument("--decoder-hidden", dest="decoder_hidden", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--attention", dest="attention_kind", choices=list(ATTENTION_KINDS), default=None)
    p.add_argument("--beam-width", dest="beam_width", type=int, default=None)
    p.add_argument("--max-len", dest="max_len", type=int, default=None)
    p.add_argument("--copy", dest="use_copy", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--bilstm", dest="use_bilstm", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--intent-signal", dest="use_intent", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument(
        "--pretrained",
        dest="use_pretrained_embeddings",
        action=argparse.BooleanOptionalAction,
        default=None,
    )
    p.add_argument(
        "--use-dropout", dest="use_dropout", action=argparse.BooleanOptionalAction, default=None
    )
    p.add_argument("--allow-unk", dest="allow_unk", action=argparse.BooleanOptionalAction, default=None)
    # training
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--trigger-ratio", dest="trigger_ratio", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triggen",
        description="Trigger-guided, intent-aware data-to-text generation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and save a checkpoint")
    _add_common(p_train)
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a test set")
    _add_common(p_eval)
    p_eval.add_argument(
        "--eval-triggers",
        dest="eval_triggers",
        choices=["none", "all", "as-is"],
        default=None,
        help="trigger variant: none (0K), all (+K), or as-is",
    )
    p_eval.set_defaults(fn=cmd_eval)

    p_gen = sub.add_parser("generate", help="generate text for one record")
    _add_common(p_gen)
    p_gen.add_argument("--record", help="attribute list: field[value], field[value], ...")
    p_gen.add_argument("--intent", default=None)
    p_gen.add_argument("--trigger", default=None)
    p_gen.add_argument("--top-k", dest="top_k", type=int, default=3)
    p_gen.set_defaults(fn=cmd_generate)

    p_repl = sub.add_parser("repl", help="interactive generation loop")
    _add_common(p_repl)
    p_repl.add_argument("--top-k", dest="top_k", type=int, default=3)
    p_repl.set_defaults(fn=cmd_repl)

    p_sweep = sub.add_parser("sweep", help="trigger-ratio optimization")
    _add_common(p_sweep)
    p_sweep.add_argument("--grid", type=lambda s: _parse_scalar("grid", s), default=None)
    p_sweep.add_argument("--weight", type=float, default=None)
    p_sweep.add_argument("--metric", choices=["bleu", "rouge_l", "meteor"], default=None)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_conv = sub.add_parser("convert", help="normalize a dataset to record lines")
    _add_common(p_conv)
    p_conv.add_argument("--output", required=True)
    p_conv.set_defaults(fn=cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TriggenError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
