"""Teacher-forced training, validation-based selection, and checkpoints."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data.samples import DataSample, expand_training_pairs
from .data.triggers import augment_with_triggers
from .data.vocab import EOS_ID, SOS_ID, IntentSet, Vocabulary
from .errors import CheckpointError, ContractError, NonFiniteError
from .model import Model, ModelConfig
from .numerics import (
    Adam,
    Tensor,
    add_n,
    backward,
    logsumexp,
    no_grad,
    scale,
    sub,
    take,
)


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 18
    lr: float = 0.001
    seed: int = 0
    trigger_ratio: float = 0.0

    def validate(self) -> "TrainConfig":
        if self.batch_size < 1:
            raise ContractError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ContractError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.trigger_ratio <= 1.0:
            raise ContractError(f"trigger ratio must be in [0, 1], got {self.trigger_ratio}")
        if self.lr <= 0.0:
            raise ContractError(f"learning rate must be positive, got {self.lr}")
        return self


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    history: list[EpochRecord]
    best_epoch: int
    best_val_loss: float


def sequence_nll(
    model: Model,
    sample: DataSample,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Token-mean negative log-likelihood of the sample's first reference.

    Teacher forcing throughout: step t conditions on the gold previous
    token.  Each step's term is log Z minus the log of the summed scores
    that emit the gold token (its generate score plus every matching copy
    score), which equals -log P(y_t).
    """
    enc = model.encode(sample, train_mode=train_mode, rng=rng)
    reference = sample.references[0]
    if model.config.use_copy:
        targets = enc.ext.target_ids(reference)
    else:
        targets = [model.vocab.id(t) for t in reference]
    targets = targets + [EOS_ID]

    y_prev = SOS_ID
    s, c, copy_probs = enc.s0, enc.c0, None
    terms = []
    for y in targets:
        out = model.decode_step(
            enc, y_prev, s, c, copy_probs, train_mode=train_mode, rng=rng
        )
        idx = model.target_score_ids(enc, y)
        terms.append(sub(out.log_z, logsumexp(take(out.scores, idx))))
        y_prev, s, c, copy_probs = y, out.s, out.c, out.copy_probs
    return scale(add_n(terms), 1.0 / len(terms))


def dataset_loss(model: Model, samples: list[DataSample]) -> float:
    """Mean sequence NLL without building gradient graphs."""
    if not samples:
        raise ContractError("cannot evaluate loss on an empty sample list")
    with no_grad():
        values = [float(sequence_nll(model, s).data) for s in samples]
    return float(np.mean(values))


def train(
    model: Model,
    train_samples: list[DataSample],
    val_samples: list[DataSample],
    config: TrainConfig,
    log=None,
) -> TrainResult:
    """Run the full loop and leave the best-validation parameters in place.

    Training pairs are expanded one-reference-per-pair, trigger-augmented
    once at the configured ratio, and visited in a seeded shuffled order
    each epoch.  Gradients are averaged over each batch for one Adam step.
    """
    config.validate()
    if not train_samples or not val_samples:
        raise ContractError("training and validation sets must both be non-empty")

    pairs = augment_with_triggers(
        expand_training_pairs(train_samples), config.trigger_ratio, config.seed
    )
    val_pairs = augment_with_triggers(
        expand_training_pairs(val_samples), config.trigger_ratio, config.seed + 1
    )

    params = model.param_list()
    names = list(model.params.keys())
    opt = Adam(lr=config.lr)
    shuffle_rng = np.random.default_rng(config.seed)
    dropout_rng = np.random.default_rng(config.seed + 2)

    history: list[EpochRecord] = []
    best_val = float("inf")
    best_epoch = -1
    best_state: dict[str, np.ndarray] | None = None

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(pairs))
        epoch_loss = 0.0
        for b_idx, start in enumerate(range(0, len(order), config.batch_size)):
            batch = [pairs[i] for i in order[start : start + config.batch_size]]
            acc: dict[Tensor, np.ndarray] = {}
            batch_loss = 0.0
            for sample in batch:
                try:
                    loss = sequence_nll(model, sample, train_mode=True, rng=dropout_rng)
                    grads = backward(loss, params=params)
                except NonFiniteError as e:
                    raise NonFiniteError(
                        f"non-finite loss at epoch {epoch}, batch {b_idx}: {e}"
                    ) from e
                batch_loss += float(loss.data)
                for p, g in grads.items():
                    if p in acc:
                        acc[p] += g
                    else:
                        acc[p] = g.copy()
            inv = 1.0 / len(batch)
            opt.step({p: g * inv for p, g in acc.items()})
            epoch_loss += batch_loss

        train_loss = epoch_loss / len(pairs)
        val_loss = dataset_loss(model, val_pairs)
        history.append(EpochRecord(epoch, train_loss, val_loss))
        if log is not None:
            log(f"epoch {epoch}: train_loss={train_loss:.4f} val_loss={val_loss:.4f}")
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_state = {n: model.params[n].data.copy() for n in names}

    if best_state is not None:
        for n in names:
            model.params[n].data[:] = best_state[n]
    return TrainResult(history=history, best_epoch=best_epoch, best_val_loss=best_val)


def write_history(path: str | Path, history: list[EpochRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history:
            fh.write(json.dumps(asdict(rec)) + "\n")


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"TGC1"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    intents: IntentSet
    tensors: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def build_model(self) -> Model:
        model = Model(self.config, self.vocab, self.intents, seed=0)
        own = set(model.params.keys())
        saved = set(self.tensors.keys())
        if own != saved:
            raise CheckpointError(
                f"parameter sets differ: missing {sorted(own - saved)}, "
                f"unexpected {sorted(saved - own)}"
            )
        for name, arr in self.tensors.items():
            if model.params[name].data.shape != arr.shape:
                raise CheckpointError(
                    f"tensor {name!r} has shape {arr.shape}, "
                    f"expected {model.params[name].data.shape}"
                )
            model.params[name].data = arr.copy()
        return model


def save_checkpoint(path: str | Path, model: Model, meta: dict | None = None) -> None:
    manifest = {
        "format_version": CHECKPOINT_VERSION,
        "model_config": asdict(model.config),
        "vocab": model.vocab.tokens(),
        "intents": model.intents.labels(),
        "meta": meta or {},
        "tensors": [
            {
                "name": name,
                "shape": list(t.data.shape),
                "dtype": str(t.data.dtype),
            }
            for name, t in model.params.items()
        ],
    }
    blob = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for t in model.params.values():
            arr = np.ascontiguousarray(t.data)
            fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint file not found: {path}")
    data = path.read_bytes()
    if len(data) < 16 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file (bad magic)")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})"
        )
    (blob_len,) = struct.unpack_from("<Q", data, 8)
    blob_start = 16
    blob_end = blob_start + blob_len
    if len(data) < blob_end:
        raise CheckpointError(f"{path} is truncated inside its manifest")
    try:
        manifest = json.loads(data[blob_start:blob_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path} has a corrupt manifest: {e}") from None

    tensors: dict[str, np.ndarray] = {}
    offset = blob_end
    for spec in manifest["tensors"]:
        dtype = np.dtype(spec["dtype"]).newbyteorder("<")
        shape = tuple(spec["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape)) if shape else dtype.itemsize
        if len(data) < offset + nbytes:
            raise CheckpointError(f"{path} is truncated inside tensor {spec['name']!r}")
        arr = np.frombuffer(data, dtype=dtype, count=int(np.prod(shape)), offset=offset)
        tensors[spec["name"]] = arr.reshape(shape).astype(dtype.newbyteorder("="))
        offset += nbytes
    if offset != len(data):
        raise CheckpointError(f"{path} has {len(data) - offset} trailing bytes")

    config = ModelConfig(**manifest["model_config"]).validate()
    vocab = Vocabulary.from_tokens_in_order(manifest["vocab"])
    intents = IntentSet.from_labels_in_order(manifest["intents"])
    return Checkpoint(
        config=config,
        vocab=vocab,
        intents=intents,
        tensors=tensors,
        meta=manifest.get("meta", {}),
    )
