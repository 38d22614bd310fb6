"""Loss definition, loop determinism, best-validation restore, checkpoints."""

import json

import numpy as np
import pytest

from triggen.data import (
    DataSample,
    build_intents,
    build_vocab,
    synthetic_corpus,
)
from triggen.decoding import greedy_decode
from triggen.errors import CheckpointError, ContractError, NonFiniteError
from triggen.model import Model, ModelConfig
from triggen.training import (
    CHECKPOINT_MAGIC,
    Checkpoint,
    TrainConfig,
    dataset_loss,
    load_checkpoint,
    save_checkpoint,
    sequence_nll,
    train,
    write_history,
)


def small_model(samples, dim=6, seed=0, **overrides):
    cfg = ModelConfig.toy(dim, **overrides)
    return Model(cfg, build_vocab(samples), build_intents(samples), seed=seed)


class TestSequenceNLL:
    def test_uniform_scores_give_log_column_count(self):
        # zeroed parameters make every score column 0, so each step is a
        # uniform choice over |V| + N columns; targets off the source have
        # exactly one emitting column, hence loss = ln(|V| + N)
        s = DataSample(
            ["name", "name"], ["green", "man"], [["is"]], "inform"
        )
        m = small_model([s])
        for p in m.params.values():
            p.data[:] = 0.0
        expect = np.log(len(m.vocab) + s.n_positions)
        loss = sequence_nll(m, s)
        assert np.isclose(float(loss.data), expect, atol=1e-12)

    def test_source_target_gains_copy_columns(self):
        # "man" sits at one source position, so two columns emit it and its
        # step is ln(T) - ln(2) cheaper than the off-source step
        s = DataSample(
            ["name", "name"], ["green", "man"], [["man"]], "inform"
        )
        m = small_model([s])
        for p in m.params.values():
            p.data[:] = 0.0
        T = len(m.vocab) + s.n_positions
        expect = (np.log(T / 2) + np.log(T)) / 2  # "man" step then EOS step
        assert np.isclose(float(sequence_nll(m, s).data), expect, atol=1e-12)

    def test_mean_over_steps_includes_eos(self):
        s = DataSample(["name"], ["green"], [["is", "is", "is"]], "inform")
        m = small_model([s])
        for p in m.params.values():
            p.data[:] = 0.0
        # 3 reference tokens + EOS, all uniform steps
        expect = np.log(len(m.vocab) + 1)
        assert np.isclose(float(sequence_nll(m, s).data), expect, atol=1e-12)

    def test_no_copy_loss_uses_plain_vocab(self):
        s = DataSample(["name"], ["green"], [["green"]], "inform")
        m = small_model([s], use_copy=False)
        for p in m.params.values():
            p.data[:] = 0.0
        expect = np.log(len(m.vocab))
        assert np.isclose(float(sequence_nll(m, s).data), expect, atol=1e-12)

    def test_uses_first_reference(self):
        a = DataSample(["name"], ["green"], [["green", "man"]], "inform")
        b = DataSample(
            ["name"], ["green"], [["green", "man"], ["other", "text"]], "inform"
        )
        m = small_model([a, b])
        assert float(sequence_nll(m, a).data) == float(sequence_nll(m, b).data)


class TestDatasetLoss:
    def test_mean_of_sample_losses(self):
        samples = synthetic_corpus(4, seed=0)
        m = small_model(samples)
        per = [float(sequence_nll(m, s).data) for s in samples]
        assert dataset_loss(m, samples) == pytest.approx(np.mean(per), abs=1e-12)

    def test_empty_rejected(self):
        m = small_model(synthetic_corpus(2, seed=0))
        with pytest.raises(ContractError):
            dataset_loss(m, [])


class TestTrainLoop:
    def _run(self, seed=0, epochs=3, model_seed=0, ratio=0.0):
        samples = synthetic_corpus(6, seed=1)
        m = small_model(samples, dim=5, seed=model_seed)
        cfg = TrainConfig(
            batch_size=3, epochs=epochs, lr=0.01, seed=seed, trigger_ratio=ratio
        )
        res = train(m, samples, samples, cfg)
        return m, res

    def test_history_shape_and_numbering(self):
        _, res = self._run(epochs=3)
        assert [r.epoch for r in res.history] == [1, 2, 3]
        assert all(np.isfinite(r.train_loss) and np.isfinite(r.val_loss) for r in res.history)

    def test_loss_decreases_on_average(self):
        _, res = self._run(epochs=4)
        assert res.history[-1].train_loss < res.history[0].train_loss

    def test_deterministic_under_seed(self):
        m1, r1 = self._run(seed=5)
        m2, r2 = self._run(seed=5)
        for k in m1.params:
            assert np.array_equal(m1.params[k].data, m2.params[k].data)
        assert [(r.train_loss, r.val_loss) for r in r1.history] == [
            (r.train_loss, r.val_loss) for r in r2.history
        ]

    def test_seed_changes_trajectory(self):
        _, r1 = self._run(seed=5, epochs=2)
        _, r2 = self._run(seed=6, epochs=2)
        assert [r.train_loss for r in r1.history] != [r.train_loss for r in r2.history]

    def test_best_val_is_minimum_and_restored(self):
        samples = synthetic_corpus(6, seed=1)
        m = small_model(samples, dim=5)
        cfg = TrainConfig(batch_size=2, epochs=5, lr=0.05, seed=0)
        res = train(m, samples, samples, cfg)
        vals = [r.val_loss for r in res.history]
        assert res.best_val_loss == pytest.approx(min(vals), abs=1e-12)
        assert res.best_epoch == int(np.argmin(vals)) + 1
        # the restored parameters must actually produce the best val loss
        from triggen.data import expand_training_pairs
        from triggen.data import augment_with_triggers

        val_pairs = augment_with_triggers(expand_training_pairs(samples), 0.0, cfg.seed + 1)
        assert dataset_loss(m, val_pairs) == pytest.approx(res.best_val_loss, abs=1e-12)

    def test_trigger_ratio_changes_training(self):
        m1, _ = self._run(ratio=0.0, epochs=2)
        m2, _ = self._run(ratio=1.0, epochs=2)
        assert not np.array_equal(m1.params["cond_W"].data, m2.params["cond_W"].data)

    def test_non_finite_abort_names_epoch_and_batch(self):
        samples = synthetic_corpus(3, seed=0)
        m = small_model(samples)
        m.params["word_emb"].data[:] = np.nan
        with pytest.raises(NonFiniteError, match="epoch 1, batch 0"):
            train(m, samples, samples, TrainConfig(batch_size=2, epochs=1, seed=0))

    def test_overflow_divergence_aborts_with_location(self):
        # a finite but absurd parameter blows up after the first update;
        # the loop must still say where
        samples = synthetic_corpus(3, seed=0)
        m = small_model(samples)
        m.params["gen_b"].data[:] = 1e308
        with pytest.raises(NonFiniteError, match=r"epoch 1, batch \d"):
            train(m, samples, samples, TrainConfig(batch_size=2, epochs=1, seed=0))

    def test_empty_sets_rejected(self):
        samples = synthetic_corpus(2, seed=0)
        m = small_model(samples)
        with pytest.raises(ContractError):
            train(m, [], samples, TrainConfig(epochs=1))
        with pytest.raises(ContractError):
            train(m, samples, [], TrainConfig(epochs=1))

    def test_config_validation(self):
        with pytest.raises(ContractError):
            TrainConfig(batch_size=0).validate()
        with pytest.raises(ContractError):
            TrainConfig(epochs=0).validate()
        with pytest.raises(ContractError):
            TrainConfig(trigger_ratio=1.2).validate()
        with pytest.raises(ContractError):
            TrainConfig(lr=0.0).validate()

    def test_multi_reference_samples_expand(self):
        samples = synthetic_corpus(4, seed=3, max_references=3)
        assert sum(len(s.references) for s in samples) > len(samples)
        m = small_model(samples, dim=4)
        res = train(m, samples, samples, TrainConfig(batch_size=4, epochs=1, seed=0))
        assert len(res.history) == 1

    def test_log_callback_sees_every_epoch(self):
        samples = synthetic_corpus(3, seed=0)
        m = small_model(samples, dim=4)
        lines = []
        train(m, samples, samples, TrainConfig(batch_size=2, epochs=2, seed=0), log=lines.append)
        assert len(lines) == 2
        assert "epoch 1" in lines[0] and "val_loss" in lines[0]


class TestWriteHistory:
    def test_jsonl_roundtrip(self, tmp_path):
        samples = synthetic_corpus(3, seed=0)
        m = small_model(samples, dim=4)
        res = train(m, samples, samples, TrainConfig(batch_size=2, epochs=2, seed=0))
        p = tmp_path / "history.jsonl"
        write_history(p, res.history)
        rows = [json.loads(line) for line in p.read_text().splitlines()]
        assert [r["epoch"] for r in rows] == [1, 2]
        assert rows[0]["train_loss"] == res.history[0].train_loss


class TestCheckpoint:
    def _trained(self, tmp_path, **overrides):
        samples = synthetic_corpus(4, seed=2)
        m = small_model(samples, dim=5, **overrides)
        train(m, samples, samples, TrainConfig(batch_size=2, epochs=1, seed=0))
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, m, meta={"note": "test"})
        return m, samples, path

    def test_bitwise_roundtrip(self, tmp_path):
        m, _, path = self._trained(tmp_path)
        ckpt = load_checkpoint(path)
        assert set(ckpt.tensors) == set(m.params)
        for name, t in m.params.items():
            arr = ckpt.tensors[name]
            assert arr.dtype == t.data.dtype
            assert arr.tobytes() == t.data.tobytes()

    def test_second_save_is_byte_identical(self, tmp_path):
        m, _, path = self._trained(tmp_path)
        other = tmp_path / "again.ckpt"
        save_checkpoint(other, m, meta={"note": "test"})
        assert path.read_bytes() == other.read_bytes()

    def test_rebuilt_model_generates_identically(self, tmp_path):
        m, samples, path = self._trained(tmp_path)
        rebuilt = load_checkpoint(path).build_model()
        for s in samples:
            assert greedy_decode(rebuilt, s, max_len=15) == greedy_decode(m, s, max_len=15)

    def test_config_vocab_intents_survive(self, tmp_path):
        m, _, path = self._trained(tmp_path, use_bilstm=False)
        ckpt = load_checkpoint(path)
        assert ckpt.config == m.config
        assert ckpt.vocab.tokens() == m.vocab.tokens()
        assert ckpt.intents.labels() == m.intents.labels()
        assert ckpt.meta == {"note": "test"}

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.ckpt"
        p.write_bytes(b"not a checkpoint at all, definitely")
        with pytest.raises(CheckpointError, match="bad magic"):
            load_checkpoint(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "absent.ckpt")

    def test_unsupported_version(self, tmp_path):
        _, _, path = self._trained(tmp_path)
        data = bytearray(path.read_bytes())
        data[4:8] = (99).to_bytes(4, "little")
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointError, match="version 99"):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path):
        _, _, path = self._trained(tmp_path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 50])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        _, _, path = self._trained(tmp_path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path)

    def test_parameter_set_mismatch(self, tmp_path):
        m, _, path = self._trained(tmp_path)
        ckpt = load_checkpoint(path)
        del ckpt.tensors["gen_b"]
        with pytest.raises(CheckpointError, match="gen_b"):
            ckpt.build_model()

    def test_shape_mismatch(self, tmp_path):
        m, _, path = self._trained(tmp_path)
        ckpt = load_checkpoint(path)
        ckpt.tensors["gen_b"] = ckpt.tensors["gen_b"][:-1]
        with pytest.raises(CheckpointError, match="shape"):
            ckpt.build_model()

    def test_magic_constant(self):
        assert CHECKPOINT_MAGIC == b"TGC1"
