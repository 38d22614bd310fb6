"""Encoder-decoder network with attention, copying, and selective read.

Layout of one sample's forward pass:

* Conditioning encoder: trigger and intent embeddings are concatenated and
  projected into memory slot 0.
* Record encoder: one BiLSTM over field-name embeddings, a second over value
  embeddings; the per-position concat of both is projected into memory slots
  1..N.  Attention and copying then treat conditioning and record slots
  uniformly (copy scores skip slot 0, which names no source token).
* Decoder: an LSTM cell whose input is [previous-token embedding, attention
  context, selective read].  Its state feeds a generate head scoring every
  vocabulary token and a copy head scoring every source position; the two
  score sets share one normalizer, so a token present in both the
  vocabulary and the source accumulates both masses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.embeddings import EmbeddingTable
from .data.samples import DataSample
from .data.vocab import SOS_ID, UNK_ID, IntentSet, Vocabulary
from .errors import ContractError, EmptyInputError
from .numerics import (
    Tensor,
    add,
    concat,
    div,
    dropout,
    exp,
    logsumexp,
    lstm_cell,
    matmul,
    narrow,
    parameter,
    row,
    rows,
    softmax,
    stack,
    sub,
    take,
    tanh,
    total,
    zeros,
)

ATTENTION_KINDS = ("bahdanau", "luong")


@dataclass
class ModelConfig:
    """Architecture switches and sizes; defaults are the full-size setup."""

    field_emb_dim: int = 16
    intent_emb_dim: int = 16
    value_emb_dim: int = 50
    trigger_emb_dim: int = 50
    encoder_hidden: int = 128
    attention_dim: int = 256
    decoder_hidden: int = 256
    dropout: float = 0.2
    use_bilstm: bool = True
    use_pretrained_embeddings: bool = False
    attention_kind: str = "bahdanau"
    use_copy: bool = True
    use_intent: bool = True
    use_dropout: bool = False
    beam_width: int = 3
    max_len: int = 60
    allow_unk: bool = False

    def validate(self) -> "ModelConfig":
        dims = (
            self.field_emb_dim,
            self.intent_emb_dim,
            self.value_emb_dim,
            self.trigger_emb_dim,
            self.encoder_hidden,
            self.attention_dim,
            self.decoder_hidden,
        )
        if any(d <= 0 for d in dims):
            raise ContractError(f"all dimensions must be positive, got {dims}")
        if not 0.0 <= self.dropout < 1.0:
            raise ContractError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.beam_width < 1:
            raise ContractError(f"beam width must be >= 1, got {self.beam_width}")
        if self.attention_kind not in ATTENTION_KINDS:
            raise ContractError(
                f"attention kind must be one of {ATTENTION_KINDS}, got {self.attention_kind!r}"
            )
        if self.trigger_emb_dim != self.value_emb_dim:
            raise ContractError(
                "trigger and value embeddings share one table and must have equal dims"
            )
        if self.max_len < 1:
            raise ContractError("max_len must be >= 1")
        return self

    @classmethod
    def toy(cls, dim: int = 8, **overrides) -> "ModelConfig":
        """Uniformly scaled-down config for fast tests."""
        base = dict(
            field_emb_dim=dim,
            intent_emb_dim=dim,
            value_emb_dim=dim,
            trigger_emb_dim=dim,
            encoder_hidden=dim,
            attention_dim=dim,
            decoder_hidden=dim,
            dropout=0.0,
        )
        base.update(overrides)
        return cls(**base).validate()


@dataclass
class ExtendedVocab:
    """Base vocabulary plus this sample's source tokens.

    Extended ids are the vocabulary ids followed by fresh ids for source
    tokens outside it, in first-occurrence order (field tokens scanned
    first, then value tokens).  ``position_ids[j]`` is the extended id of
    the value token at source position j; ``token_positions`` inverts it.
    """

    vocab: Vocabulary
    source_tokens: list[str]
    extra_tokens: list[str]
    position_ids: list[int]
    token_positions: dict[int, list[int]]

    @classmethod
    def build(cls, vocab: Vocabulary, sample: DataSample) -> "ExtendedVocab":
        source: list[str] = []
        seen: set[str] = set()
        for t in list(sample.fields) + list(sample.values):
            if t not in seen:
                seen.add(t)
                source.append(t)
        extra = [t for t in source if t not in vocab]
        extra_ids = {t: len(vocab) + i for i, t in enumerate(extra)}
        position_ids = [
            extra_ids[v] if v in extra_ids else vocab.id(v) for v in sample.values
        ]
        token_positions: dict[int, list[int]] = {}
        for j, e in enumerate(position_ids):
            token_positions.setdefault(e, []).append(j)
        return cls(vocab, source, extra, position_ids, token_positions)

    @property
    def size(self) -> int:
        return len(self.vocab) + len(self.extra_tokens)

    def id(self, token: str) -> int:
        """Extended id; tokens outside vocabulary and source map to UNK."""
        if token in self.vocab:
            return self.vocab.id(token)
        try:
            return len(self.vocab) + self.extra_tokens.index(token)
        except ValueError:
            return UNK_ID

    def token(self, ext_id: int) -> str:
        if ext_id < 0 or ext_id >= self.size:
            raise ContractError(f"extended id {ext_id} out of range [0, {self.size})")
        if ext_id < len(self.vocab):
            return self.vocab.token(ext_id)
        return self.extra_tokens[ext_id - len(self.vocab)]

    def target_ids(self, reference: list[str]) -> list[int]:
        """Reference tokens as extended ids (outside V∪X becomes UNK)."""
        return [self.id(t) for t in reference]


@dataclass
class Encoded:
    """Per-sample encoder output consumed by every decode step."""

    H: Tensor  # (N+1, attention_dim) memory
    ext: ExtendedVocab
    s0: Tensor  # initial decoder state
    c0: Tensor  # initial decoder cell
    att_pre: Tensor  # memory premultiplied for the attention score
    copy_phi: Tensor | None  # (N, decoder_hidden) tanh(H[1:] @ W_c)
    n_positions: int


@dataclass
class StepOut:
    """Everything one decode step produces."""

    s: Tensor  # new decoder state
    c: Tensor  # new decoder cell
    context: Tensor
    alpha: Tensor  # attention weights over N+1 slots
    scores: Tensor  # concat(generate scores |V|, copy scores N)
    log_z: Tensor  # scalar normalizer
    copy_probs: Tensor | None  # (N,) per-position copy probabilities
    probs: np.ndarray  # extended-vocab probability vector


def _lstm_step(zx, h, c, U, b, hidden: int):
    hc = lstm_cell(zx, h, c, U, b)
    return narrow(hc, 0, hidden), narrow(hc, hidden, 2 * hidden)


class Model:
    """Owns the parameter tensors and the per-sample forward functions."""

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        intents: IntentSet,
        seed: int = 0,
        embeddings: EmbeddingTable | None = None,
    ):
        self.config = config.validate()
        self.vocab = vocab
        self.intents = intents
        self.params: dict[str, Tensor] = {}
        self._init_params(seed, embeddings)

    # ------------------------------------------------------------------
    # parameters
    # ------------------------------------------------------------------

    def _add(self, name: str, rng: np.random.Generator, *shape: int) -> Tensor:
        t = parameter(rng.uniform(-0.08, 0.08, size=shape))
        self.params[name] = t
        return t

    def _init_params(self, seed: int, embeddings: EmbeddingTable | None) -> None:
        cfg = self.config
        rng = np.random.default_rng(seed)
        V = len(self.vocab)
        n_intents = len(self.intents)
        enc_h = cfg.encoder_hidden if cfg.use_bilstm else cfg.attention_dim
        slot_in = (4 if cfg.use_bilstm else 2) * enc_h

        self._add("word_emb", rng, V, cfg.value_emb_dim)
        self._add("field_emb", rng, V, cfg.field_emb_dim)
        self._add("intent_emb", rng, n_intents, cfg.intent_emb_dim)

        def lstm(prefix: str, in_dim: int) -> None:
            self._add(f"{prefix}_W", rng, in_dim, 4 * enc_h)
            self._add(f"{prefix}_U", rng, enc_h, 4 * enc_h)
            self._add(f"{prefix}_b", rng, 4 * enc_h)

        lstm("enc_field_fw", cfg.field_emb_dim)
        lstm("enc_value_fw", cfg.value_emb_dim)
        if cfg.use_bilstm:
            lstm("enc_field_bw", cfg.field_emb_dim)
            lstm("enc_value_bw", cfg.value_emb_dim)

        self._add("mem_W", rng, slot_in, cfg.attention_dim)
        self._add("mem_b", rng, cfg.attention_dim)
        cond_in = cfg.trigger_emb_dim + cfg.intent_emb_dim
        self._add("cond_W", rng, cond_in, cfg.attention_dim)
        self._add("cond_b", rng, cfg.attention_dim)

        init_in = 2 * (2 if cfg.use_bilstm else 1) * enc_h + cfg.attention_dim
        self._add("init_W", rng, init_in, cfg.decoder_hidden)
        self._add("init_b", rng, cfg.decoder_hidden)

        if cfg.attention_kind == "bahdanau":
            self._add("att_W1", rng, cfg.decoder_hidden, cfg.attention_dim)
            self._add("att_W2", rng, cfg.attention_dim, cfg.attention_dim)
            self._add("att_v", rng, cfg.attention_dim)
        else:
            self._add("att_W", rng, cfg.attention_dim, cfg.decoder_hidden)

        dec_in = cfg.value_emb_dim + cfg.attention_dim + cfg.attention_dim
        self._add("dec_W", rng, dec_in, 4 * cfg.decoder_hidden)
        self._add("dec_U", rng, cfg.decoder_hidden, 4 * cfg.decoder_hidden)
        self._add("dec_b", rng, 4 * cfg.decoder_hidden)

        self._add("gen_W", rng, cfg.decoder_hidden, V)
        self._add("gen_b", rng, V)
        if cfg.use_copy:
            self._add("copy_W", rng, cfg.attention_dim, cfg.decoder_hidden)

        if cfg.use_pretrained_embeddings and embeddings is not None:
            we = self.params["word_emb"].data
            for i, tok in enumerate(self.vocab.tokens()):
                vec = embeddings.get(tok)
                if vec is not None:
                    we[i] = vec

    def param_list(self) -> list[Tensor]:
        return list(self.params.values())

    def parameter_count(self) -> int:
        return sum(t.data.size for t in self.params.values())

    # ------------------------------------------------------------------
    # encoding
    # ------------------------------------------------------------------

    def _run_lstm(self, input_mat: Tensor, prefix: str, reverse: bool):
        cfg = self.config
        hidden = cfg.encoder_hidden if cfg.use_bilstm else cfg.attention_dim
        U = self.params[f"{prefix}_U"]
        b = self.params[f"{prefix}_b"]
        # every position's input projection in one matmul
        ZX = matmul(input_mat, self.params[f"{prefix}_W"])
        n = input_mat.shape[0]
        h = zeros(hidden)
        c = zeros(hidden)
        order = range(n - 1, -1, -1) if reverse else range(n)
        outs: list[Tensor | None] = [None] * n
        for t in order:
            h, c = _lstm_step(row(ZX, t), h, c, U, b, hidden)
            outs[t] = h
        return outs, h

    def _maybe_dropout(self, t: Tensor, train_mode: bool, rng) -> Tensor:
        cfg = self.config
        if train_mode and cfg.use_dropout and cfg.dropout > 0.0:
            if rng is None:
                raise ContractError("training-mode dropout needs a random generator")
            return dropout(t, cfg.dropout, rng)
        return t

    def encode(
        self,
        sample: DataSample,
        train_mode: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Encoded:
        cfg = self.config
        n = sample.n_positions
        if n == 0:
            raise EmptyInputError("cannot encode a record with no field/value positions")

        field_ids = [self.vocab.id(t) for t in sample.fields]
        value_ids = [self.vocab.id(t) for t in sample.values]
        field_mat = self._maybe_dropout(
            rows(self.params["field_emb"], field_ids), train_mode, rng
        )
        value_mat = self._maybe_dropout(
            rows(self.params["word_emb"], value_ids), train_mode, rng
        )
        f_fw, f_fw_last = self._run_lstm(field_mat, "enc_field_fw", reverse=False)
        v_fw, v_fw_last = self._run_lstm(value_mat, "enc_value_fw", reverse=False)
        if cfg.use_bilstm:
            f_bw, f_bw_last = self._run_lstm(field_mat, "enc_field_bw", reverse=True)
            v_bw, v_bw_last = self._run_lstm(value_mat, "enc_value_bw", reverse=True)
            per_pos = [
                concat([f_fw[j], f_bw[j], v_fw[j], v_bw[j]]) for j in range(n)
            ]
            finals = concat([f_fw_last, f_bw_last, v_fw_last, v_bw_last])
        else:
            per_pos = [concat([f_fw[j], v_fw[j]]) for j in range(n)]
            finals = concat([f_fw_last, v_fw_last])

        mem_W, mem_b = self.params["mem_W"], self.params["mem_b"]
        slots = [tanh(add(matmul(p, mem_W), mem_b)) for p in per_pos]

        trig_id = self.vocab.id(sample.trigger) if sample.trigger is not None else SOS_ID
        trig_vec = row(self.params["word_emb"], trig_id)
        if cfg.use_intent:
            intent_vec = row(self.params["intent_emb"], self.intents.id(sample.intent))
        else:
            intent_vec = zeros(cfg.intent_emb_dim)
        cond = tanh(
            add(
                matmul(concat([trig_vec, intent_vec]), self.params["cond_W"]),
                self.params["cond_b"],
            )
        )

        H = stack([cond] + slots)
        s0 = tanh(
            add(matmul(concat([finals, cond]), self.params["init_W"]), self.params["init_b"])
        )
        c0 = zeros(cfg.decoder_hidden)

        if cfg.attention_kind == "bahdanau":
            att_pre = matmul(H, self.params["att_W2"])
        else:
            att_pre = matmul(H, self.params["att_W"])
        copy_phi = None
        if cfg.use_copy:
            slot_mat = stack(slots)
            copy_phi = tanh(matmul(slot_mat, self.params["copy_W"]))

        ext = ExtendedVocab.build(self.vocab, sample)
        return Encoded(
            H=H,
            ext=ext,
            s0=s0,
            c0=c0,
            att_pre=att_pre,
            copy_phi=copy_phi,
            n_positions=n,
        )

    # ------------------------------------------------------------------
    # attention and selective read
    # ------------------------------------------------------------------

    def attend(self, s_prev: Tensor, enc: Encoded) -> tuple[Tensor, Tensor]:
        """Context vector and attention weights from the previous state."""
        if self.config.attention_kind == "bahdanau":
            query = matmul(s_prev, self.params["att_W1"])
            scores = matmul(tanh(add(enc.att_pre, query)), self.params["att_v"])
        else:
            scores = matmul(enc.att_pre, s_prev)
        alpha = softmax(scores)
        context = matmul(alpha, enc.H)
        return context, alpha

    def selective_read(
        self, y_prev: int, prev_copy_probs: Tensor | None, enc: Encoded
    ) -> Tensor:
        """Weighted memory read at the positions matching the last token.

        Weights are the previous step's copy probabilities at those
        positions, renormalized to sum one; a token absent from the source
        (or an absent previous distribution) reads nothing.
        """
        cfg = self.config
        if prev_copy_probs is None:
            return zeros(cfg.attention_dim)
        positions = enc.ext.token_positions.get(y_prev)
        if not positions:
            return zeros(cfg.attention_dim)
        weights = take(prev_copy_probs, positions)
        denom = add(total(weights), 1e-300)
        normed = div(weights, denom)
        slot_mat = rows(enc.H, [p + 1 for p in positions])
        return matmul(normed, slot_mat)

    # ------------------------------------------------------------------
    # one decode step
    # ------------------------------------------------------------------

    def decode_step(
        self,
        enc: Encoded,
        y_prev: int,
        s_prev: Tensor,
        c_prev: Tensor,
        prev_copy_probs: Tensor | None,
        train_mode: bool = False,
        rng: np.random.Generator | None = None,
    ) -> StepOut:
        cfg = self.config
        if not 0 <= y_prev < enc.ext.size:
            raise ContractError(
                f"previous-token id {y_prev} outside the extended vocabulary "
                f"[0, {enc.ext.size})"
            )

        emb_id = y_prev if y_prev < len(self.vocab) else UNK_ID
        y_vec = self._maybe_dropout(
            row(self.params["word_emb"], emb_id), train_mode, rng
        )
        context, alpha = self.attend(s_prev, enc)
        sel = self.selective_read(y_prev, prev_copy_probs, enc)

        x = concat([y_vec, context, sel])
        s, c = _lstm_step(
            matmul(x, self.params["dec_W"]),
            s_prev,
            c_prev,
            self.params["dec_U"],
            self.params["dec_b"],
            cfg.decoder_hidden,
        )
        readout = self._maybe_dropout(s, train_mode, rng)

        gen_scores = add(matmul(readout, self.params["gen_W"]), self.params["gen_b"])
        if cfg.use_copy:
            copy_scores = matmul(enc.copy_phi, readout)
            scores = concat([gen_scores, copy_scores])
        else:
            scores = gen_scores
        log_z = logsumexp(scores)

        copy_probs: Tensor | None = None
        if cfg.use_copy:
            copy_probs = exp(sub(narrow(scores, len(self.vocab), scores.shape[0]), log_z))

        probs = np.zeros(enc.ext.size, dtype=scores.data.dtype)
        probs[: len(self.vocab)] = np.exp(gen_scores.data - log_z.data)
        if cfg.use_copy:
            np.add.at(probs, enc.ext.position_ids, copy_probs.data)

        return StepOut(
            s=s,
            c=c,
            context=context,
            alpha=alpha,
            scores=scores,
            log_z=log_z,
            copy_probs=copy_probs,
            probs=probs,
        )

    def target_score_ids(self, enc: Encoded, y: int) -> list[int]:
        """Indices into the step's score vector that emit extended id ``y``."""
        ids: list[int] = []
        if y < len(self.vocab):
            ids.append(y)
        if self.config.use_copy:
            for j in enc.ext.token_positions.get(y, ()):
                ids.append(len(self.vocab) + j)
        return ids
