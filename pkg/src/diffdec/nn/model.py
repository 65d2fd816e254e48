"""Parity-conditioned denoiser.

Input is the codeword-invariant feature vector [|y|, s(y)] of length 2n-k;
output is one logit per code bit predicting whether that bit's sign was
flipped by the channel (the binarized multiplicative noise).

Each of the 2n-k scalar features is embedded by scaling a learned
position-specific d-vector, then every embedding is multiplied elementwise
by a learned conditioning row indexed by the parity-error count e in
{0, ..., n-k}.  Two backbones share that front end:

* ``mlp`` - flatten the conditioned embeddings and run a GELU MLP;
* ``masked_attention`` - treat the 2n-k embeddings as tokens and run
  pre-norm self-attention blocks whose attention is restricted to pairs of
  positions that share a parity check (magnitude i <-> syndrome r iff
  H[r,i]=1, magnitude i <-> magnitude j iff some check contains both,
  syndrome tokens only attend to themselves), plus self-connections.
  Logits are read off the first n tokens with a shared linear head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gf2 import ParityCheckMatrix, hard_decision
from . import tensor as T
from .tensor import Tensor

BACKBONES = ("mlp", "masked_attention")


@dataclass(frozen=True)
class ArchConfig:
    backbone: str = "mlp"
    embed_dim: int = 32
    layers: int = 2
    hidden_mult: int = 4

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"backbone must be one of {BACKBONES}, got {self.backbone!r}")
        if self.embed_dim < 1 or self.layers < 0 or self.hidden_mult < 1:
            raise ValueError("embed_dim/hidden_mult must be >= 1 and layers >= 0")


def attention_mask(H: np.ndarray) -> np.ndarray:
    """Boolean (2n-k, 2n-k) mask of allowed attention pairs for a code."""
    m, n = H.shape
    h = H.astype(bool)
    s = n + m
    allow = np.zeros((s, s), dtype=bool)
    allow[:n, :n] = (h.T.astype(np.int64) @ h.astype(np.int64)) > 0
    allow[:n, n:] = h.T
    allow[n:, :n] = h
    np.fill_diagonal(allow, True)
    return allow


def preprocess(y: np.ndarray, H: ParityCheckMatrix) -> tuple[np.ndarray, int]:
    """Map a received word to ([|y|, s(y)], parity-error count)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (H.n,):
        raise ValueError(f"expected a length-{H.n} vector, got {y.shape}")
    feats, e = preprocess_batch(y[None, :], H)
    return feats[0], int(e[0])


def preprocess_batch(Y: np.ndarray, H: ParityCheckMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Batched preprocess: (B, n) -> ((B, 2n-k), (B,) parity counts)."""
    Y = np.asarray(Y, dtype=np.float64)
    s_bits = H.syndrome_bits(hard_decision(Y))
    feats = np.concatenate([np.abs(Y), s_bits.astype(np.float64)], axis=-1)
    return feats, s_bits.sum(axis=-1).astype(np.int64)


class DenoiserModel:
    """Flip-probability predictor bound to one code's dimensions."""

    def __init__(self, arch: ArchConfig, n: int, k: int,
                 params: dict[str, Tensor], mask: np.ndarray | None):
        if arch.backbone == "masked_attention":
            s = 2 * n - k
            if mask is None or mask.shape != (s, s):
                raise ValueError("masked_attention model needs a (2n-k, 2n-k) mask")
        self.arch = arch
        self.n = n
        self.k = k
        self.params = params
        self.mask = mask
        self._mask_bias = None
        if mask is not None:
            self._mask_bias = np.where(mask, 0.0, -np.inf)

    # -- construction -----------------------------------------------------

    @classmethod
    def create(cls, code: ParityCheckMatrix, arch: ArchConfig, seed: int = 0) -> "DenoiserModel":
        n, k = code.n, code.k
        s = 2 * n - k
        d = arch.embed_dim
        rng = np.random.Generator(np.random.Philox(key=seed))
        params: dict[str, Tensor] = {}

        def param(name, array):
            t = Tensor(array, requires_grad=True)
            params[name] = t
            return t

        param("embed.weight", rng.standard_normal((s, d)))
        # ones + small noise: conditioning starts as a near-identity gate
        param("cond.table", 1.0 + 0.02 * rng.standard_normal((n - k + 1, d)))
        if arch.backbone == "mlp":
            width = arch.hidden_mult * d
            fan_in = s * d
            for i in range(arch.layers):
                param(f"hidden.{i}.weight", rng.standard_normal((fan_in, width)) / np.sqrt(fan_in))
                param(f"hidden.{i}.bias", np.zeros(width))
                fan_in = width
            param("head.weight", 0.1 * rng.standard_normal((fan_in, n)) / np.sqrt(fan_in))
            param("head.bias", np.zeros(n))
            mask = None
        else:
            width = arch.hidden_mult * d
            for i in range(arch.layers):
                pre = f"blocks.{i}."
                param(pre + "ln1.gain", np.ones(d))
                param(pre + "ln1.bias", np.zeros(d))
                for w in ("wq", "wk", "wv", "wo"):
                    param(pre + w, rng.standard_normal((d, d)) / np.sqrt(d))
                param(pre + "ln2.gain", np.ones(d))
                param(pre + "ln2.bias", np.zeros(d))
                param(pre + "ffn1.weight", rng.standard_normal((d, width)) / np.sqrt(d))
                param(pre + "ffn1.bias", np.zeros(width))
                param(pre + "ffn2.weight", rng.standard_normal((width, d)) / np.sqrt(width))
                param(pre + "ffn2.bias", np.zeros(d))
            param("final_ln.gain", np.ones(d))
            param("final_ln.bias", np.zeros(d))
            param("head.weight", 0.1 * rng.standard_normal((d, 1)) / np.sqrt(d))
            param("head.bias", np.zeros(1))
            mask = attention_mask(code.matrix)
        return cls(arch, n, k, params, mask)

    # -- forward ----------------------------------------------------------

    def forward(self, features, e) -> Tensor:
        """Logits for one feature vector or a (B, 2n-k) batch."""
        feats = features if isinstance(features, Tensor) else Tensor(features)
        single = feats.data.ndim == 1
        if single:
            feats = T.reshape(feats, (1, -1))
        e_arr = np.atleast_1d(np.asarray(e, dtype=np.int64))
        s = 2 * self.n - self.k
        if feats.data.shape[-1] != s:
            raise ValueError(f"expected feature length {s}, got {feats.data.shape[-1]}")
        if ((e_arr < 0) | (e_arr > self.n - self.k)).any():
            raise ValueError(f"parity count outside 0..{self.n - self.k}")
        b = feats.data.shape[0]
        if len(e_arr) != b:
            raise ValueError(f"{b} feature rows but {len(e_arr)} parity counts")

        emb = T.mul(T.reshape(feats, (b, s, 1)), self.params["embed.weight"])
        psi = T.gather_rows(self.params["cond.table"], e_arr)
        x = T.mul(emb, T.reshape(psi, (b, 1, -1)))

        if self.arch.backbone == "mlp":
            h = T.reshape(x, (b, -1))
            for i in range(self.arch.layers):
                h = T.gelu(T.add(T.matmul(h, self.params[f"hidden.{i}.weight"]),
                                 self.params[f"hidden.{i}.bias"]))
            logits = T.add(T.matmul(h, self.params["head.weight"]), self.params["head.bias"])
        else:
            d = self.arch.embed_dim
            scale = 1.0 / np.sqrt(d)
            for i in range(self.arch.layers):
                pre = f"blocks.{i}."
                h = T.layer_norm(x, self.params[pre + "ln1.gain"], self.params[pre + "ln1.bias"])
                q = T.matmul(h, self.params[pre + "wq"])
                k_ = T.matmul(h, self.params[pre + "wk"])
                v = T.matmul(h, self.params[pre + "wv"])
                scores = T.add(T.mul(T.matmul(q, T.swap_last_axes(k_)), scale), self._mask_bias)
                att = T.matmul(T.softmax_last(scores), v)
                x = T.add(x, T.matmul(att, self.params[pre + "wo"]))
                h2 = T.layer_norm(x, self.params[pre + "ln2.gain"], self.params[pre + "ln2.bias"])
                f = T.gelu(T.add(T.matmul(h2, self.params[pre + "ffn1.weight"]),
                                 self.params[pre + "ffn1.bias"]))
                x = T.add(x, T.add(T.matmul(f, self.params[pre + "ffn2.weight"]),
                                   self.params[pre + "ffn2.bias"]))
            x = T.layer_norm(x, self.params["final_ln.gain"], self.params["final_ln.bias"])
            bits = T.slice_leading(x, self.n, axis=1)
            logits = T.add(T.reshape(T.matmul(bits, self.params["head.weight"]), (b, self.n)),
                           self.params["head.bias"])
        return T.reshape(logits, (-1,)) if single else logits

    def denoise(self, Y: np.ndarray, H: ParityCheckMatrix,
                gamma: np.ndarray | None = None) -> np.ndarray:
        """Inference entry point: raw received words -> flip logits (no grad)."""
        feats, e = preprocess_batch(Y, H)
        if gamma is None:
            gamma = e
        with T.no_grad():
            return self.forward(feats, gamma).data

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()


def forward(model: DenoiserModel, features, e) -> Tensor:
    return model.forward(features, e)
