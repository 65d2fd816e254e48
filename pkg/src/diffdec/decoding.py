"""Iterative reverse-diffusion decoding.

The loop (at most n-k passes): read the parity-error count gamma of the
current word; exit on gamma = 0; otherwise predict the multiplicative noise
with the conditioned denoiser, convert it to additive noise, pick a step
multiplier (fixed 1 in regular mode, syndrome-minimizing grid search in
line-search mode) and take the reverse step scaled by the posterior noise
coefficient at index gamma.  Non-convergence is a normal outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import NoiseSchedule, noise_coefficients
from .gf2 import ParityCheckMatrix, hard_decision, syndrome_weights
from .nn import DenoiserModel

MODES = ("regular", "line_search")


@dataclass(frozen=True)
class DecodeConfig:
    mode: str = "line_search"
    max_iters: int | None = None  # defaults to n-k; never exceeds it
    ls_grid: tuple[float, float, int] = (1.0, 20.0, 20)
    few_iter_cap: int | None = None  # hard cap for few-iteration studies

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        lo, hi, count = self.ls_grid
        if lo <= 0 or hi < lo or count < 1:
            raise ValueError(f"need 0 < lo <= hi and count >= 1, got {self.ls_grid}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.few_iter_cap is not None and self.few_iter_cap < 1:
            raise ValueError("few_iter_cap must be >= 1")

    def grid(self) -> np.ndarray:
        lo, hi, count = self.ls_grid
        return np.linspace(lo, hi, count)


@dataclass(frozen=True)
class TraceStep:
    parity_errors: int
    step_size: float
    weight_after: int


@dataclass(frozen=True)
class DecodeOutcome:
    bits: np.ndarray
    converged: bool
    iters_used: int
    trace: tuple[TraceStep, ...]


@dataclass(frozen=True)
class IterationStats:
    mean: float
    std: float
    words: int
    converged: int


@dataclass
class BatchResult:
    bits: np.ndarray  # (B, n)
    converged: np.ndarray  # (B,) bool
    iters: np.ndarray  # (B,) int
    traces: list[list[TraceStep]] = field(default_factory=list)
    step_sizes: list[float] = field(default_factory=list)  # chosen lambdas, LS mode

    def outcomes(self) -> list[DecodeOutcome]:
        traces = self.traces or [[] for _ in range(len(self.bits))]
        return [DecodeOutcome(self.bits[i], bool(self.converged[i]),
                              int(self.iters[i]), tuple(traces[i]))
                for i in range(len(self.bits))]

    def stats(self) -> IterationStats:
        return IterationStats(float(self.iters.mean()), float(self.iters.std()),
                              len(self.iters), int(self.converged.sum()))


def as_denoiser(model, H: ParityCheckMatrix):
    """Accept a DenoiserModel or any callable (Y, gamma) -> logits."""
    if isinstance(model, DenoiserModel):
        if (model.n, model.k) != (H.n, H.k):
            raise ValueError(
                f"model is bound to ({model.n},{model.k}), code is ({H.n},{H.k})")
        return lambda Y, gamma: model.denoise(Y, H, gamma)
    if callable(model):
        return model
    raise TypeError(f"expected DenoiserModel or callable, got {type(model)!r}")


def _ls_pick(H: ParityCheckMatrix, Y: np.ndarray, eps_hat: np.ndarray,
             coeff: np.ndarray, grid: np.ndarray):
    """Evaluate all step multipliers; smallest lambda wins ties."""
    cand = Y[:, None, :] - (grid[None, :, None] * coeff[:, None, None]) * eps_hat[:, None, :]
    weights = H.syndrome_bits(hard_decision(cand)).sum(axis=-1)  # (B, C)
    pick = np.argmin(weights, axis=1)  # first minimum = smallest lambda
    rows = np.arange(len(Y))
    return grid[pick], cand[rows, pick], weights[rows, pick]


def line_search(H: ParityCheckMatrix, y: np.ndarray, eps_hat: np.ndarray, gamma: int,
                schedule: NoiseSchedule, grid) -> float:
    """Step multiplier minimizing the post-step syndrome weight on the grid."""
    if gamma < 1:
        raise ValueError("line search needs a non-zero parity-error count")
    if isinstance(grid, tuple) and len(grid) == 3:
        grid = np.linspace(grid[0], grid[1], int(grid[2]))
    grid = np.asarray(grid, dtype=np.float64)
    coeff = noise_coefficients(schedule, np.array([gamma]))
    lam, _, _ = _ls_pick(H, np.asarray(y, dtype=np.float64)[None, :],
                         np.asarray(eps_hat, dtype=np.float64)[None, :], coeff, grid)
    return float(lam[0])


def decode_batch(model, H: ParityCheckMatrix, schedule: NoiseSchedule, Y: np.ndarray,
                 config: DecodeConfig = DecodeConfig(),
                 collect_traces: bool = True) -> BatchResult:
    """Decode a (B, n) batch of received words."""
    num_checks = H.n - H.k
    if schedule.T < num_checks:
        raise ValueError(f"schedule has T={schedule.T} < n-k={num_checks}")
    denoiser = as_denoiser(model, H)
    Y = np.array(Y, dtype=np.float64, copy=True)
    if Y.ndim != 2 or Y.shape[1] != H.n:
        raise ValueError(f"expected (B, {H.n}) words, got {Y.shape}")
    B = len(Y)
    limit = min(config.max_iters or num_checks, num_checks)
    if config.few_iter_cap is not None:
        limit = min(limit, config.few_iter_cap)
    grid = config.grid()

    iters = np.zeros(B, dtype=np.int64)
    traces: list[list[TraceStep]] = [[] for _ in range(B)]
    step_sizes: list[float] = []
    alive = np.arange(B)
    for _ in range(limit):
        if alive.size == 0:
            break
        gamma = syndrome_weights(H, Y[alive])
        alive = alive[gamma > 0]
        gamma = gamma[gamma > 0]
        if alive.size == 0:
            break
        logits = denoiser(Y[alive], gamma)
        sign_y = np.where(Y[alive] < 0, -1.0, 1.0)
        sign_eps = np.where(logits > 0, -1.0, 1.0)  # logit > 0 means flip
        eps_hat = Y[alive] - sign_eps * sign_y
        coeff = noise_coefficients(schedule, gamma)
        if config.mode == "line_search":
            lam, Y_next, w_after = _ls_pick(H, Y[alive], eps_hat, coeff, grid)
            step_sizes.extend(lam.tolist())
        else:
            lam = np.ones(alive.size)
            Y_next = Y[alive] - coeff[:, None] * eps_hat
            w_after = syndrome_weights(H, Y_next)
        Y[alive] = Y_next
        iters[alive] += 1
        if collect_traces:
            for j, word in enumerate(alive):
                traces[word].append(
                    TraceStep(int(gamma[j]), float(lam[j]), int(w_after[j])))
    converged = syndrome_weights(H, Y) == 0
    return BatchResult(hard_decision(Y), converged, iters,
                       traces if collect_traces else [], step_sizes)


def decode(model, H: ParityCheckMatrix, schedule: NoiseSchedule, y: np.ndarray,
           config: DecodeConfig = DecodeConfig()) -> DecodeOutcome:
    """Decode a single received word."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (H.n,):
        raise ValueError(f"expected a length-{H.n} word, got {y.shape}")
    return decode_batch(model, H, schedule, y[None, :], config).outcomes()[0]
