"""Monte-Carlo BER/FER harness and the side studies.

Benchmarks transmit uniformly random codewords (exercising the decoders'
codeword invariance end to end), decode with a chosen decoder kind and
accumulate integer error counters until the stopping rule is met.  Work is
partitioned into per-worker Philox streams keyed by
(point index, seed XOR worker), and counters merge order-independently, so
a report is byte-reproducible given (seed, worker count).

BER counts all n codeword bits, not only information bits; comparisons
between decoders run under the same convention.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bp import TannerGraph, bp_decode_batch
from .channel import EbN0Point, awgn_batch, bpsk, ebn0_to_sigma, make_rng
from .decoding import DecodeConfig, decode_batch
from .diffusion import NoiseSchedule
from .gf2 import GeneratorMatrix, ParityCheckMatrix, encode_batch, ml_decode_batch, \
    repetition_3_1, syndrome_weights, systematic_generator

DECODER_KINDS = ("ddecc", "ddecc-ls", "bp", "ml")


@dataclass(frozen=True)
class StopRule:
    """Transmit until both minimums are met, capped by max_words."""

    min_words: int = 10_000
    min_error_frames: int = 100
    max_words: int = 100_000

    def __post_init__(self):
        if self.min_words < 1 or self.min_error_frames < 0 or self.max_words < self.min_words:
            raise ValueError(f"inconsistent stop rule {self}")

    def satisfied(self, words: int, error_frames: int) -> bool:
        if words >= self.max_words:
            return True
        return words >= self.min_words and error_frames >= self.min_error_frames


@dataclass
class BerPoint:
    decoder: str
    ebn0_db: float
    sigma: float
    words: int
    bits_sent: int
    bit_errors: int
    frame_errors: int
    iter_sum: int
    iter_sumsq: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent

    @property
    def fer(self) -> float:
        return self.frame_errors / self.words

    @property
    def neg_ln_ber(self) -> float | None:
        return -float(np.log(self.ber)) if self.bit_errors > 0 else None

    @property
    def ber_se(self) -> float:
        # iid-bit binomial approximation, reported for tolerance bookkeeping
        return float(np.sqrt(self.ber * (1.0 - self.ber) / self.bits_sent))

    @property
    def iter_mean(self) -> float:
        return self.iter_sum / self.words

    @property
    def iter_std(self) -> float:
        return float(np.sqrt(max(self.iter_sumsq / self.words - self.iter_mean**2, 0.0)))


CSV_COLUMNS = ("decoder", "ebn0_db", "sigma", "words", "bits_sent", "bit_errors",
               "frame_errors", "ber", "fer", "neg_ln_ber", "ber_se", "iter_mean", "iter_std")


@dataclass
class BerReport:
    points: list[BerPoint]
    seed: int
    workers: int
    stop: StopRule
    config: dict[str, object] = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["# diffdec.report = bench"]
        echo = {"seed": self.seed, "workers": self.workers,
                "min_words": self.stop.min_words,
                "min_error_frames": self.stop.min_error_frames,
                "max_words": self.stop.max_words}
        echo.update(self.config)
        for key in sorted(echo):
            lines.append(f"# {key} = {echo[key]}")
        lines.append(",".join(CSV_COLUMNS))
        for p in self.points:
            nlb = "" if p.neg_ln_ber is None else repr(p.neg_ln_ber)
            lines.append(",".join([
                p.decoder, repr(float(p.ebn0_db)), repr(p.sigma), str(p.words),
                str(p.bits_sent), str(p.bit_errors), str(p.frame_errors),
                repr(p.ber), repr(p.fer), nlb, repr(p.ber_se),
                repr(p.iter_mean), repr(p.iter_std)]))
        return "\n".join(lines) + "\n"


def _make_decoder(kind: str, H: ParityCheckMatrix, G: GeneratorMatrix, sigma: float,
                  model=None, schedule: NoiseSchedule | None = None,
                  decode_config: DecodeConfig | None = None, bp_iters: int = 50,
                  graph: TannerGraph | None = None):
    """Returns batch decoder: Y -> (bits, iters)."""
    if kind == "ml":
        return lambda Y: (ml_decode_batch(H, G, Y), np.zeros(len(Y), dtype=np.int64))
    if kind == "bp":
        def run_bp(Y):
            bits, _, iters, _ = bp_decode_batch(H, Y, sigma, bp_iters, graph=graph)
            return bits, iters
        return run_bp
    if kind in ("ddecc", "ddecc-ls"):
        if model is None or schedule is None:
            raise ValueError(f"decoder {kind!r} needs a trained model and its schedule")
        mode = "line_search" if kind == "ddecc-ls" else "regular"
        base = decode_config or DecodeConfig()
        config = DecodeConfig(mode=mode, max_iters=base.max_iters,
                              ls_grid=base.ls_grid, few_iter_cap=base.few_iter_cap)

        def run_dd(Y):
            res = decode_batch(model, H, schedule, Y, config, collect_traces=False)
            return res.bits, res.iters
        return run_dd
    raise ValueError(f"unknown decoder kind {kind!r}; choose from {DECODER_KINDS}")


def run_ber(decoder: str, code: ParityCheckMatrix, ebn0_list, stop: StopRule = StopRule(),
            seed: int = 0, workers: int = 1, model=None,
            schedule: NoiseSchedule | None = None,
            decode_config: DecodeConfig | None = None, bp_iters: int = 50,
            batch_size: int = 1024, config_echo: dict | None = None) -> BerReport:
    """Estimate BER/FER at each EbN0 point; deterministic given (seed, workers)."""
    G = systematic_generator(code)
    graph = TannerGraph(code) if decoder == "bp" else None
    rate = code.k / code.n
    points = []
    for point_idx, db in enumerate(ebn0_list):
        sigma = ebn0_to_sigma(EbN0Point(db, rate))
        run = _make_decoder(decoder, code, G, sigma, model, schedule,
                            decode_config, bp_iters, graph)
        rngs = [make_rng(seed, worker=w, stream=point_idx) for w in range(workers)]

        def one_round(rng):
            msgs = rng.integers(0, 2, size=(batch_size, G.k), dtype=np.uint8)
            X = encode_batch(G, msgs)
            Y = awgn_batch(X, sigma, rng)
            bits, iters = run(Y)
            wrong = bits != X
            frame_err = wrong.any(axis=1)
            return (len(Y), int(wrong.sum()), int(frame_err.sum()),
                    int(iters.sum()), int((iters**2).sum()))

        point = BerPoint(decoder, float(db), sigma, 0, 0, 0, 0, 0, 0)
        pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            while not stop.satisfied(point.words, point.frame_errors):
                if pool is None:
                    results = [one_round(rngs[0])]
                else:
                    results = list(pool.map(one_round, rngs))
                for words, bit_err, frame_err, it_sum, it_sq in results:
                    point.words += words
                    point.bits_sent += words * code.n
                    point.bit_errors += bit_err
                    point.frame_errors += frame_err
                    point.iter_sum += it_sum
                    point.iter_sumsq += it_sq
        finally:
            if pool is not None:
                pool.shutdown()
        points.append(point)
    return BerReport(points, seed, workers, stop, dict(config_echo or {}))


# ---------------------------------------------------------------------------
# Side studies
# ---------------------------------------------------------------------------

def parity_noise_study(code: ParityCheckMatrix, sigmas, samples: int = 1000,
                       seed: int = 0) -> list[tuple[float, float, float]]:
    """Mean/std of the parity-error count of noisy random codewords per sigma."""
    if samples < 1:
        raise ValueError("samples must be positive")
    G = systematic_generator(code)
    rows = []
    for idx, sigma in enumerate(sigmas):
        rng = make_rng(seed, stream=idx)
        msgs = rng.integers(0, 2, size=(samples, G.k), dtype=np.uint8)
        X = encode_batch(G, msgs)
        Y = bpsk(X) if sigma == 0 else awgn_batch(X, float(sigma), rng)
        e = syndrome_weights(code, Y)
        rows.append((float(sigma), float(e.mean()), float(e.std())))
    return rows


def parity_noise_csv(rows, config: dict | None = None) -> str:
    lines = ["# diffdec.report = parity-noise"]
    for key in sorted(config or {}):
        lines.append(f"# {key} = {config[key]}")
    lines.append("sigma,mean_parity_errors,std_parity_errors")
    lines += [f"{repr(s)},{repr(m)},{repr(d)}" for s, m, d in rows]
    return "\n".join(lines) + "\n"


def lambda_histogram(model, code: ParityCheckMatrix, schedule: NoiseSchedule,
                     ebn0_db: float, samples: int = 1000, seed: int = 0,
                     config: DecodeConfig = DecodeConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of chosen line-search step sizes over the grid values."""
    if config.mode != "line_search":
        raise ValueError("step-size histograms require line-search mode")
    rng = make_rng(seed, stream=977)
    G = systematic_generator(code)
    sigma = ebn0_to_sigma(EbN0Point(ebn0_db, code.k / code.n))
    msgs = rng.integers(0, 2, size=(samples, G.k), dtype=np.uint8)
    Y = awgn_batch(encode_batch(G, msgs), sigma, rng)
    result = decode_batch(model, code, schedule, Y, config, collect_traces=False)
    grid = config.grid()
    chosen = np.asarray(result.step_sizes)
    counts = np.array([(chosen == lam).sum() for lam in grid], dtype=np.int64)
    return grid, counts


def lambda_histogram_csv(grid, counts, config: dict | None = None) -> str:
    lines = ["# diffdec.report = lambda-hist"]
    for key in sorted(config or {}):
        lines.append(f"# {key} = {config[key]}")
    lines.append("step_size,count")
    lines += [f"{repr(float(g))},{int(c)}" for g, c in zip(grid, counts)]
    return "\n".join(lines) + "\n"


def forward_process_trace(schedule: NoiseSchedule, trajectories: int,
                          rng: np.random.Generator, steps: int | None = None,
                          code: ParityCheckMatrix | None = None) -> list[tuple]:
    """Stepwise forward-walk coordinates of modulated (3,1) codewords.

    Each trajectory starts at +-(1,1,1) (a random codeword) and follows the
    Markov chain x_t = x_{t-1} + sqrt(beta_t) z.  Rows: (traj, t, x, y, z).
    """
    code = code or repetition_3_1()
    if code.n != 3:
        raise ValueError("the forward-process visualization is 3-D only")
    steps = schedule.T if steps is None else int(steps)
    if not 0 <= steps <= schedule.T:
        raise ValueError(f"steps must lie in 0..{schedule.T}")
    rows = []
    for traj in range(trajectories):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        x = np.full(3, sign)
        rows.append((traj, 0, float(x[0]), float(x[1]), float(x[2])))
        for t in range(1, steps + 1):
            x = x + np.sqrt(schedule.beta(t)) * rng.standard_normal(3)
            rows.append((traj, t, float(x[0]), float(x[1]), float(x[2])))
    return rows


def forward_trace_csv(rows, config: dict | None = None) -> str:
    lines = ["# diffdec.report = forward-trace"]
    for key in sorted(config or {}):
        lines.append(f"# {key} = {config[key]}")
    lines.append("trajectory,t,x0,x1,x2")
    lines += [f"{tr},{t},{repr(a)},{repr(b)},{repr(c)}" for tr, t, a, b, c in rows]
    return "\n".join(lines) + "\n"
