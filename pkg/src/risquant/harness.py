"""Monte Carlo experiments: problem generation, SNR calibration, sweeps and CSV output.

Random streams
--------------
Every random draw comes from ``numpy.random.SeedSequence(seed, spawn_key=(trial,
stream, user))`` with ``stream`` one of :data:`STREAM_CHANNEL`,
:data:`STREAM_TRAINING`, :data:`STREAM_NOISE`.  Streams depend only on these
counters, so trials can run in any order or on any worker and the results are
unchanged.  All (snr, bits) cells of one trial see the same channel, training
and unit-variance noise draw; only the noise scale and the quantizer change.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .angular_domain import AngularDictionaries, lambda_from_cascaded, reconstruct_cascaded
from .baselines import ls_estimate
from .channel_model import CascadedChannel, ChannelPair, cascade, synthesize_channels
from .config import SystemConfig, bits_label
from .denoisers import GmComponent, GmPrior
from .linear_operator import StructuredOperator, TrainingMatrix, build_training_matrix
from .quantizer import design_quantizer, quantize
from .vamp import SolverAbort, VampResult, nmse, vamp_estimate

STREAM_CHANNEL = 0
STREAM_TRAINING = 1
STREAM_NOISE = 2

CSV_COLUMNS = ("snr_db", "bits", "trial", "user", "algo", "nmse_db", "iters", "seconds", "converged")


def stream(seed: int, trial: int, kind: int, user: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, kind, user)))


@dataclass
class Problem:
    """One user's noiseless estimation problem."""

    pair: ChannelPair
    g: CascadedChannel
    x_true: np.ndarray
    z_clean: np.ndarray
    unit_noise: np.ndarray
    op: StructuredOperator
    dicts: AngularDictionaries


def make_training(cfg: SystemConfig, trial: int) -> TrainingMatrix:
    return build_training_matrix(cfg.m, cfg.p, stream(cfg.seed, trial, STREAM_TRAINING), cfg.training)


def make_problems(cfg: SystemConfig, trial: int) -> list[Problem]:
    """All users of one trial; the BS-RIS channel and the RIS training are shared."""
    training = make_training(cfg, trial)
    op = StructuredOperator.from_config(cfg, training)
    dicts = AngularDictionaries.from_config(cfg)
    problems = []
    shared_br = None
    for user in range(cfg.users):
        pair = synthesize_channels(cfg, stream(cfg.seed, trial, STREAM_CHANNEL, user), cfg.on_grid)
        if shared_br is None:
            shared_br = pair
        else:
            pair = ChannelPair(shared_br.h_br, pair.h_ru, shared_br.paths_br, pair.paths_ru)
        g = cascade(pair)
        x_true = lambda_from_cascaded(g, dicts).lam.T.ravel()
        z = op.forward(x_true)
        rng = stream(cfg.seed, trial, STREAM_NOISE, user)
        w = (rng.standard_normal(op.out_size) + 1j * rng.standard_normal(op.out_size)) / math.sqrt(2)
        problems.append(Problem(pair, g, x_true, z, w, op, dicts))
    return problems


def signal_energy(g: CascadedChannel, training: TrainingMatrix) -> float:
    """``||Z||_F^2`` for the noiseless aggregate ``Z = (H_ru^T <> H_br) E`` (S = I)."""
    return float(np.linalg.norm(g.g @ training.e) ** 2)


def calibrate_noise(snr_db: float, signal_power: float, n_out: int) -> float:
    """Per-sample noise variance giving ``E||W||^2 = ||Z||^2 / 10^(snr/10)``."""
    if signal_power <= 0:
        raise ValueError("noiseless signal has zero energy")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return signal_power / (n_out * 10 ** (snr_db / 10))


def default_prior(cfg: SystemConfig) -> GmPrior:
    """Spike plus Gaussian(s) matching the first two moments of the angular coefficients.

    The expected support is ``L*J*Q`` out of ``N*M*Q`` entries; with unit-modulus
    steering vectors and CN(0,1) gains, ``E|x|^2 = L*J / (N*M*Q)``.
    """
    n_in = cfg.n * cfg.m * cfg.q
    second = cfg.l * cfg.j / n_in
    if cfg.normalize_paths:
        second /= cfg.l * cfg.j
    sparsity = cfg.prior.sparsity if cfg.prior.sparsity is not None else min(cfg.l * cfg.j * cfg.q / n_in, 1.0)
    var = cfg.prior.var if cfg.prior.var is not None else second / sparsity
    k = max(int(cfg.prior.components), 1)
    if k == 1:
        return GmPrior.bernoulli_gaussian(sparsity, var)
    # Ladder of variances var * 10^(-i), weights chosen so the slab second moment is preserved.
    ladder = np.array([10.0 ** (-i) for i in range(k)])
    w = ladder ** -0.5
    w = w / w.sum()
    scale = var / float(np.sum(w * ladder))
    comps = tuple(GmComponent(float(sparsity * wi), 0.0, float(scale * vi)) for wi, vi in zip(w, ladder))
    return GmPrior(1.0 - sparsity, comps)


@dataclass
class CellResult:
    snr_db: float
    bits: object
    trial: int
    user: int
    algo: str
    nmse_db: float
    iters: int
    seconds: float
    converged: bool

    def row(self, timing: bool = True) -> list[str]:
        return [f"{self.snr_db:g}", bits_label(self.bits), str(self.trial), str(self.user),
                self.algo, f"{self.nmse_db:.6f}", str(self.iters),
                f"{self.seconds:.6f}" if timing else "", str(int(self.converged))]


@dataclass
class Measurement:
    y: object
    spec: object
    noise_var: float


def measure(problem: Problem, snr_db: float, bits) -> Measurement:
    """Noisy, quantized measurements of one problem at a given SNR and resolution."""
    power = float(np.vdot(problem.z_clean, problem.z_clean).real)
    noise_var = calibrate_noise(snr_db, power, problem.op.out_size)
    received = problem.z_clean + math.sqrt(noise_var) * problem.unit_noise
    spec = design_quantizer(bits, power / problem.op.out_size + noise_var)
    return Measurement(quantize(spec, received), spec, noise_var)


def solve_vamp(problem: Problem, meas: Measurement, cfg: SystemConfig,
               with_truth: bool = False) -> VampResult:
    return vamp_estimate(meas.y, problem.op, meas.spec, default_prior(cfg), meas.noise_var,
                         cfg.solver, problem.x_true if with_truth else None)


def run_cell(problem: Problem, snr_db: float, bits, cfg: SystemConfig,
             trial: int, user: int) -> list[CellResult]:
    meas = measure(problem, snr_db, bits)
    out = []
    t0 = time.perf_counter()
    try:
        res = solve_vamp(problem, meas, cfg)
        g_hat = reconstruct_cascaded(res.lambda_hat, problem.dicts)
        out.append(CellResult(snr_db, bits, trial, user, "vamp", nmse(problem.g, g_hat),
                              res.iterations, time.perf_counter() - t0, res.converged and not res.stalled))
    except SolverAbort:
        out.append(CellResult(snr_db, bits, trial, user, "vamp", float("nan"), 0,
                              time.perf_counter() - t0, False))
    if cfg.run_ls:
        t0 = time.perf_counter()
        ls = ls_estimate(meas.y, problem.op, ridge=meas.noise_var)
        g_hat = reconstruct_cascaded(ls.lambda_hat, problem.dicts)
        out.append(CellResult(snr_db, bits, trial, user, "ls", nmse(problem.g, g_hat), 1,
                              time.perf_counter() - t0, True))
    return out


def run_trial(cfg: SystemConfig, trial: int) -> list[CellResult]:
    out = []
    for user, problem in enumerate(make_problems(cfg, trial)):
        for snr in cfg.snr_db:
            for bits in cfg.bits:
                out.extend(run_cell(problem, snr, bits, cfg, trial, user))
    return out


def _sort_key(r: CellResult, cfg: SystemConfig):
    return (cfg.snr_db.index(r.snr_db), cfg.bits.index(r.bits), r.trial, r.user, r.algo != "vamp")


def iter_sweep(cfg: SystemConfig, workers: int = 1) -> Iterator[CellResult]:
    """Records of every (snr, bits, trial, user, algo) cell in deterministic order."""
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        chunks = [run_trial(cfg, t) for t in range(cfg.trials)]
    records = [r for chunk in chunks for r in chunk]
    yield from sorted(records, key=lambda r: _sort_key(r, cfg))


def run_sweep(cfg: SystemConfig, out: str | Path | None = None, workers: int = 1,
              timing: bool = True) -> list[CellResult]:
    records = list(iter_sweep(cfg, workers))
    if out is not None:
        Path(out).write_text(records_to_csv(records, timing))
    return records


def multiuser_run(cfg: SystemConfig, users: int, workers: int = 1) -> list[CellResult]:
    """``users`` cascaded channels per trial under one shared RIS training matrix."""
    if users < 1:
        raise ValueError("users must be >= 1")
    return run_sweep(cfg.with_(users=users), workers=workers)


def records_to_csv(records: Iterable[CellResult], timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row(timing))
    return buf.getvalue()


def single_trace(cfg: SystemConfig, trial: int = 0, user: int = 0) -> VampResult:
    """One VAMP solve at the first (snr, bits) of the config, with NMSE in the trace."""
    problem = make_problems(cfg, trial)[user]
    meas = measure(problem, cfg.snr_db[0], cfg.bits[0])
    return solve_vamp(problem, meas, cfg, with_truth=True)


def median_nmse(records: Iterable[CellResult], algo: str = "vamp") -> dict:
    """Median over trials of the user-averaged NMSE (dB), keyed by (snr_db, bits)."""
    per_trial: dict = {}
    for r in records:
        if r.algo != algo:
            continue
        per_trial.setdefault((r.snr_db, bits_label(r.bits), r.trial), []).append(r.nmse_db)
    cells: dict = {}
    for (snr, b, _), vals in per_trial.items():
        lin = float(np.mean(10 ** (np.asarray(vals) / 10)))
        cells.setdefault((snr, b), []).append(10 * math.log10(lin))
    return {k: float(np.median(v)) for k, v in cells.items()}
