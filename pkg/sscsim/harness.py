"""
Monte Carlo block-error-rate experiments.

Every random draw of a trial comes from a stream derived from
(seed, purpose, trial_index), and trials are tallied in fixed-size batches
consumed in index order, so results do not depend on the worker count.
"""
import configparser
import csv
import json
import math
import multiprocessing
import os
from collections import deque
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .channel import (ChannelRealization, draw_channel, effective_matrix, snr_to_noise_var,
                      transmit_frequency_domain, transmit_time_domain)
from .codebook import build_codebook, spread
from .codec import (CodeParams, IllegalSupportError, compute_bit_budget, decode_message,
                    encode_message, recovery_length_guideline)
from .decoder import DecodeFailure, MmpConfig, energy_detect_decode, mmp_decode
from .getconfig import get_cyclic_prefix, get_seed, logger, settings
from .numerics import MAX_SOLVE_DIM, RNG_NAME, MacCounter, Purpose, RandomStream

SCHEMES = ("ssc-sparse", "ssc-dense", "svc")
CHANNELS = ("rayleigh", "identity")
TRANSMIT_PATHS = ("frequency", "time")
SVC_RECEIVERS = ("mmp", "energy")
LLR_NOISE_FLOOR = 1e-10

CSV_COLUMNS = ("scheme", "N", "K", "M", "M_mod", "R", "D", "L", "beam", "L_ch", "L_CP",
               "snr_db", "trials", "block_errors", "bler", "ci_lo", "ci_hi",
               "encode_macs", "decode_macs", "seed")

SNR_DEFINITION = ("SNR = average received symbol energy / sigma^2 with unit-power channel "
                  "and unit-energy codewords, so sigma^2 = 10^(-SNR/10)")


class ConfigurationError(ValueError):
    """An experiment configuration that cannot be run."""


@dataclass(frozen=True)
class ExperimentConfig:
    params: CodeParams
    mmp: MmpConfig
    seed: int
    scheme: str = "ssc-sparse"
    snr_grid: tuple = (10.0,)
    r_grid: tuple = ()
    m_grid: tuple = ()
    max_trials: int = 100000
    min_errors: int = 200
    batch_size: int = 250
    channel: str = "rayleigh"
    transmit_path: str = "frequency"
    svc_receiver: str = "mmp"
    noiseless: bool = False
    out: str = ""

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.channel not in CHANNELS:
            raise ConfigurationError(f"unknown channel {self.channel!r}")
        if self.transmit_path not in TRANSMIT_PATHS:
            raise ConfigurationError(f"unknown transmit path {self.transmit_path!r}")
        if self.svc_receiver not in SVC_RECEIVERS:
            raise ConfigurationError(f"unknown svc receiver {self.svc_receiver!r}")
        if not self.snr_grid:
            raise ConfigurationError("empty SNR grid")
        if self.max_trials < 1 or self.batch_size < 1 or self.min_errors < 0:
            raise ConfigurationError("trials and batch size must be positive, min_errors non-negative")
        if self.params.K > MAX_SOLVE_DIM:
            raise ConfigurationError(f"K={self.params.K} exceeds the {MAX_SOLVE_DIM}-column least-squares limit")
        if self.mmp.K != self.params.K:
            raise ConfigurationError(f"MMP sparsity {self.mmp.K} differs from K={self.params.K}")
        if self.scheme == "ssc-dense" and any(r != 1.0 for r in self.r_values):
            raise ConfigurationError("ssc-dense runs the full codebook; R must be 1")
        for R in self.r_values:
            if not 0 < R <= 1:
                raise ConfigurationError(f"sparsity factor {R} outside (0, 1]")
        for M in self.m_values:
            if M < self.params.L_ch:
                raise ConfigurationError(f"block length {M} shorter than the channel")

    @property
    def r_values(self):
        if self.scheme == "ssc-dense":
            return self.r_grid or (1.0,)
        return self.r_grid or (self.params.R,)

    @property
    def m_values(self):
        return self.m_grid or (self.params.M,)

    @property
    def support_only(self):
        return self.scheme == "svc"

    def grid(self):
        """(M, R, snr_db) in output order."""
        for M in self.m_values:
            for R in self.r_values:
                for snr_db in self.snr_grid:
                    yield M, R, snr_db


@dataclass(frozen=True, eq=False)
class PointSetup:
    params: CodeParams
    codebook: object = field(repr=False)
    snr_db: float
    noise_var: float


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    block_error: bool
    bit_errors: int
    support_error: bool
    illegal_support: bool
    decode_failure: bool
    encode_macs: int
    decode_macs: int


@dataclass
class Tally:
    trials: int = 0
    block_errors: int = 0
    encode_macs: int = 0
    decode_macs: int = 0

    def add(self, other):
        self.trials += other.trials
        self.block_errors += other.block_errors
        self.encode_macs += other.encode_macs
        self.decode_macs += other.decode_macs


@dataclass(frozen=True)
class BlerPoint:
    scheme: str
    N: int
    K: int
    M: int
    M_mod: int
    R: float
    D: int
    L: int
    beam: int
    L_ch: int
    L_CP: int
    snr_db: float
    trials: int
    block_errors: int
    bler: float
    ci_lo: float
    ci_hi: float
    encode_macs: float
    decode_macs: float
    seed: int
    stopped_early: bool = field(default=False, compare=False)


def wilson_interval(errors, trials, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    z = stats.norm.ppf(1 - (1 - confidence) / 2)
    p_hat = errors / trials
    denominator = 1 + z ** 2 / trials
    center = (p_hat + z ** 2 / (2 * trials)) / denominator
    spread_ = z * math.sqrt((p_hat * (1 - p_hat) + z ** 2 / (4 * trials)) / trials) / denominator
    lower = max(0.0, center - spread_)
    upper = min(1.0, center + spread_)
    return float(min(lower, p_hat)), float(max(upper, p_hat))


def prepare_point(config, M=None, R=None, snr_db=None, codebook=None):
    M = config.m_values[0] if M is None else M
    R = config.r_values[0] if R is None else R
    snr_db = config.snr_grid[0] if snr_db is None else snr_db
    try:
        params = replace(config.params, M=M, R=R)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e
    if codebook is None:
        if M < recovery_length_guideline(params.N, params.K):
            logger.warning("M=%d is below the recovery guideline K*log2(N/K)=%.1f",
                           M, recovery_length_guideline(params.N, params.K))
        codebook = build_codebook(params, config.seed)
    noise_var = 0.0 if config.noiseless else snr_to_noise_var(snr_db, params)
    return PointSetup(params, codebook, snr_db, noise_var)


def run_trial(config, trial_index, setup=None):
    """One packet through encode, spread, channel, decode and demap."""
    setup = prepare_point(config) if setup is None else setup
    params = setup.params
    payload_len = params.b_I if config.support_only else params.b
    payload = RandomStream.derive(config.seed, Purpose.PAYLOAD, trial_index).bits(payload_len)

    encode_counter, decode_counter = MacCounter(), MacCounter()
    msg = encode_message(payload, params, config.support_only)
    x = spread(setup.codebook, msg, encode_counter)

    if config.channel == "identity":
        ch = ChannelRealization.identity(params.M, params.L_CP)
    else:
        ch = draw_channel(params.L_ch, params.M,
                          RandomStream.derive(config.seed, Purpose.CHANNEL, trial_index), params.L_CP)
    transmit = transmit_time_domain if config.transmit_path == "time" else transmit_frequency_domain
    block = transmit(x, ch, setup.noise_var,
                     RandomStream.derive(config.seed, Purpose.NOISE, trial_index))
    phi = effective_matrix(ch, setup.codebook)

    support_error = illegal = failure = False
    bit_errors = payload_len
    try:
        if config.support_only and config.svc_receiver == "energy":
            result = energy_detect_decode(block.y, phi, params.K, decode_counter)
        else:
            result = mmp_decode(block.y, phi, config.mmp, decode_counter)
        support_error = result.support != msg.support
        bits = decode_message(result.support, result.values, max(setup.noise_var, LLR_NOISE_FLOOR),
                              params, config.support_only)
        bit_errors = int(np.count_nonzero(bits != payload))
    except DecodeFailure:
        failure = support_error = True
    except IllegalSupportError:
        illegal = support_error = True

    return TrialRecord(trial_index, bit_errors > 0, bit_errors, support_error, illegal, failure,
                       encode_counter.total, decode_counter.total)


def run_batch(config, setup, start, stop):
    tally = Tally()
    for trial_index in range(start, stop):
        record = run_trial(config, trial_index, setup)
        tally.add(Tally(1, int(record.block_error), record.encode_macs, record.decode_macs))
    return tally


_worker_state = {}


def _init_worker(config, setups):
    _worker_state["config"] = config
    _worker_state["setups"] = setups


def _run_task(task):
    key, start, stop = task
    return run_batch(_worker_state["config"], _worker_state["setups"][key], start, stop)


class BatchQueue:
    """Batch tallies in task order, keeping at most `window` batches in flight."""

    def __init__(self, tasks, pool, window):
        self.tasks = iter(tasks)
        self.pool = pool
        self.window = window
        self.pending = deque()

    def __iter__(self):
        if self.pool is None:
            for task in self.tasks:
                yield _run_task(task)
            return
        while True:
            while len(self.pending) < self.window:
                task = next(self.tasks, None)
                if task is None:
                    break
                self.pending.append(self.pool.apply_async(_run_task, (task,)))
            if not self.pending:
                return
            yield self.pending.popleft().get()

    def drain(self):
        """Block until batches queued past an early stop finish; their tallies are dropped."""
        if self.pending:
            logger.debug("Discarding %d queued batches", len(self.pending))
        while self.pending:
            self.pending.popleft().wait()


def _make_point(config, setup, tally, stopped_early):
    params = setup.params
    lo, hi = wilson_interval(tally.block_errors, tally.trials)
    return BlerPoint(
        scheme=config.scheme, N=params.N, K=params.K, M=params.M, M_mod=params.M_mod,
        R=params.effective_R, D=params.D, L=config.mmp.L, beam=config.mmp.beam,
        L_ch=params.L_ch, L_CP=params.L_CP, snr_db=setup.snr_db, trials=tally.trials,
        block_errors=tally.block_errors, bler=tally.block_errors / tally.trials,
        ci_lo=lo, ci_hi=hi, encode_macs=tally.encode_macs / tally.trials,
        decode_macs=tally.decode_macs / tally.trials, seed=config.seed,
        stopped_early=stopped_early,
    )


def run_sweep(config, workers=1):
    """BLER at every (M, R, SNR) grid point, early-stopping at min_errors."""
    setups, codebooks = {}, {}
    for key in config.grid():
        M, R, snr_db = key
        setups[key] = prepare_point(config, M, R, snr_db, codebooks.get((M, R)))
        codebooks.setdefault((M, R), setups[key].codebook)

    _init_worker(config, setups)
    pool = None
    if workers > 1:
        pool = multiprocessing.Pool(processes=workers, initializer=_init_worker,
                                    initargs=(config, setups))
    points = []
    try:
        for key, setup in setups.items():
            logger.info("Point M=%d R=%.4f SNR=%.2f dB (%s)", key[0], setup.params.effective_R,
                        key[2], config.scheme)
            tasks = ((key, start, min(start + config.batch_size, config.max_trials))
                     for start in range(0, config.max_trials, config.batch_size))
            tally = Tally()
            stopped_early = False
            batches = BatchQueue(tasks, pool, 2 * workers)
            for batch in batches:
                tally.add(batch)
                logger.debug("%d trials, %d block errors", tally.trials, tally.block_errors)
                if config.min_errors and tally.block_errors >= config.min_errors:
                    stopped_early = tally.trials < config.max_trials
                    break
            batches.drain()
            point = _make_point(config, setup, tally, stopped_early)
            logger.info("BLER %.3e over %d trials (%d errors)", point.bler, point.trials,
                        point.block_errors)
            points.append(point)
    finally:
        if pool is not None:
            pool.terminate()
            pool.join()
    return points


@dataclass(frozen=True)
class ComplexityRow:
    R: float
    D: int
    encode_macs: float
    decode_macs: float
    encode_ratio: float
    decode_ratio: float
    storage_cells: int


@dataclass(frozen=True)
class EncodingCurveRow:
    N: int
    b_I: int
    R: float
    dense_encode_macs: int
    sparse_encode_macs: int
    dense_storage: int
    sparse_storage: int


@dataclass
class ComplexityReport:
    params: CodeParams
    rows: list = field(default_factory=list)
    curve: list = field(default_factory=list)


def _count_encode(params, seed):
    """MACs of spreading one payload, and the codebook storage."""
    codebook = build_codebook(params, seed)
    payload = RandomStream.derive(seed, Purpose.PAYLOAD, 0).bits(params.b)
    counter = MacCounter()
    spread(codebook, encode_message(payload, params), counter)
    return counter.total, codebook.storage_cells


def complexity_report(params, r_grid, mmp=None, seed=None, packets=None, snr_db=None, n_grid=None):
    """
    Instrumented encode/decode MAC counts per R against the dense (R=1) codebook,
    and the encode-MAC/storage curve versus b_I with N swept at fixed K.
    """
    mmp = mmp or MmpConfig(params.K, settings.getint("mmp-paths"), settings.getint("mmp-beam"))
    seed = get_seed() if seed is None else seed
    packets = settings.getint("complexity-packets") if packets is None else packets
    snr_db = settings.getfloat("complexity-snr") if snr_db is None else snr_db
    r_values = [1.0] + [r for r in r_grid if r != 1.0]

    report = ComplexityReport(params)
    measured = {}
    for R in r_values:
        config = ExperimentConfig(replace(params, R=R), mmp, seed, snr_grid=(snr_db,),
                                  max_trials=packets)
        setup = prepare_point(config)
        tally = run_batch(config, setup, 0, packets)
        measured[R] = (setup.params.D, tally.encode_macs / packets, tally.decode_macs / packets,
                       setup.codebook.storage_cells)
    _, enc_ref, dec_ref, _ = measured[1.0]
    for R in r_values:
        D, enc, dec, cells = measured[R]
        report.rows.append(ComplexityRow(D / params.M, D, enc, dec, enc / enc_ref, dec / dec_ref, cells))

    if n_grid is None:
        n_grid = sorted({max(params.K + 1, params.N // 4), max(params.K + 1, params.N // 2),
                         params.N, 2 * params.N, 4 * params.N})
    for N in n_grid:
        dense_params = replace(params, N=N, R=1.0)
        dense_macs, dense_cells = _count_encode(dense_params, seed)
        for R in r_grid or [params.R]:
            sparse_macs, sparse_cells = _count_encode(replace(params, N=N, R=R), seed)
            report.curve.append(EncodingCurveRow(
                N, compute_bit_budget(N, params.K, params.M_mod)[0], replace(params, R=R).effective_R,
                dense_macs, sparse_macs, dense_cells, sparse_cells))
    return report


def sweep_metadata(config):
    return {
        "code_version": __version__,
        "rng": RNG_NAME,
        "snr_definition": SNR_DEFINITION,
        "channel": {
            "model": config.channel,
            "taps": config.params.L_ch,
            "cyclic_prefix": config.params.L_CP,
            "power_delay_profile": "uniform, unit total power",
            "note": "tap count, CP length and delay profile are simulator defaults, "
                    "not measured channel parameters",
        },
        "transmit_path": config.transmit_path,
        "stop_rule": {"min_errors": config.min_errors, "max_trials": config.max_trials,
                      "batch_size": config.batch_size},
        "scheme_label": f"SVC-like baseline ({config.svc_receiver} receiver, unit values)"
                        if config.scheme == "svc" else config.scheme,
        "svc_receiver": config.svc_receiver if config.scheme == "svc" else None,
        "R_reported": "effective R = D/M with D = round(R*M)",
    }


def emit_csv(points, path, metadata=None):
    """One header row and one row per point, grid order; metadata goes to <path>.meta.json."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for point in points:
            row = asdict(point)
            writer.writerow([repr(float(row[c])) if isinstance(row[c], float) else row[c]
                             for c in CSV_COLUMNS])
    if metadata is not None:
        meta_path = path.with_name(path.name + ".meta.json")
        meta_path.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("Wrote %d points to %s", len(points), path)
    return path


def read_csv(path):
    types = {f.name: f.type for f in fields(BlerPoint)}
    with Path(path).open(newline="", encoding="utf-8") as f:
        return [BlerPoint(**{k: types[k](v) for k, v in row.items()})
                for row in csv.DictReader(f)]


def parse_grid(text):
    """'lo:step:hi' (inclusive) or a comma-separated list of numbers."""
    text = str(text).strip()
    if not text:
        return ()
    try:
        if ":" in text:
            lo, step, hi = (float(p) for p in text.split(":"))
            if step <= 0 or hi < lo:
                raise ConfigurationError(f"bad grid {text!r}")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + i * step, 10) for i in range(n))
        return tuple(float(p) for p in text.replace(" ", "").split(",") if p)
    except ValueError as e:
        raise ConfigurationError(f"bad grid {text!r}: {e}") from e


EXPERIMENT_KEYS = ("scheme", "N", "K", "M", "M_mod", "R", "snr", "r_grid", "m_grid", "trials",
                   "min_errors", "max_trials", "seed", "L", "beam", "L_ch", "L_CP", "channel",
                   "transmit_path", "svc_receiver", "batch_size", "noiseless", "out")


def read_experiment_file(path):
    """The flat key-value [experiment] section of an experiment file."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigurationError(f"cannot read experiment file {path}")
    if not parser.has_section("experiment"):
        raise ConfigurationError(f"{path} has no [experiment] section")
    values = dict(parser["experiment"])
    unknown = set(values) - set(EXPERIMENT_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown experiment keys: {', '.join(sorted(unknown))}")
    return values


def build_config(file_values=None, overrides=None):
    """
    Resolve an ExperimentConfig: CLI overrides beat the SSC_SEED environment
    variable, which beats the experiment file, which beats config.ini settings.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    values = {
        "scheme": "ssc-sparse",
        "M_mod": settings.get("modulation"),
        "L": settings.get("mmp-paths"),
        "beam": settings.get("mmp-beam"),
        "L_ch": settings.get("channel-taps"),
        "min_errors": settings.get("min-errors"),
        "max_trials": settings.get("max-trials"),
        "batch_size": settings.get("batch-size"),
        "transmit_path": settings.get("transmit-path"),
        "seed": settings.get("seed"),
        "snr": "10",
    }
    values.update(file_values or {})
    if "SSC_SEED" in os.environ:
        values["seed"] = str(get_seed())
    values.update(overrides)
    if "trials" in values and values["trials"] not in ("", None):
        values["max_trials"] = values["trials"]
        if "min_errors" not in overrides and "min_errors" not in (file_values or {}):
            values["min_errors"] = 0

    try:
        for key in ("N", "K", "M"):
            if key not in values:
                raise ConfigurationError(f"missing required key {key}")
        L_ch = int(values["L_ch"])
        L_CP = values.get("L_CP", "auto")
        L_CP = get_cyclic_prefix(L_ch) if str(L_CP).strip().lower() == "auto" else int(L_CP)
        r_grid = parse_grid(values.get("r_grid", ""))
        params = CodeParams(N=int(values["N"]), K=int(values["K"]), M=int(values["M"]),
                            M_mod=int(values["M_mod"]),
                            R=float(values.get("R", r_grid[0] if r_grid else 1.0)),
                            L_ch=L_ch, L_CP=L_CP)
        mmp = MmpConfig(params.K, int(values["L"]), int(values["beam"]))
        return ExperimentConfig(
            params=params, mmp=mmp, seed=int(values["seed"]), scheme=values["scheme"],
            snr_grid=parse_grid(values["snr"]), r_grid=r_grid,
            m_grid=tuple(int(m) for m in parse_grid(values.get("m_grid", ""))),
            max_trials=int(values["max_trials"]), min_errors=int(values["min_errors"]),
            batch_size=int(values["batch_size"]), channel=values.get("channel", "rayleigh"),
            transmit_path=values["transmit_path"], svc_receiver=values.get("svc_receiver", "mmp"),
            noiseless=str(values.get("noiseless", "off")).lower() in ("1", "on", "true", "yes"),
            out=values.get("out", ""),
        )
    except ConfigurationError:
        raise
    except (KeyError, ValueError) as e:
        raise ConfigurationError(str(e)) from e
