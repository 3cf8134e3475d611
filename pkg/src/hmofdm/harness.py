"""Seeded Monte-Carlo campaigns for CFO-estimation MSE and SER.

Seeding: every trial owns ``SeedSequence([master_seed, trial_index, stream])``
with one stream each for the channel draw, the oscillator-offset draw, the
data symbols and the noise. None of them depend on the SNR, the array size or
the receiver mode, so sweeps over those axes reuse the same channel, data and
noise shape (common random numbers), and results do not depend on how trials
are distributed over worker processes.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from hmofdm import beamformer as bf
from hmofdm.channel import RxFrame, apply_channel, draw_channel
from hmofdm.config import ChannelProfile, ConfigError, OfdmConfig
from hmofdm.equalizer import (
    BRANCH_SELECTION,
    CHANNEL_ESTIMATORS,
    compensate_branch,
    estimate_branch_channel,
    mrc_detect,
    select_branches,
)
from hmofdm.estimator import CfoEstimate, EstimationError, GridSpec, half_block_correlation, joint_estimate
from hmofdm.tx import random_frame

log = logging.getLogger(__name__)

MODES = ("proposed", "genie-cfo", "single-cfo-baseline", "no-compensation", "ideal")
OUT_DIR_ENV = "HMOFDM_OUT_DIR"

STREAM_CHANNEL, STREAM_OFO, STREAM_DATA, STREAM_NOISE = range(4)

CSV_COLUMNS = ("snr_db", "n_r", "mse_fd_norm", "mse_ofo_norm", "ser", "trials", "failures")
TRIAL_COLUMNS = (
    "trial", "snr_db", "n_r", "mode", "fd_norm", "ofo_norm", "fd_hat_norm", "ofo_hat_norm",
    "objective", "sq_err_fd", "sq_err_ofo", "symbol_errors", "n_symbols", "failed",
)


@dataclass(frozen=True)
class CampaignConfig:
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    profile: ChannelProfile = field(default_factory=ChannelProfile)
    snr_db: tuple[float, ...] = (0.0, 10.0, 20.0, 30.0)
    n_rx: tuple[int, ...] = (128,)
    trials: int = 500
    seed: int = 0
    modes: tuple[str, ...] = ("proposed",)
    fd_norm: float = 0.1  # f_d * T_b
    ofo_norm_max: float = 0.4  # eps * T_b ~ U[-max, max]
    ofo_norm: float | None = None  # fixes eps * T_b when set
    search: GridSpec = field(default_factory=GridSpec)
    channel_estimator: str = "ls_interp"
    branch_selection: str = "pruned"
    prune_tau: float = 0.5
    training_seed: int = 0
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = [m for m in self.modes if m not in MODES]
        if unknown or not self.modes:
            raise ConfigError(f"unknown receiver modes {unknown}; choose from {MODES}")
        if not self.snr_db or not self.n_rx:
            raise ConfigError("snr and N_r lists must be non-empty")
        if self.channel_estimator not in CHANNEL_ESTIMATORS:
            raise ConfigError(f"channel_estimator must be one of {CHANNEL_ESTIMATORS}")
        if self.branch_selection not in BRANCH_SELECTION:
            raise ConfigError(f"branch_selection must be one of {BRANCH_SELECTION}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.profile.validate_for(self.ofdm)

    def output_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_DIR_ENV) or "results")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    snr_db: float
    n_r: int
    mode: str
    fd_norm: float
    ofo_norm: float
    fd_hat_norm: float = math.nan
    ofo_hat_norm: float = math.nan
    objective: float = math.nan
    symbol_errors: int = 0
    n_symbols: int = 0
    failed: bool = False

    @property
    def sq_err_fd(self) -> float:
        return (self.fd_hat_norm - self.fd_norm) ** 2

    @property
    def sq_err_ofo(self) -> float:
        return (self.ofo_hat_norm - self.ofo_norm) ** 2


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    n_r: int
    mode: str
    mse_fd_norm: float
    mse_ofo_norm: float
    ser: float
    trials: int
    failures: int
    wall_time: float = 0.0


@dataclass
class CampaignResult:
    rows: list[ResultRow]
    records: list[TrialRecord]

    def row(self, snr_db: float, n_r: int, mode: str = "proposed") -> ResultRow:
        for r in self.rows:
            if r.snr_db == snr_db and r.n_r == n_r and r.mode == mode:
                return r
        raise KeyError((snr_db, n_r, mode))

    def modes(self) -> list[str]:
        return list(dict.fromkeys(r.mode for r in self.rows))

    def to_csv(self, mode: str | None = None) -> str:
        """Aggregate rows of one mode as CSV text (LF line endings)."""
        mode = mode or self.modes()[0]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            if r.mode == mode:
                w.writerow([_fmt(r.snr_db), r.n_r, _fmt(r.mse_fd_norm), _fmt(r.mse_ofo_norm),
                            _fmt(r.ser), r.trials, r.failures])
        return buf.getvalue()

    def trials_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for t in self.records:
            w.writerow([t.trial, _fmt(t.snr_db), t.n_r, t.mode, _fmt(t.fd_norm), _fmt(t.ofo_norm),
                        _fmt(t.fd_hat_norm), _fmt(t.ofo_hat_norm), _fmt(t.objective),
                        _fmt(t.sq_err_fd), _fmt(t.sq_err_ofo), t.symbol_errors, t.n_symbols,
                        int(t.failed)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


def trial_rng(master_seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial, stream]))


def trial_seed(master_seed: int, trial: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, trial, stream])


def single_cfo_baseline(rx: RxFrame, config: OfdmConfig | None = None) -> CfoEstimate:
    """Single-CFO estimate ignoring Doppler: half-block correlation per antenna, summed.

    Returns the oscillator offset with the Doppler estimate fixed at zero.
    """
    config = config or rx.config
    b = half_block_correlation(rx.block(0))
    z = complex(np.sum(b))
    if z == 0:
        raise EstimationError("no training energy on any antenna")
    ofo_norm = math.atan2(z.imag, z.real) / np.pi
    return CfoEstimate(0.0, ofo_norm / config.block_duration, abs(z), config.block_duration)


@dataclass(frozen=True)
class Truth:
    fd: float
    ofo: float
    frame: object
    channel: object


def draw_truth(cc: CampaignConfig, cfg: OfdmConfig, trial: int) -> Truth:
    t_b = cfg.block_duration
    if cc.ofo_norm is not None:
        ofo_norm = cc.ofo_norm
    else:
        ofo_norm = trial_rng(cc.seed, trial, STREAM_OFO).uniform(-cc.ofo_norm_max, cc.ofo_norm_max)
    fd = cc.fd_norm / t_b
    ofo = ofo_norm / t_b
    chan = draw_channel(cc.profile, fd, ofo, trial_seed(cc.seed, trial, STREAM_CHANNEL), cfg)
    frame = random_frame(cfg, trial_rng(cc.seed, trial, STREAM_DATA), cc.training_seed)
    return Truth(fd, ofo, frame, chan)


def run_trial(
    cc: CampaignConfig,
    trial: int,
    snr_db: float | None = None,
    n_r: int | None = None,
    mode: str | None = None,
    network: bf.BeamNetwork | None = None,
) -> TrialRecord:
    """One frame through transmitter, channel and the selected receiver."""
    snr_db = cc.snr_db[0] if snr_db is None else snr_db
    n_r = cc.n_rx[0] if n_r is None else n_r
    mode = mode or cc.modes[0]
    cfg = cc.ofdm.with_(n_rx_antennas=n_r)
    t_b = cfg.block_duration
    truth = draw_truth(cc, cfg, trial)
    chan = truth.channel.with_offsets(0.0, 0.0) if mode == "ideal" else truth.channel
    rx = apply_channel(truth.frame, chan, snr_db, trial_seed(cc.seed, trial, STREAM_NOISE))
    base = dict(trial=trial, snr_db=float(snr_db), n_r=n_r, mode=mode,
                fd_norm=truth.fd * t_b, ofo_norm=truth.ofo * t_b)
    frame = truth.frame
    try:
        estimate = None
        if mode in ("proposed", "genie-cfo"):
            if network is None or network.config != cfg:
                network = bf.build_network(cfg)
            branches = bf.beamform_frame(rx, network).samples
            if mode == "proposed":
                estimate = joint_estimate(branches[:, 0], network.angles_deg, cfg, cc.search)
                cfos = estimate.branch_cfos(network.cosines)
            else:
                cfos = truth.fd * network.cosines + truth.ofo
            branches = compensate_branch(branches, cfos, cfg)
            active = select_branches(branches[:, 0], cc.branch_selection, cc.prune_tau)
        else:
            branches = rx.blocks()
            if mode == "single-cfo-baseline":
                estimate = single_cfo_baseline(rx, cfg)
                branches = compensate_branch(branches, estimate.ofo_hat, cfg)
            active = None
        est_h = estimate_branch_channel(branches[:, 0], frame.training_symbols, cfg, cc.channel_estimator)
        det = mrc_detect(branches[:, 1:], est_h, cfg, active, frame.data_indices)
    except (EstimationError, RuntimeError) as exc:
        log.warning("trial %d (%s, %s dB, N_r=%d) failed: %s", trial, mode, snr_db, n_r, exc)
        return TrialRecord(**base, failed=True)
    extra = {}
    if estimate is not None:
        extra = dict(fd_hat_norm=estimate.fd_hat_norm, ofo_hat_norm=estimate.ofo_hat_norm,
                     objective=estimate.objective_value)
    elif mode == "genie-cfo":
        extra = dict(fd_hat_norm=base["fd_norm"], ofo_hat_norm=base["ofo_norm"])
    return TrialRecord(**base, **extra, symbol_errors=det.total_errors, n_symbols=det.n_symbols)


def _run_chunk(args) -> list[TrialRecord]:
    cc, trials, snr_db, n_r, mode = args
    cfg = cc.ofdm.with_(n_rx_antennas=n_r)
    network = bf.build_network(cfg) if mode in ("proposed", "genie-cfo") else None
    return [run_trial(cc, t, snr_db, n_r, mode, network) for t in trials]


def _run_point(cc: CampaignConfig, snr_db: float, n_r: int, mode: str, pool) -> list[TrialRecord]:
    trials = list(range(cc.trials))
    if pool is None:
        return _run_chunk((cc, trials, snr_db, n_r, mode))
    chunks = [trials[i :: cc.workers] for i in range(cc.workers)]
    out = [rec for part in pool.map(_run_chunk, [(cc, c, snr_db, n_r, mode) for c in chunks]) for rec in part]
    return sorted(out, key=lambda r: r.trial)


def aggregate(records: list[TrialRecord], wall_time: float = 0.0) -> ResultRow:
    """MSEs over non-failed trials (summed in trial order) and pooled SER."""
    ok = [r for r in sorted(records, key=lambda r: r.trial) if not r.failed]
    first = records[0]
    mse_fd = math.fsum(r.sq_err_fd for r in ok) / len(ok) if ok else math.nan
    mse_ofo = math.fsum(r.sq_err_ofo for r in ok) / len(ok) if ok else math.nan
    n_sym = sum(r.n_symbols for r in ok)
    ser = sum(r.symbol_errors for r in ok) / n_sym if n_sym else math.nan
    return ResultRow(first.snr_db, first.n_r, first.mode, mse_fd, mse_ofo, ser,
                     len(records), len(records) - len(ok), wall_time)


def run_campaign(cc: CampaignConfig) -> CampaignResult:
    """All (mode, snr, N_r) points, each over ``cc.trials`` trials."""
    rows: list[ResultRow] = []
    records: list[TrialRecord] = []
    pool = ProcessPoolExecutor(cc.workers) if cc.workers > 1 else None
    try:
        for mode in cc.modes:
            for snr in cc.snr_db:
                for n_r in cc.n_rx:
                    t0 = time.perf_counter()
                    recs = _run_point(cc, float(snr), int(n_r), mode, pool)
                    rows.append(aggregate(recs, time.perf_counter() - t0))
                    records.extend(recs)
                    log.info("%s snr=%g N_r=%d done in %.1fs", mode, snr, n_r, rows[-1].wall_time)
    finally:
        if pool is not None:
            pool.shutdown()
    return CampaignResult(rows, records)


def run_mse_campaign(cc: CampaignConfig) -> CampaignResult:
    return run_campaign(cc)


def run_ser_campaign(cc: CampaignConfig) -> CampaignResult:
    return run_campaign(cc)


# ---------------------------------------------------------------------------
# flat key = value config files

_OFDM_KEYS = {f.name for f in fields(OfdmConfig)}
_PROFILE_KEYS = {f.name for f in fields(ChannelProfile)}
_SEARCH_KEYS = {"search_f_max_norm": "f_max_norm", "search_step_norm": "coarse_step_norm",
                "search_tol_norm": "tol_norm"}
_LIST_KEYS = {"delays": int, "tap_powers": float, "snr_db": float, "n_rx": int, "modes": str}
_INT_KEYS = {"n_subcarriers", "cp_length", "blocks_per_frame", "n_rx_antennas", "paths_per_tap",
             "trials", "seed", "training_seed", "workers"}
_STR_KEYS = {"constellation", "aoa_distribution", "channel_estimator", "branch_selection", "out_dir"}
_CAMPAIGN_KEYS = {f.name for f in fields(CampaignConfig)} - {"ofdm", "profile", "search"}
_EXTRA_KEYS = {"speed_kmh", "block_duration", "mode"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma-separated."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "mode":
            key = "modes"
        known = _OFDM_KEYS | _PROFILE_KEYS | _CAMPAIGN_KEYS | set(_SEARCH_KEYS) | _EXTRA_KEYS
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _convert(key, value, lineno)
    return out


def _convert(key: str, value: str, lineno: int):
    try:
        if key in _LIST_KEYS:
            items = [v.strip() for v in value.split(",") if v.strip()]
            return tuple(_LIST_KEYS[key](v) for v in items)
        if key in _INT_KEYS:
            return int(value)
        if key in _STR_KEYS:
            return value
        if key == "ofo_norm" and value.lower() in ("", "none", "random"):
            return None
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def build_campaign_config(values: dict, base: CampaignConfig | None = None) -> CampaignConfig:
    """Merge parsed key/values over ``base`` (defaults when omitted)."""
    base = base or CampaignConfig()
    values = dict(values)
    ofdm_kw = {k: values.pop(k) for k in list(values) if k in _OFDM_KEYS}
    if "block_duration" in values:
        n_c = ofdm_kw.get("n_subcarriers", base.ofdm.n_subcarriers)
        ofdm_kw["sample_interval"] = values.pop("block_duration") / n_c
    profile_kw = {k: values.pop(k) for k in list(values) if k in _PROFILE_KEYS}
    search_kw = {_SEARCH_KEYS[k]: values.pop(k) for k in list(values) if k in _SEARCH_KEYS}
    ofdm = replace(base.ofdm, **ofdm_kw)
    if "n_rx_antennas" in ofdm_kw and "n_rx" not in values:
        values["n_rx"] = (ofdm.n_rx_antennas,)
    if "tap_powers" in profile_kw and "delays" not in profile_kw:
        profile_kw["delays"] = base.profile.delays
    if "delays" in profile_kw and "tap_powers" not in profile_kw:
        profile_kw["tap_powers"] = (1.0,) * len(profile_kw["delays"])
    profile = replace(base.profile, **profile_kw)
    if "speed_kmh" in values:
        fd = values.pop("speed_kmh") / 3.6 / ofdm.wavelength
        values["fd_norm"] = fd * ofdm.block_duration
    return replace(base, ofdm=ofdm, profile=profile, search=replace(base.search, **search_kw), **values)


def write_outputs(result: CampaignResult, out_dir: Path, stem: str, dump_trials: bool = False) -> list[Path]:
    """Write one CSV per mode; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    modes = result.modes()
    for mode in modes:
        name = f"{stem}.csv" if len(modes) == 1 else f"{stem}_{mode}.csv"
        path = out_dir / name
        path.write_text(result.to_csv(mode), encoding="utf-8", newline="\n")
        written.append(path)
    if dump_trials:
        path = out_dir / f"{stem}_trials.csv"
        path.write_text(result.trials_csv(), encoding="utf-8", newline="\n")
        written.append(path)
    return written


def describe(cc: CampaignConfig) -> dict:
    d = asdict(cc)
    d["ofdm"]["block_duration"] = cc.ofdm.block_duration
    d["ofdm"]["branch_count"] = cc.ofdm.branch_count
    return d
