"""Command-line entry point: ``hmofdm {mse,ser,beampattern,simulate}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path


from hmofdm import beamformer as bf
from hmofdm.config import ConfigError, OfdmConfig
from hmofdm.harness import (
    MODES,
    CampaignConfig,
    build_campaign_config,
    describe,
    load_config_file,
    run_campaign,
    run_trial,
    write_outputs,
)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _modes(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _campaign_parser(sub, name: str, help_: str) -> argparse.ArgumentParser:
    p = sub.add_parser(name, help=help_)
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory (default $HMOFDM_OUT_DIR or ./results)")
    p.add_argument("--trials", type=int)
    p.add_argument("--snr", type=_floats, help="comma-separated SNR list in dB")
    p.add_argument("--nr", type=_ints, help="comma-separated receive-array sizes")
    p.add_argument("--mode", type=_modes, help=f"comma-separated receiver modes from {MODES}")
    p.add_argument("--workers", type=int)
    p.add_argument("--plot", action="store_true", help="also write SVG plots")
    p.add_argument("--dump-trials", action="store_true", help="also write per-trial CSV")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmofdm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _campaign_parser(sub, "mse", "CFO estimation MSE versus SNR")
    _campaign_parser(sub, "ser", "symbol error rate versus SNR")
    sim = _campaign_parser(sub, "simulate", "run one trial and dump it as JSON")
    sim.add_argument("--trial", type=int, default=0)

    bp = sub.add_parser("beampattern", help="matched-filter beam pattern over 0..180 degrees")
    bp.add_argument("--theta0", type=float, required=True, help="steering angle (deg)")
    bp.add_argument("--nr", type=int, default=128)
    bp.add_argument("--spacing", type=float, default=0.45, help="element spacing d/lambda")
    bp.add_argument("--interval", type=float, default=1.0, help="probe grid step (deg)")
    bp.add_argument("--out", help="CSV path (stdout when omitted)")
    bp.add_argument("--svg", help="optional SVG plot path")
    return parser


def campaign_from_args(args, defaults: CampaignConfig) -> CampaignConfig:
    values = load_config_file(args.config) if args.config else {}
    cc = build_campaign_config(values, defaults)
    overrides = {}
    for attr, key in (("seed", "seed"), ("trials", "trials"), ("snr", "snr_db"),
                      ("nr", "n_rx"), ("mode", "modes"), ("workers", "workers"), ("out", "out_dir")):
        val = getattr(args, attr, None)
        if val is not None:
            overrides[key] = val
    return replace(cc, **overrides)


def _cmd_campaign(args, stem: str) -> int:
    defaults = CampaignConfig(trials=500 if stem == "mse" else 200,
                              modes=("proposed",) if stem == "mse" else ("proposed", "ideal", "no-compensation"))
    cc = campaign_from_args(args, defaults)
    result = run_campaign(cc)
    out_dir = cc.output_dir()
    paths = write_outputs(result, out_dir, stem, args.dump_trials)
    if args.plot:
        from hmofdm.plotting import campaign_svg

        metrics = ("mse_fd_norm", "mse_ofo_norm") if stem == "mse" else ("ser",)
        for metric in metrics:
            p = out_dir / f"{stem}_{metric}.svg"
            campaign_svg(result, p, metric)
            paths.append(p)
    for p in paths:
        print(p)
    return 0


def _cmd_simulate(args) -> int:
    cc = campaign_from_args(args, CampaignConfig(trials=1, snr_db=(20.0,)))
    rec = run_trial(cc, args.trial, cc.snr_db[0], cc.n_rx[0], cc.modes[0])
    d = {k: getattr(rec, k) for k in rec.__dataclass_fields__}
    d.update(sq_err_fd=rec.sq_err_fd, sq_err_ofo=rec.sq_err_ofo,
             ser=rec.symbol_errors / rec.n_symbols if rec.n_symbols else math.nan)
    json.dump({"config": describe(cc), "trial": d}, sys.stdout, indent=2, default=str)
    sys.stdout.write("\n")
    return 0


def _cmd_beampattern(args) -> int:
    cfg = OfdmConfig(n_rx_antennas=args.nr, antenna_spacing_over_lambda=args.spacing,
                     beam_interval=args.interval)
    network = bf.build_network(cfg)
    probe = network.angles_deg
    gain = bf.beam_pattern(network, args.theta0, probe)
    rows = [("theta_deg", "gain")] + [(repr(float(t)), repr(float(g))) for t, g in zip(probe, gain)]
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    if args.svg:
        from hmofdm.plotting import beam_pattern_svg

        beam_pattern_svg(probe, gain, args.theta0, args.svg)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "beampattern":
            return _cmd_beampattern(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_campaign(args, args.command)
    except ConfigError as exc:
        print(f"hmofdm: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
