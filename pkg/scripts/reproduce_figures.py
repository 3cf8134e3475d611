"""Regenerate the beam-pattern, MSE and SER curves into one output directory.

    python scripts/reproduce_figures.py --out results/figures --trials 200
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from hmofdm import beamformer as bf
from hmofdm.config import OfdmConfig
from hmofdm.harness import build_campaign_config, load_config_file, run_campaign, write_outputs
from hmofdm.plotting import beam_pattern_svg, campaign_svg

HERE = Path(__file__).resolve().parent


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(HERE.parent / "configs" / "defaults.cfg"))
    p.add_argument("--out", default="results/figures")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cc = build_campaign_config(load_config_file(args.config))
    cc = replace(cc, trials=args.trials, workers=args.workers)

    for theta0 in (0.0, 30.0, 60.0, 90.0):
        net = bf.build_network(OfdmConfig(n_rx_antennas=64))
        probe = np.linspace(0, 180, 1801)
        beam_pattern_svg(probe, bf.beam_pattern(net, theta0, probe), theta0, out / f"beam_{theta0:g}.svg")

    mse = run_campaign(replace(cc, modes=("proposed", "single-cfo-baseline")))
    write_outputs(mse, out, "mse", dump_trials=True)
    for metric in ("mse_fd_norm", "mse_ofo_norm"):
        campaign_svg(mse, out / f"{metric}.svg", metric)

    ser = run_campaign(replace(cc, modes=("proposed", "ideal", "single-cfo-baseline", "no-compensation")))
    write_outputs(ser, out, "ser")
    campaign_svg(ser, out / "ser.svg", "ser")
    print(f"wrote results to {out}")


if __name__ == "__main__":
    main()
