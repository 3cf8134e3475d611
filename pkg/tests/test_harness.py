import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from hmofdm.channel import apply_channel, draw_channel
from hmofdm.cli import main
from hmofdm.config import ChannelProfile, ConfigError, OfdmConfig
from hmofdm.harness import (
    CSV_COLUMNS,
    CampaignConfig,
    build_campaign_config,
    parse_config_text,
    run_campaign,
    run_mse_campaign,
    run_ser_campaign,
    run_trial,
    single_cfo_baseline,
)
from hmofdm.tx import random_frame


def small(**kw):
    base = dict(trials=4, snr_db=(10.0,), n_rx=(32,), seed=3)
    base.update(kw)
    return CampaignConfig(**base)


class TestRunTrial:
    def test_deterministic(self):
        cc = small()
        assert run_trial(cc, 2) == run_trial(cc, 2)
        assert run_trial(cc, 2) != run_trial(cc, 3)

    def test_truth_independent_of_axes(self):
        cc = small()
        a = run_trial(cc, 1, 0.0, 32, "proposed")
        b = run_trial(cc, 1, 30.0, 128, "ideal")
        assert (a.fd_norm, a.ofo_norm) == (b.fd_norm, b.ofo_norm)
        assert abs(a.ofo_norm) <= 0.4 and a.fd_norm == pytest.approx(0.1)

    def test_genie_noiseless(self):
        cc = small(trials=5, snr_db=(math.inf,), n_rx=(128,), modes=("genie-cfo",))
        row = run_campaign(cc).rows[0]
        assert row.ser < 1e-3

    def test_ideal_beats_no_compensation(self):
        cc = small(trials=10, snr_db=(20.0,), n_rx=(128,), modes=("ideal", "no-compensation"))
        res = run_campaign(cc)
        assert res.row(20.0, 128, "ideal").ser < res.row(20.0, 128, "no-compensation").ser

    def test_failure_recorded_not_fatal(self, monkeypatch):
        from hmofdm import harness
        from hmofdm.estimator import EstimationError

        def boom(*a, **k):
            raise EstimationError("forced")

        monkeypatch.setattr(harness, "joint_estimate", boom)
        res = run_campaign(small(trials=3))
        assert res.rows[0].failures == 3 and math.isnan(res.rows[0].mse_fd_norm)


class TestAggregation:
    def test_single_trial_mse(self):
        res = run_mse_campaign(small(trials=1))
        rec = res.records[0]
        assert res.rows[0].mse_fd_norm == (rec.fd_hat_norm - 0.1) ** 2
        assert res.rows[0].mse_ofo_norm == (rec.ofo_hat_norm - rec.ofo_norm) ** 2

    def test_mean_of_trial_errors(self):
        res = run_mse_campaign(small(trials=6))
        sq = [r.sq_err_fd for r in res.records]
        assert res.rows[0].mse_fd_norm == pytest.approx(np.mean(sq), rel=1e-15)
        # recomputable from the per-trial dump
        rows = list(csv.DictReader(io.StringIO(res.trials_csv())))
        assert np.mean([float(r["sq_err_ofo"]) for r in rows]) == pytest.approx(res.rows[0].mse_ofo_norm, rel=1e-15)

    def test_csv_schema(self):
        text = run_campaign(small(trials=2, snr_db=(0.0, 10.0))).to_csv()
        lines = text.split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len([l for l in lines if l]) == 3
        assert "\r" not in text

    def test_parallel_identical(self):
        cc = small(trials=6, snr_db=(0.0, 20.0))
        serial = run_campaign(cc)
        parallel = run_campaign(replace(cc, workers=2))
        assert serial.to_csv() == parallel.to_csv()
        assert serial.trials_csv() == parallel.trials_csv()


class TestCampaignTrends:
    def test_mse_improves_with_array(self):
        cc = CampaignConfig(trials=100, snr_db=(10.0,), n_rx=(32, 128), seed=11)
        res = run_mse_campaign(cc)
        assert res.row(10.0, 128).mse_fd_norm < res.row(10.0, 32).mse_fd_norm

    def test_mse_ofo_nonincreasing(self):
        cc = CampaignConfig(trials=100, snr_db=(0.0, 10.0, 20.0), n_rx=(128,), seed=12)
        mse = [r.mse_ofo_norm for r in run_mse_campaign(cc).rows]
        assert mse[0] >= mse[1] >= mse[2]

    def test_ser_nonincreasing(self):
        cc = CampaignConfig(trials=100, snr_db=(-5.0, 0.0, 10.0, 30.0), n_rx=(32,), seed=13)
        ser = [r.ser for r in run_ser_campaign(cc).rows]
        assert all(a >= b for a, b in zip(ser, ser[1:]))
        assert ser[0] > 0

    def test_qpsk_vs_16qam(self):
        kw = dict(trials=30, snr_db=(0.0,), n_rx=(32,), seed=14)
        qpsk = run_ser_campaign(CampaignConfig(**kw)).rows[0].ser
        qam = run_ser_campaign(CampaignConfig(ofdm=OfdmConfig(constellation="16QAM"), **kw)).rows[0].ser
        assert qpsk <= qam


class TestBaseline:
    def test_no_doppler_accuracy(self):
        cfg = OfdmConfig(n_rx_antennas=32)
        eps = 0.23
        frame = random_frame(cfg, np.random.default_rng(0))
        ch = draw_channel(ChannelProfile(), 0.0, eps / cfg.block_duration, 5, cfg)
        est = single_cfo_baseline(apply_channel(frame, ch, 30.0, 1))
        assert est.fd_hat == 0.0
        assert est.ofo_hat_norm == pytest.approx(eps, abs=1e-3)

    def test_deterministic(self):
        cc = small(modes=("single-cfo-baseline",))
        assert run_trial(cc, 0) == run_trial(cc, 0)

    def test_worse_than_proposed_under_doppler(self):
        cc = CampaignConfig(trials=500, snr_db=(20.0,), n_rx=(32,), seed=21,
                            modes=("proposed", "single-cfo-baseline"))
        res = run_campaign(cc)
        err = {m: np.median([abs(r.ofo_hat_norm - r.ofo_norm) for r in res.records if r.mode == m])
               for m in cc.modes}
        assert err["single-cfo-baseline"] > err["proposed"]


class TestConfigFile:
    TEXT = """
    # campaign
    n_subcarriers = 128
    cp_length = 16
    delays = 0, 3, 7
    tap_powers = 1, 0.5, 0.25
    snr_db = 0, 5
    n_rx = 16, 32
    trials = 7
    mode = proposed, ideal
    speed_kmh = 360
    block_duration = 1e-4
    search_step_norm = 0.002
    """

    def test_parse_and_build(self):
        cc = build_campaign_config(parse_config_text(self.TEXT))
        assert cc.ofdm.n_subcarriers == 128 and cc.ofdm.cp_length == 16
        assert cc.ofdm.block_duration == pytest.approx(1e-4)
        assert cc.profile.delays == (0, 3, 7)
        assert sum(cc.profile.tap_powers) == pytest.approx(1.0)
        assert cc.snr_db == (0.0, 5.0) and cc.n_rx == (16, 32)
        assert cc.modes == ("proposed", "ideal")
        assert cc.fd_norm == pytest.approx(0.1)
        assert cc.search.coarse_step_norm == 0.002

    @pytest.mark.parametrize("text", ["bogus_key = 1", "trials = many", "no equals sign",
                                      "mode = warp", "delays = 0, 40"])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            build_campaign_config(parse_config_text(text))


class TestCli:
    def test_mse_byte_identical(self, tmp_path, capsys):
        for d in ("a", "b"):
            assert main(["mse", "--trials", "10", "--seed", "7", "--snr", "0,10", "--nr", "32",
                         "--out", str(tmp_path / d)]) == 0
        a = (tmp_path / "a" / "mse.csv").read_bytes()
        assert a == (tmp_path / "b" / "mse.csv").read_bytes()
        assert a.count(b"\n") == 3

    def test_missing_config(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["mse", "--config", str(tmp_path / "nope.cfg"), "--out", str(out)]) != 0
        assert not out.exists()
        assert "config" in capsys.readouterr().err

    def test_bad_config_value(self, tmp_path):
        cfgfile = tmp_path / "c.cfg"
        cfgfile.write_text("trials = 0\n")
        assert main(["ser", "--config", str(cfgfile), "--out", str(tmp_path / "o")]) != 0

    def test_beampattern(self, tmp_path):
        out = tmp_path / "bp.csv"
        svg = tmp_path / "bp.svg"
        assert main(["beampattern", "--theta0", "90", "--nr", "128", "--out", str(out), "--svg", str(svg)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["theta_deg", "gain"]
        assert len(rows) - 1 == 181
        assert float(rows[91][1]) == pytest.approx(1.0)
        assert svg.read_text().lstrip().startswith("<?xml")

    def test_ser_multi_mode_and_env_dir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("HMOFDM_OUT_DIR", str(tmp_path / "env"))
        assert main(["ser", "--trials", "2", "--snr", "10", "--nr", "16",
                     "--mode", "proposed,ideal", "--plot", "--dump-trials"]) == 0
        names = sorted(p.name for p in (tmp_path / "env").iterdir())
        assert names == ["ser_ideal.csv", "ser_proposed.csv", "ser_ser.svg", "ser_trials.csv"]

    def test_config_file_with_override(self, tmp_path):
        cfgfile = tmp_path / "c.cfg"
        cfgfile.write_text("trials = 50\nsnr_db = 5\nn_rx = 16\n")
        assert main(["mse", "--config", str(cfgfile), "--trials", "2", "--out", str(tmp_path)]) == 0
        rows = list(csv.DictReader((tmp_path / "mse.csv").open()))
        assert rows[0]["trials"] == "2" and rows[0]["snr_db"] == "5.0"

    def test_simulate_json(self, capsys):
        assert main(["simulate", "--nr", "16", "--seed", "1"]) == 0
        dump = json.loads(capsys.readouterr().out)
        assert dump["trial"]["n_r"] == 16 and dump["trial"]["failed"] is False
