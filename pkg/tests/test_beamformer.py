import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmofdm.beamformer import (
    array_factor,
    beam_pattern,
    beamform_block,
    beamform_frame,
    build_network,
)
from hmofdm.channel import apply_channel, draw_channel, steering_vector
from hmofdm.config import ConfigError, OfdmConfig
from hmofdm.tx import random_frame

from oracles import dirichlet_gain, main_lobe_width, max_sidelobe


class TestNetwork:
    def test_default_grid(self, cfg):
        net = build_network(cfg)
        assert net.branch_count == 181
        assert net.angles_deg[0] == 0 and net.angles_deg[-1] == 180

    def test_coarse_grid(self):
        net = build_network(OfdmConfig(beam_interval=90))
        assert np.array_equal(net.angles_deg, [0, 90, 180])

    def test_weight_norm(self, cfg):
        net = build_network(cfg)
        assert np.allclose(np.sum(np.abs(net.weights) ** 2, axis=0), 1 / cfg.n_rx_antennas)

    def test_matched_gain_unity(self, cfg):
        net = build_network(cfg)
        a = steering_vector(net.angles_rad, cfg)
        assert np.allclose(np.sum(net.weights.conj() * a, axis=0), 1.0, atol=1e-12)


class TestBeamformBlock:
    def test_rank_one_on_grid(self, cfg, rng):
        net = build_network(cfg)
        i = 37
        v = rng.standard_normal(cfg.n_subcarriers) + 1j * rng.standard_normal(cfg.n_subcarriers)
        out = beamform_block(np.outer(steering_vector(net.angles_rad[i], cfg), v), net)
        assert np.allclose(out[i], v, atol=1e-12)

    def test_off_grid_suppression(self, cfg, rng):
        net = build_network(cfg)
        v = rng.standard_normal(cfg.n_subcarriers) + 0j
        out = beamform_block(np.outer(steering_vector(np.pi / 3, cfg), v), net)
        g = out[90] / v
        assert np.allclose(g, g[0])
        expected = dirichlet_gain(128, 0.45, 0.5)  # cos 60 - cos 90
        assert abs(g[0]) == pytest.approx(expected, abs=1e-12)
        assert abs(g[0]) < 0.05

    def test_zero_input(self, cfg):
        net = build_network(cfg)
        assert np.all(beamform_block(np.zeros((cfg.n_rx_antennas, 8)), net) == 0)

    def test_dimension_mismatch(self, cfg):
        with pytest.raises(ConfigError):
            beamform_block(np.zeros((3, 8)), build_network(cfg))

    @given(st.integers(0, 2**31 - 1), st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
    def test_linearity(self, seed, alpha, beta):
        cfg = OfdmConfig(n_rx_antennas=16, beam_interval=10)
        net = build_network(cfg)
        rng = np.random.default_rng(seed)
        y1, y2 = rng.standard_normal((2, 16, 8)) + 1j * rng.standard_normal((2, 16, 8))
        lhs = beamform_block(alpha * y1 + beta * y2, net)
        rhs = alpha * beamform_block(y1, net) + beta * beamform_block(y2, net)
        scale = max(1.0, abs(alpha), abs(beta))
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * scale

    def test_frame_matches_per_block(self, cfg, profile):
        cfg = cfg.with_(n_rx_antennas=16)
        frame = random_frame(cfg, np.random.default_rng(0))
        rx = apply_channel(frame, draw_channel(profile, 1e3, 1e2, 0, cfg), 10.0, 1)
        net = build_network(cfg)
        br = beamform_frame(rx, net)
        assert br.samples.shape == (181, 5, 256)
        for m in range(cfg.blocks_per_frame):
            assert np.allclose(br.samples[:, m], beamform_block(rx.block(m), net), atol=1e-12)


class TestBeamPattern:
    @pytest.mark.parametrize("theta0", [0.0, 10.0, 45.5, 90.0, 133.0, 180.0])
    def test_peak_unity(self, cfg, theta0):
        net = build_network(cfg)
        assert beam_pattern(net, theta0, [theta0])[0] == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0, 180), st.floats(0, 180), st.floats(-0.5, 0.5))
    def test_depends_only_on_cos_difference(self, theta0, theta1, shift):
        cfg = OfdmConfig(n_rx_antennas=64)
        net = build_network(cfg)
        c0, c1 = math.cos(math.radians(theta0)), math.cos(math.radians(theta1))
        # second probe pair with the same cos difference, if it exists
        c0b, c1b = c0 + shift, c1 + shift
        if abs(c0b) > 1 or abs(c1b) > 1:
            return
        g_a = beam_pattern(net, theta0, [theta1])[0]
        w = steering_vector(math.acos(c0b), cfg) / 64
        g_b = abs(w.conj() @ steering_vector(math.acos(c1b), cfg))
        assert g_a == pytest.approx(g_b, abs=1e-12)
        assert g_a == pytest.approx(dirichlet_gain(64, 0.45, c1 - c0), abs=1e-12)

    def test_closed_form_array_factor(self, cfg):
        d = np.linspace(-1.5, 1.5, 301)
        oracle = np.array([dirichlet_gain(cfg.n_rx_antennas, 0.45, x) for x in d])
        assert np.allclose(array_factor(d, cfg), oracle, atol=1e-12)

    def test_main_lobe_wider_near_endfire(self):
        net = build_network(OfdmConfig(n_rx_antennas=64))
        probe = np.linspace(0, 180, 18001)
        assert main_lobe_width(net, 10.0, probe) > main_lobe_width(net, 90.0, probe)

    def test_sidelobes_shrink_with_array(self):
        probe = np.linspace(0, 180, 18001)
        s128 = max_sidelobe(build_network(OfdmConfig(n_rx_antennas=128)), 90.0, probe)
        s32 = max_sidelobe(build_network(OfdmConfig(n_rx_antennas=32)), 90.0, probe)
        assert s128 < s32

    def test_probe_range(self, cfg):
        with pytest.raises(ConfigError):
            beam_pattern(build_network(cfg), 90, [190])
