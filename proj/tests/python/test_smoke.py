import numpy as np
import pytest

import pdmp


def small_model():
    p = pdmp.MLParameters()
    p.N_K = 10
    p.horizon = 0.3
    m = pdmp.ml_model(p)
    cfg = m.config
    cfg.mode_count = 16
    cfg.output_points = 50
    return m, cfg


def test_defaults():
    p = pdmp.MLParameters()
    assert p.c_K == 32.0
    assert p.v_K == -70.0
    assert p.N_K == 50
    assert p.nu_eff() == 4.0
    m = pdmp.ml_model(p)
    assert m.scenario.model.n_states() == 2
    assert m.config.horizon == 2.4


def test_averaged_run_settles():
    m, cfg = small_model()
    sim = pdmp.HybridSimulator(m.scenario, cfg)
    tr = sim.run_averaged(1)
    assert tr.coeffs.shape == (51, 16)
    assert np.all(np.diff(tr.times) > 0)
    u_mid = tr.coeffs @ sim.basis_values(0.5)
    assert u_mid[0] == 0.0
    assert u_mid[-1] < 0.0  # potassium pulls the fiber below rest


def test_pdmp_replay_and_jumps():
    m, cfg = small_model()
    sim = pdmp.HybridSimulator(m.scenario, cfg)
    a = sim.run_pdmp(2)
    b = sim.run_pdmp(2)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert np.array_equal(a.njumps_cum, b.njumps_cum)
    assert len(a.jumps) > 0
    ev = a.jumps[0]
    assert ev.from_state != ev.to_state
    assert np.all(a.open_fraction >= 0.0) and np.all(a.open_fraction <= 1.0)
    c = sim.run_pdmp(2, stream=1)
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_langevin_noise_energy():
    m, cfg = small_model()
    cfg.epsilon = 0.01
    cfg.langevin_h = 1e-3
    sim = pdmp.HybridSimulator(m.scenario, cfg)
    tr = sim.run_langevin(3)
    assert tr.noise_energy[-1] > 0.0
    assert np.all(np.diff(tr.noise_energy) >= 0.0)


def test_corrector_solvers_agree():
    model = pdmp.ml_channel_model(pdmp.MLParameters())
    gen = pdmp.generator_matrix(model, -20.0, 0)
    cp = pdmp.solve_channel(model, 0, -20.0)
    phi_lin = pdmp.solve_phi_linear(gen, cp.d)
    phi_int = pdmp.solve_phi_integral(gen, cp.d)
    assert np.allclose(phi_lin, phi_int, rtol=1e-10, atol=1e-12)
    assert cp.s >= 0.0
    mu = pdmp.quasi_stationary(gen)
    assert mu.p.sum() == pytest.approx(1.0)


def test_diffusion_psd():
    p = pdmp.MLParameters()
    p.N_K = 5
    model = pdmp.ml_channel_model(p)
    layout = pdmp.ChannelLayout.regular(5)
    geom = pdmp.pointlike_geometry(12, layout)
    coeffs = np.zeros(12)
    coeffs[0] = -10.0
    op = pdmp.diffusion_matrix(coeffs, [0] * 5, model, geom)
    assert op.a.shape == (12, 12)
    assert np.trace(op.paper()) >= 0.0
    assert np.min(np.linalg.eigvalsh(op.a)) >= -1e-9


def test_config_parse_and_sweep():
    text = """
[scenario]
name = custom
modes = 8
horizon = 0.4
h_max = 1e-3
output_points = 20
seed = 5

[model]
states = C, O
classes = 0, 0
conductance = 0, 1
reversal = 0, 1
rate.C.O = constant 1.3
rate.O.C = constant 0.4
channels = 4
diffusion = 1
capacitance = 1

[sweep]
epsilons = 1, averaged
replicas = 2
"""
    cfg = pdmp.parse_config_text(text)
    assert cfg.scenario_name == "custom"
    rows, csv = pdmp.run_epsilon_sweep(cfg)
    assert csv.splitlines()[0] == "epsilon, mean_sup_err, stderr, replicas"
    assert len(rows) == 2
    assert rows[1].mean_sup_err == 0.0  # averaged vs itself
    rows2, csv2 = pdmp.run_epsilon_sweep(cfg)
    assert csv == csv2

    with pytest.raises(pdmp.ConfigError):
        pdmp.parse_config_text("[scenario]\nbogus = 1\n")


def test_phi_check_passes():
    rep, text = pdmp.run_phi_check(7)
    assert rep.passed
    assert rep.instances >= 100
    assert "PASS" in text
