"""Superoperator construction, solvers, and spectra against independent oracles.

The two-level fixtures integrate the master equation term by term with
solve_ivp (direct commutator algebra, no vectorisation) so that any kron
ordering or sign slip in the superoperator shows up as a mismatch.
"""

import math
import warnings

import numpy as np
import pytest
import scipy.integrate as sint
import scipy.optimize as sopt

from nvps import core, dynamics
from nvps.constants import EV, HBAR
from nvps.errors import (ConfigError, DegenerateSteadyStateError, SolverError,
                         WindowError)

SIGMA_M = np.array([[0, 1], [0, 0]], dtype=complex)   # |g><e|
PROJ_E = np.array([[0, 0], [0, 1]], dtype=complex)


def tls_system(delta=0.0, omega=1e8, gamma=1e8, gamma_star=2e10):
    h = HBAR * np.array([[0, -omega], [-omega, delta]], dtype=complex)
    channels = [
        dynamics.CollapseChannel(gamma, SIGMA_M, "decay"),
        dynamics.CollapseChannel(gamma_star, PROJ_E, "dephasing"),
    ]
    return h, channels


def direct_rhs(h, channels):
    """Master-equation RHS straight from the commutator formula."""
    def rhs(_, y):
        rho = y.reshape(2, 2)
        out = (-1j / HBAR) * (h @ rho - rho @ h)
        for ch in channels:
            l = ch.op
            ldl = l.conj().T @ l
            out = out + ch.rate * (l @ rho @ l.conj().T
                                   - 0.5 * (ldl @ rho + rho @ ldl))
        return out.reshape(-1)
    return rhs


def test_tls_steady_state_matches_direct_integration():
    h, channels = tls_system(delta=3e9)
    l_op = dynamics.liouvillian(h, channels)
    rho_ss = dynamics.steady_state(l_op)

    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    sol = sint.solve_ivp(direct_rhs(h, channels), (0.0, 2e-7),
                         rho0.reshape(-1), rtol=1e-11, atol=1e-13)
    rho_long = sol.y[:, -1].reshape(2, 2)
    assert dynamics.trace_distance(rho_ss, rho_long) < 1e-8


def test_tls_transient_matches_direct_integration():
    h, channels = tls_system(omega=5e9, gamma=5e8, gamma_star=1e9)
    l_op = dynamics.liouvillian(h, channels)
    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    t_grid = np.linspace(0.0, 4e-9, 41)[1:]
    states = dynamics.evolve(rho0, l_op, t_grid)

    sol = sint.solve_ivp(direct_rhs(h, channels), (0.0, 4e-9),
                         rho0.reshape(-1), t_eval=t_grid, rtol=1e-11, atol=1e-13)
    ref = sol.y.T.reshape(-1, 2, 2)
    assert np.max(np.abs(states - ref)) < 1e-8
    # damped Rabi oscillation: excited population oscillates before settling
    p_e = np.real(states[:, 1, 1])
    assert np.max(p_e) > 1.5 * p_e[-1]


def test_tls_saturation_limit():
    h, channels = tls_system(delta=0.0, omega=1e12, gamma=1e8, gamma_star=0.0)
    rho_ss = dynamics.steady_state(dynamics.liouvillian(h, channels))
    assert np.real(rho_ss[1, 1]) == pytest.approx(0.5, abs=1e-4)


def test_tls_spectrum_lorentzian_width():
    omega, gamma, gamma_star = 1e8, 1e8, 2e10
    gamma2 = 0.5 * gamma + 0.5 * gamma_star
    h, channels = tls_system(delta=0.0, omega=omega, gamma=gamma,
                             gamma_star=gamma_star)
    l_op = dynamics.liouvillian(h, channels)
    rho_ss = dynamics.steady_state(l_op)

    omega_d = 2.0 * EV / HBAR
    span = 20.0 * gamma2
    grid = HBAR * (omega_d + np.linspace(-span, span, 1601))
    spec = dynamics.emission_spectrum(l_op, [(0, 1)], [1.0], rho_ss, grid,
                                      omega_d, window_rate=gamma2)
    w_rot = grid / HBAR - omega_d

    def lor(w, a, w0, hw):
        return a * hw**2 / ((w - w0) ** 2 + hw**2)

    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", sopt.OptimizeWarning)
        popt, _ = sopt.curve_fit(lor, w_rot, spec,
                                 p0=(spec.max(), 0.0, gamma2))
    assert abs(popt[2]) == pytest.approx(gamma2, rel=0.02)
    assert abs(popt[1]) < 0.05 * gamma2

    # integral consistency: finite-window Lorentzian mass against C(0)
    c0 = np.real(rho_ss[1, 1]) - abs(rho_ss[0, 1]) ** 2
    mass = np.trapezoid(spec, w_rot) / (2.0 * np.pi)
    expected = c0 * (2.0 / np.pi) * math.atan(span / gamma2)
    assert mass == pytest.approx(expected, rel=0.02)


def test_tls_spectrum_detuned_peak_position():
    delta = 4e10
    h, channels = tls_system(delta=delta, omega=1e8, gamma=1e8, gamma_star=2e10)
    l_op = dynamics.liouvillian(h, channels)
    rho_ss = dynamics.steady_state(l_op)
    omega_d = 2.0 * EV / HBAR
    grid = HBAR * (omega_d + np.linspace(-1.2e11, 1.2e11, 2401))
    spec = dynamics.emission_spectrum(l_op, [(0, 1)], [1.0], rho_ss, grid,
                                      omega_d, window_rate=1.005e10)
    w_peak = grid[np.argmax(spec)] / HBAR - omega_d
    # diagonal carries (transition - drive), so the line sits delta above
    assert w_peak == pytest.approx(delta, abs=5e9)


def test_spectrum_window_error():
    h, channels = tls_system()
    l_op = dynamics.liouvillian(h, channels)
    rho_ss = dynamics.steady_state(l_op)
    omega_d = 2.0 * EV / HBAR
    grid = HBAR * (omega_d + np.linspace(-2e11, 2e11, 101))
    with pytest.raises(WindowError):
        dynamics.emission_spectrum(l_op, [(0, 1)], [1.0], rho_ss, grid,
                                   omega_d, window_rate=1e13, max_doublings=0)


def test_degenerate_kernel_detected():
    l_op = dynamics.liouvillian(np.zeros((2, 2), dtype=complex),
                                [dynamics.CollapseChannel(1e9, PROJ_E, "deph")])
    with pytest.raises(DegenerateSteadyStateError):
        dynamics.steady_state(l_op)


def test_evolve_grid_validation():
    h, channels = tls_system()
    l_op = dynamics.liouvillian(h, channels)
    rho0 = np.eye(2, dtype=complex) / 2
    with pytest.raises(ConfigError):
        dynamics.evolve(rho0, l_op, np.array([1e-9, 0.5e-9]))
    with pytest.raises(ConfigError):
        dynamics.evolve(rho0, l_op, np.array([-1e-9, 1e-9]))
    with pytest.raises(ConfigError):
        dynamics.evolve(rho0, l_op, np.array([]))


def test_evolve_rejects_trace_violating_generator():
    h, channels = tls_system()
    l_op = dynamics.liouvillian(h, channels)
    bad = l_op + 1e7 * np.eye(4)
    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    with pytest.raises(SolverError):
        dynamics.evolve(rho0, bad, np.array([1e-9, 1e-6]))


# ---------------------------------------------------------------- small model

N_SMALL = 2


@pytest.fixture(scope="module")
def small_model():
    table = core.VibronicTable(
        energies=(0.0, 31.8e-3 * EV, 70.3e-3 * EV),
        gamma_f=(0.69e6, 2.42e6, 8.57e6),
        gamma_vib=(float("nan"), 85e12, 82e12))
    spin = core.SpinParameters(b_nv=4.4e-3, b_mw=0.35e-3,
                               omega_mw=2 * np.pi * 2.87e9)
    isc = core.ISCParameters()
    e0 = core.field_amplitude_from_intensity(0.5e9, 1.0)
    drive = core.OpticalDrive(photon_energy=2.033 * EV, intensity=0.5e9, e0=e0)
    params = core.NVParameters(vibronic=table, spin=spin, isc=isc, drive=drive)
    scheme = core.build_level_scheme(N_SMALL, table)
    rabi_band = params.dipoles() * e0 / (HBAR * drive.eps_eff_diamond)
    rabi = np.broadcast_to(rabi_band[None, :, None],
                           (2, N_SMALL + 1, 3)).astype(complex)
    emission = np.repeat(np.array(table.gamma_f)[:, None], 3, axis=1)
    channels = dynamics.build_collapse_channels(scheme, params, emission)
    h = dynamics.build_hamiltonian(scheme, params, rabi)
    return params, scheme, rabi, emission, channels, h


def test_hamiltonian_hermitian(small_model):
    params, scheme, rabi, _, _, h = small_model
    assert np.allclose(h, h.conj().T)
    rng = np.random.default_rng(7)
    rnd = rng.normal(size=(2, N_SMALL + 1, 3)) + 1j * rng.normal(size=(2, N_SMALL + 1, 3))
    h2 = dynamics.build_hamiltonian(scheme, params, 1e9 * rnd)
    assert np.allclose(h2, h2.conj().T)


def test_hamiltonian_diagonal_structure(small_model):
    params, scheme, _, _, _, h = small_model
    drive = params.drive
    i_e0 = scheme.index("e0", 0)
    assert h[i_e0, i_e0] == pytest.approx(drive.zpl_energy - drive.photon_energy)
    i_e1 = scheme.index("e1", 0)
    assert h[i_e1, i_e1] == 0.0
    i_g2 = scheme.index("g2", 0)
    assert h[i_g2, i_g2] == pytest.approx(params.vibronic.energies[2])
    # singlets in the rotating frame: fixed gaps below the excited state
    e_s1 = drive.zpl_energy - params.isc.e_gap_es - drive.photon_energy
    assert h[scheme.index_s1, scheme.index_s1] == pytest.approx(e_s1)


def test_hamiltonian_rabi_shape_error(small_model):
    params, scheme = small_model[0], small_model[1]
    with pytest.raises(ConfigError):
        dynamics.build_hamiltonian(scheme, params, np.zeros((2, 9, 3)))
    bad = np.full((2, N_SMALL + 1, 3), np.nan)
    with pytest.raises(ConfigError):
        dynamics.build_hamiltonian(scheme, params, bad)


def test_channel_count_and_labels(small_model):
    channels = small_model[4]
    assert len(channels) == 6 * N_SMALL + 20
    labels = [ch.label for ch in channels]
    assert len(set(labels)) == len(labels)
    assert sum(1 for lab in labels if lab.startswith("emission")) == 3 * (N_SMALL + 1)
    assert sum(1 for lab in labels if lab.startswith("isc")) == 6


def test_full_channel_count():
    table = core.VibronicTable.default()
    params = core.NVParameters(
        vibronic=table, spin=core.SpinParameters(), isc=core.ISCParameters(),
        drive=core.OpticalDrive(photon_energy=2.033 * EV, intensity=1e9, e0=1.0))
    scheme = core.build_level_scheme(7, table)
    emission = np.repeat(np.array(table.gamma_f)[:, None], 3, axis=1)
    channels = dynamics.build_collapse_channels(scheme, params, emission)
    assert len(channels) == 62


def test_trace_annihilation(small_model):
    channels, h = small_model[4], small_model[5]
    l_op = dynamics.liouvillian(h, channels)
    dim = h.shape[0]
    tr_row = np.zeros(dim * dim)
    tr_row[:: dim + 1] = 1.0
    assert np.linalg.norm(tr_row @ l_op) <= 1e-9 * np.linalg.norm(l_op)


def test_mw_sweep_diagonal_matches_rebuild(small_model):
    params, scheme, rabi, _, channels, _ = small_model
    h0 = dynamics.build_hamiltonian(scheme, params, rabi, omega_mw=0.0)
    l0 = dynamics.liouvillian(h0, channels)
    omega = 2 * np.pi * 2.9e9
    h_w = dynamics.build_hamiltonian(scheme, params, rabi, omega_mw=omega)
    l_w = dynamics.liouvillian(h_w, channels)
    diag = dynamics.mw_detuning_diagonal(scheme)
    l_shift = l0.copy()
    l_shift.flat[:: l0.shape[0] + 1] += omega * diag
    assert np.allclose(l_shift, l_w, atol=1e3)


def test_steady_state_quality(small_model):
    channels, h = small_model[4], small_model[5]
    l_op = dynamics.liouvillian(h, channels)
    rho = dynamics.steady_state(l_op)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() >= -1e-9
    residual = np.linalg.norm(l_op @ dynamics.vec(rho))
    assert residual <= 1e-10 * np.linalg.norm(l_op)


def test_steady_vs_evolve_small_model(small_model):
    channels, h = small_model[4], small_model[5]
    l_op = dynamics.liouvillian(h, channels)
    rho_ss = dynamics.steady_state(l_op)
    scheme = small_model[1]
    rho0 = np.zeros_like(rho_ss)
    rho0[scheme.index("g0", 0), scheme.index("g0", 0)] = 1.0
    t_grid = np.arange(1, 151) * 1e-6
    states = dynamics.evolve(rho0, l_op, t_grid)
    assert dynamics.trace_distance(states[-1], rho_ss) <= 1e-6
    # and the halfway state is closer than the start
    assert (dynamics.trace_distance(states[74], rho_ss)
            < dynamics.trace_distance(rho0, rho_ss))


def test_evolve_trace_preserved(small_model):
    channels, h = small_model[4], small_model[5]
    l_op = dynamics.liouvillian(h, channels)
    dim = h.shape[0]
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[1, 1] = 1.0
    states = dynamics.evolve(rho0, l_op, np.linspace(1e-8, 1e-6, 25))
    traces = np.real(np.trace(states, axis1=1, axis2=2))
    assert np.allclose(traces, 1.0, atol=1e-12)


def test_pl_rate_formula(small_model):
    scheme, emission = small_model[1], small_model[3]
    dim = scheme.dim
    rho = np.zeros((dim, dim), dtype=complex)
    base = 3 * (N_SMALL + 1)
    rho[base, base] = 0.2
    rho[base + 1, base + 1] = 0.3
    q = np.full((N_SMALL + 1, 3), 0.5)
    expected = 0.5 * (np.sum(emission[:, 0]) * 0.2 + np.sum(emission[:, 1]) * 0.3)
    assert dynamics.pl_rate(rho, q, emission, scheme) == pytest.approx(expected)


def test_negative_rate_rejected(small_model):
    with pytest.raises(ConfigError):
        dynamics.dissipator_superop(
            [dynamics.CollapseChannel(-1.0, SIGMA_M, "bad")])
