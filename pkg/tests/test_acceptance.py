"""End-to-end behavior checks, one printed verdict line per criterion.

Each test exercises a headline result of the model through the public API
only, records a single PASS/FAIL line (echoed again in the terminal summary),
and then asserts.  Shared ODMR curves at 0.1 mW/um^2 are computed once per
module because two criteria read them.
"""

import time
import warnings

import numpy as np
import pytest
import scipy.optimize as sopt

from nvps import core, dynamics, experiments, plasmonics
from nvps.config import parse_config
from nvps.constants import (EV, G_LANDE, H_PLANCK, HBAR, MU_BOHR,
                            wavenumber_in_medium)

EPS_B = 5.885   # diamond-like host for the silver sphere runs
D_GS = 2.87e9


def ag_body(orientation, intensity="0.1 mW/um^2", points=271):
    return {
        "spin": {"static_field": "4.4 mT"},
        "drive": {"photon_energy": "auto", "intensity": intensity,
                  "background_index": EPS_B ** 0.5},
        "particle": {"material": "Ag", "radius": "10 nm",
                     "separation": "20 nm", "orientation": orientation},
        "experiment": {"odmr": {"start": "2.6 GHz", "stop": "3.14 GHz",
                                "points": points}},
    }


AU_BODY = {
    "drive": {"photon_energy": "2.33 eV", "intensity": "0.5 mW/um^2",
              "background_index": 1.0},
    "particle": {"material": "Au", "radius": "30 nm", "separation": "38 nm",
                 "orientation": "angle", "theta": "90 deg",
                 "far_field_scale": 0.78, "band_efficiency": False},
}


@pytest.fixture(scope="module")
def ag_curves():
    """ODMR curves at 0.1 mW/um^2: silver sphere both orientations + free space."""
    cfg_r = parse_config(ag_body("radial"))
    photon = experiments.resolve_drive_energy(cfg_r)
    sources = {
        "radial": cfg_r,
        "tangential": parse_config(ag_body("tangential")),
        "reference": experiments.reference_config(cfg_r, photon),
    }
    curves = {}
    for key, cfg in sources.items():
        asm = experiments.assemble(cfg, photon_energy=photon)
        curves[key] = experiments.odmr_sweep(asm)
    return curves


def test_zeeman_dip_positions(acceptance_report):
    t0 = time.monotonic()
    cfg = parse_config(None)
    curve = experiments.odmr_sweep(experiments.assemble(cfg))
    freq, pl = curve.freq_hz, curve.pl
    edge = max(1, round(0.1 * freq.size))
    baseline = float(np.mean(np.concatenate([pl[:edge], pl[-edge:]])))

    split = G_LANDE * MU_BOHR * 4.4e-3 / H_PLANCK
    parts = []
    ok = True
    for mask, target in ((freq <= D_GS, D_GS - split),
                         (freq >= D_GS, D_GS + split)):
        center, fwhm, _ = experiments.fit_lorentzian_dip(freq[mask], pl[mask],
                                                         baseline)
        ok = ok and abs(center - target) <= fwhm / 10.0
        parts.append(f"{center / 1e9:.4f} GHz vs {target / 1e9:.4f} "
                     f"(fwhm/10 = {fwhm / 1e7:.1f} MHz)")
    detail = "; ".join(parts) + f"; {time.monotonic() - t0:.0f} s"
    acceptance_report(1, "zeeman-dip-positions", ok, detail)
    assert ok, detail


def test_readout_trace_shapes(acceptance_report):
    t0 = time.monotonic()
    cfg = parse_config(None)
    tr = experiments.time_domain_readout(cfg,
                                         t_grid=np.linspace(0.0, 50e-6, 2001))
    ss = tr.pl_ss
    conv = max(abs(tr.pl_zero[-1] - ss), abs(tr.pl_pm1[-1] - ss)) / ss

    d0 = np.diff(tr.pl_zero)
    i0 = int(np.argmax(d0 < 0))   # end of the optical turn-on
    mono0 = tr.pl_zero[i0] > ss and bool(np.all(d0[i0:] <= 1e-6 * ss))

    d1 = np.diff(tr.pl_pm1)
    i1 = int(np.argmax(d1 < 0))
    j = i1 + int(np.argmin(tr.pl_pm1[i1:]))
    dip = tr.pl_pm1[i1] - tr.pl_pm1[j]
    recover = bool(np.all(np.diff(tr.pl_pm1[j:]) >= -1e-6 * ss))
    shape1 = dip > 0.003 * ss and recover

    ok = conv <= 1e-6 and mono0 and shape1
    detail = (f"common steady to {conv:.1e}; bright-decay {mono0}; "
              f"dip-recovery {shape1} (dip {dip / ss * 100:.2f}% of steady); "
              f"{time.monotonic() - t0:.0f} s")
    acceptance_report(2, "readout-trace-shapes", ok, detail)
    assert ok, detail


def test_reference_sensitivity(acceptance_report, ag_curves):
    fom = experiments.odmr_figures_of_merit(ag_curves["reference"])
    eta = fom.sensitivity
    ok = 8.54e-6 <= eta <= 15.86e-6
    detail = (f"eta_B = {eta * 1e6:.2f} uT/sqrtHz, band [8.54, 15.86] "
              f"(contrast {fom.contrast:.3f}, fwhm {fom.fwhm_hz / 1e6:.1f} MHz)")
    acceptance_report(3, "reference-sensitivity", ok, detail)
    assert ok, detail


def test_plasmonic_odmr_enhancements(acceptance_report, ag_curves):
    perp = experiments.odmr_figures_of_merit(ag_curves["radial"],
                                             reference=ag_curves["reference"])
    para = experiments.odmr_figures_of_merit(ag_curves["tangential"],
                                             reference=ag_curves["reference"])
    ok = (perp.baseline_enhancement >= 50.0
          and 10.0 <= para.baseline_enhancement <= 40.0
          and 40.0 <= perp.depth_enhancement <= 160.0)
    detail = (f"baseline perp {perp.baseline_enhancement:.1f}x (>= 50), "
              f"para {para.baseline_enhancement:.1f}x ([10, 40]), "
              f"depth perp {perp.depth_enhancement:.1f}x ([40, 160])")
    acceptance_report(4, "plasmonic-odmr-enhancements", ok, detail)
    assert ok, detail


def test_intensity_trend(acceptance_report):
    t0 = time.monotonic()
    intensities = [1e6, 1e7, 1e8, 1e9]   # W/m^2 = 1..1000 uW/um^2
    enh = {}
    clean = True
    for orientation in ("radial", "tangential"):
        cfg = parse_config(ag_body(orientation, points=121))
        rows = experiments.intensity_sweep(cfg, intensities=intensities)
        clean = clean and all(r.error is None for r in rows)
        enh[orientation] = np.array([r.fom.baseline_enhancement if r.fom
                                     else np.nan for r in rows])
    decreasing = all(bool(np.all(np.diff(v) < 0)) for v in enh.values())
    floor = enh["tangential"][0] >= 15.0 and enh["radial"][0] >= 75.0
    ok = clean and decreasing and floor
    detail = (f"perp {np.round(enh['radial'], 1).tolist()}, "
              f"para {np.round(enh['tangential'], 1).tolist()}; "
              f"strictly decreasing {decreasing}; "
              f"{time.monotonic() - t0:.0f} s")
    acceptance_report(5, "intensity-trend", ok, detail)
    assert ok, detail


def test_time_domain_enhancement(acceptance_report):
    t0 = time.monotonic()
    cfg = parse_config(ag_body("radial", intensity="1.0 mW/um^2"))
    photon = experiments.resolve_drive_energy(cfg)
    ref_cfg = experiments.reference_config(cfg, photon)
    t_grid = np.linspace(0.0, 30e-6, 1201)
    tr_e = experiments.time_domain_readout(cfg, t_grid=t_grid)
    tr_r = experiments.time_domain_readout(ref_cfg, t_grid=t_grid)

    pl_enh = tr_e.pl_ss / tr_r.pl_ss
    area_enh = tr_e.contrast_area / tr_r.contrast_area
    stab_ratio = (max(tr_r.stabilization_zero, tr_r.stabilization_pm1)
                  / max(tr_e.stabilization_zero, tr_e.stabilization_pm1))
    ok = (16.0 <= pl_enh <= 66.0 and 3.2 <= area_enh <= 12.8
          and stab_ratio >= 2.0)
    detail = (f"steady PL {pl_enh:.1f}x ([16, 66]), contrast area "
              f"{area_enh:.2f}x ([3.2, 12.8]), stabilization ratio "
              f"{stab_ratio:.2f} (>= 2); {time.monotonic() - t0:.0f} s")
    acceptance_report(6, "time-domain-enhancement", ok, detail)
    assert ok, detail


def test_gold_dimer_angle_model(acceptance_report):
    t0 = time.monotonic()
    au = parse_config(AU_BODY)
    grid = np.linspace(1.5, 2.1, 601) * EV
    _, far = experiments.emission_experiment(au, energy_grid=grid, mode="far")
    ref_cfg = experiments.reference_config(au, 2.33 * EV)
    _, far_ref = experiments.emission_experiment(ref_cfg, energy_grid=grid,
                                                 mode="far")
    band = (grid >= 1.931 * EV) & (grid <= 1.951 * EV)
    ratio = (np.trapezoid(far[band], grid[band])
             / np.trapezoid(far_ref[band], grid[band]))

    thetas, pl = experiments.angle_scan(au)
    mono = (bool(np.all(np.diff(pl) > 0)) and pl[0] == pl.min()
            and pl[0] < 0.05 * pl[-1])
    ok = 3.0 <= ratio <= 9.0 and mono
    detail = (f"line-region far-field {ratio:.2f}x ([3, 9]); "
              f"PL(theta) increasing from dark {mono}; "
              f"{time.monotonic() - t0:.0f} s")
    acceptance_report(7, "gold-dimer-angle-model", ok, detail)
    assert ok, detail


def test_property_suite(acceptance_report):
    t0 = time.monotonic()
    checks = {}

    # structural + kernel quality on the full model
    cfg = parse_config(None)
    asm = experiments.assemble(cfg)
    dim = asm.scheme.dim
    checks["dim-32"] = dim == 32
    checks["62-channels"] = len(asm.channels) == 62
    tr_row = np.zeros(dim * dim)
    tr_row[:: dim + 1] = 1.0
    l_norm = np.linalg.norm(asm.l0)
    checks["trace-annihilation"] = (
        np.linalg.norm(tr_row @ asm.l0) <= 1e-9 * l_norm)
    l_res = asm.liouvillian_at(2 * np.pi * cfg.spin.microwave_frequency)
    rho = dynamics.steady_state(l_res)
    checks["positivity"] = np.linalg.eigvalsh(rho).min() >= -1e-9
    checks["residual"] = (np.linalg.norm(l_res @ dynamics.vec(rho))
                          <= 1e-10 * np.linalg.norm(l_res))

    # reduced ladder: direct integration meets the kernel solve
    table = core.VibronicTable(
        energies=(0.0, 31.8e-3 * EV, 70.3e-3 * EV),
        gamma_f=(0.69e6, 2.42e6, 8.57e6),
        gamma_vib=(float("nan"), 85e12, 82e12))
    params = core.NVParameters(
        vibronic=table,
        spin=core.SpinParameters(b_nv=4.4e-3, b_mw=0.35e-3,
                                 omega_mw=2 * np.pi * 2.87e9),
        isc=core.ISCParameters(),
        drive=core.OpticalDrive(photon_energy=2.033 * EV, intensity=0.5e9,
                                e0=core.field_amplitude_from_intensity(0.5e9, 1.0)))
    scheme = core.build_level_scheme(2, table)
    rabi_band = params.dipoles() * params.drive.e0 / (
        HBAR * params.drive.eps_eff_diamond)
    rabi = np.broadcast_to(rabi_band[None, :, None], (2, 3, 3)).astype(complex)
    emission = np.repeat(np.array(table.gamma_f)[:, None], 3, axis=1)
    l_small = dynamics.liouvillian(
        dynamics.build_hamiltonian(scheme, params, rabi),
        dynamics.build_collapse_channels(scheme, params, emission))
    rho_ss = dynamics.steady_state(l_small)
    rho0 = np.zeros_like(rho_ss)
    rho0[scheme.index("g0", 0), scheme.index("g0", 0)] = 1.0
    final = dynamics.evolve(rho0, l_small, np.arange(1, 151) * 1e-6)[-1]
    checks["steady-vs-evolve"] = dynamics.trace_distance(final, rho_ss) <= 1e-6

    # two-level emission line against its channel-defined half width
    gamma, gamma_star = 1e8, 2e10
    gamma2 = 0.5 * gamma + 0.5 * gamma_star
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    l_tls = dynamics.liouvillian(
        HBAR * np.array([[0, -1e8], [-1e8, 0]], dtype=complex),
        [dynamics.CollapseChannel(gamma, sm, "decay"),
         dynamics.CollapseChannel(gamma_star, np.diag([0, 1]).astype(complex),
                                  "dephasing")])
    rho_tls = dynamics.steady_state(l_tls)
    omega_d = 2.0 * EV / HBAR
    e_grid = HBAR * (omega_d + np.linspace(-20 * gamma2, 20 * gamma2, 1601))
    spec = dynamics.emission_spectrum(l_tls, [(0, 1)], [1.0], rho_tls, e_grid,
                                      omega_d, window_rate=gamma2)
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", sopt.OptimizeWarning)
        popt, _ = sopt.curve_fit(
            lambda w, a, w0, hw: a * hw**2 / ((w - w0) ** 2 + hw**2),
            e_grid / HBAR - omega_d, spec, p0=(spec.max(), 0.0, gamma2))
    checks["lorentzian-width"] = abs(abs(popt[2]) - gamma2) <= 0.02 * gamma2

    # plasmonic modifiers decouple at large separation and stay physical
    table_ag = plasmonics.MaterialTable.bundled("Ag")
    n_b = EPS_B ** 0.5
    omega_zpl = 1.941 * EV / HBAR
    eps = plasmonics.permittivity(table_ag, omega_zpl)
    alpha = plasmonics.corrected_polarizability(
        plasmonics.quasistatic_polarizability(eps, EPS_B, 10e-9),
        wavenumber_in_medium(omega_zpl, n_b))
    far = plasmonics.decay_rate_ratio("radial", omega_zpl, 1e-3, alpha, n_b)
    nr = plasmonics.nonradiative_rate_ratio("radial", omega_zpl, 1e-3, alpha,
                                            n_b)
    geo = plasmonics.CouplingGeometry(separation=1e-3, orientation="radial")
    checks["far-separation-decoupling"] = (
        abs(far - n_b) <= 1e-6 * n_b and abs(nr) <= 1e-6 * n_b
        and abs(plasmonics.rabi_factor(geo, alpha) - 1.0) <= 1e-6)

    q_ok = True
    for radius in (12e-9, 20e-9, 40e-9, 100e-9):
        sep = radius + 10e-9
        for orientation in ("radial", "tangential"):
            for e_ev in np.linspace(1.62, 2.40, 40):
                w = e_ev * EV / HBAR
                a = plasmonics.corrected_polarizability(
                    plasmonics.quasistatic_polarizability(
                        plasmonics.permittivity(table_ag, w), EPS_B, radius),
                    wavenumber_in_medium(w, n_b))
                g = plasmonics.decay_rate_ratio(orientation, w, sep, a, n_b)
                g_nr = plasmonics.nonradiative_rate_ratio(orientation, w, sep,
                                                          a, n_b)
                q = plasmonics.relative_quantum_efficiency(g, g_nr)
                q_ok = q_ok and 0.0 <= q <= 1.0
    checks["efficiency-bounds"] = q_ok

    elapsed = time.monotonic() - t0
    checks["under-30s"] = elapsed < 30.0
    ok = all(checks.values())
    failed = [name for name, good in checks.items() if not good]
    detail = (f"{len(checks)} properties, elapsed {elapsed:.1f} s"
              + (f"; failed: {failed}" if failed else ""))
    acceptance_report(8, "property-suite", ok, detail)
    assert ok, detail
