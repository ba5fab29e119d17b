"""Experiment drivers: ODMR sweeps, readout traces, spectra, figures of merit.

An Assembly binds a resolved configuration to the matrices the solvers need:
Rabi array, plasmon-modified emission rates, collection efficiencies, and the
Liouvillian split so that microwave-frequency sweeps only touch a diagonal.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize as sopt

from . import dynamics, plasmonics
from .constants import G_LANDE, H_PLANCK, HBAR, MU_BOHR, wavenumber_in_medium
from .core import (ISCParameters, NVParameters, OpticalDrive, SpinParameters,
                   VibronicTable, build_level_scheme,
                   field_amplitude_from_intensity)
from .errors import ConfigError, NoResonanceError, SolverError, WindowError


def resolve_drive_energy(cfg):
    """Photon energy in J; 'auto' locks onto the particle's dipolar resonance."""
    if cfg.drive.photon_energy != "auto":
        return float(cfg.drive.photon_energy)
    if cfg.particle is None:
        raise ConfigError("drive.photon_energy: 'auto' needs a particle block "
                          "to take the resonance from")
    table = _material_table(cfg.particle.material)
    eps_b = cfg.drive.background_index**2
    return plasmonics.plasmon_peak_energy(table, eps_b, cfg.particle.radius)


def _material_table(name):
    if name in ("Ag", "Au"):
        return plasmonics.MaterialTable.bundled(name)
    return plasmonics.MaterialTable.from_csv(name)


def _nv_params(cfg, photon_energy, intensity, b_mw):
    nvc, spc, iscc = cfg.nv, cfg.spin, cfg.isc
    if nvc.vibronic_table is None:
        table = VibronicTable.default()
    else:
        table = VibronicTable.from_csv(nvc.vibronic_table)
    if table.n != nvc.bands:
        raise ConfigError(
            f"nv.bands = {nvc.bands} but the vibronic table has {table.n} bands")
    spin = SpinParameters(
        d_gs=spc.zero_field_splitting_gs,
        d_es=spc.zero_field_splitting_es,
        b_nv=spc.static_field,
        b_mw=b_mw,
        omega_mw=2.0 * np.pi * spc.microwave_frequency,
        gamma_rel_g=1.0 / spc.t1_ground,
        gamma_rel_e=1.0 / spc.t1_excited,
        gamma_star_g=1.0 / spc.t2_ground,
        gamma_star_e=1.0 / spc.t2_excited,
    )
    isc = ISCParameters(
        gamma_es_pm1=iscc.rate_es_pm1, gamma_es_0=iscc.rate_es_0,
        gamma_sg_pm1=iscc.rate_sg_pm1, gamma_sg_0=iscc.rate_sg_0,
        gamma_s=iscc.rate_singlet,
        e_gap_singlet=iscc.gap_singlet, e_gap_es=iscc.gap_excited,
    )
    n_b = cfg.drive.background_index
    drive = OpticalDrive(
        photon_energy=photon_energy, intensity=intensity,
        e0=field_amplitude_from_intensity(intensity, n_b),
        zpl_energy=nvc.zpl_energy, gamma_star=nvc.optical_dephasing_rate,
        gamma_e=nvc.excited_vibronic_rate, mu0=nvc.dipole_moment,
        n_diamond=nvc.index_of_refraction, n_background=n_b,
    )
    return NVParameters(vibronic=table, spin=spin, isc=isc, drive=drive)


@dataclass
class Assembly:
    """Everything the solvers need, with the microwave frequency factored out."""

    config: object
    params: NVParameters
    scheme: object
    rabi: np.ndarray
    emission_rates: np.ndarray
    q_weights: np.ndarray
    far_field_scale: float
    channels: list
    l0: np.ndarray
    mw_diag: np.ndarray

    def liouvillian_at(self, omega_mw):
        if omega_mw == 0.0:
            return self.l0
        lw = self.l0.copy()
        dim2 = lw.shape[0]
        lw.flat[:: dim2 + 1] += omega_mw * self.mw_diag
        return lw

    def pl_of(self, rho):
        return self.far_field_scale * dynamics.pl_rate(
            rho, self.q_weights, self.emission_rates, self.scheme)

    def pl_trace(self, states):
        base = 3 * (self.scheme.n + 1)
        pops = np.real(states[:, [base, base + 1, base + 2],
                              [base, base + 1, base + 2]])
        w = np.sum(self.q_weights * self.emission_rates, axis=0)
        return self.far_field_scale * (pops @ w)

    def emission_sigma_indices(self):
        idx = self.scheme.index
        pairs = []
        for k in range(self.scheme.n + 1):
            for m in (+1, 0, -1):
                pairs.append((idx(f"g{k}", m), idx("e0", m)))
        return pairs


def assemble(cfg, intensity=None, b_mw=None, theta=None, photon_energy=None):
    """Build the solver-ready Assembly for a configuration.

    Keyword overrides exist for the sweep drivers: intensity (W/m^2),
    microwave field amplitude (T), particle angle theta (rad), and a
    pre-resolved photon energy to keep 'auto' from being re-derived per point.
    """
    if photon_energy is None:
        photon_energy = resolve_drive_energy(cfg)
    if intensity is None:
        intensity = cfg.drive.intensity
    if b_mw is None:
        b_mw = cfg.spin.microwave_field
    params = _nv_params(cfg, photon_energy, intensity, b_mw)
    scheme = build_level_scheme(params.n, params.vibronic)

    n = params.n
    n_b = params.drive.n_background
    mu = params.dipoles()
    e0 = params.drive.e0
    gamma_f = np.asarray(params.vibronic.gamma_f)
    omega_em = np.asarray(params.emission_energies()) / HBAR

    rabi_per_band = mu * e0 / (HBAR * params.drive.eps_eff_diamond)
    ratios = np.full(n + 1, n_b)
    q = np.ones(n + 1)

    pc = cfg.particle
    if pc is not None:
        if pc.radius >= pc.separation:
            raise ConfigError("particle.separation must exceed particle.radius "
                              "(centre-to-emitter distance)")
        table = _material_table(pc.material)
        eps_b = n_b**2
        omega_d = params.drive.omega_d

        def alpha_at(omega):
            eps = plasmonics.permittivity(table, omega)
            a_l = plasmonics.quasistatic_polarizability(eps, eps_b, pc.radius)
            return plasmonics.corrected_polarizability(
                a_l, wavenumber_in_medium(omega, n_b))

        alpha_d = alpha_at(omega_d)
        if theta is None and pc.orientation == "angle":
            theta = pc.theta
        if theta is not None:
            factor = plasmonics.angle_projected_rabi(theta, pc.separation, alpha_d)
        else:
            geom = plasmonics.CouplingGeometry(pc.separation, pc.orientation)
            factor = plasmonics.rabi_factor(geom, alpha_d)
        rabi_per_band = rabi_per_band * factor
        if pc.nonlinear_drive:
            geom_nl = plasmonics.CouplingGeometry(
                pc.separation,
                "radial" if theta is not None else pc.orientation)
            eta = np.array([plasmonics.nonlinear_rabi_coefficient(
                m_k, geom_nl, alpha_d, params.drive.eps_eff_diamond, eps_b)
                for m_k in mu])
            rabi_per_band = rabi_per_band + eta * e0**2

        ratios = np.empty(n + 1)
        nr = np.empty(n + 1)
        for k in range(n + 1):
            a_k = alpha_at(omega_em[k])
            if theta is not None:
                ratios[k] = plasmonics.mixed_decay_rate_ratio(
                    theta, omega_em[k], pc.separation, a_k, n_b)
                nr[k] = plasmonics.mixed_nonradiative_rate_ratio(
                    theta, omega_em[k], pc.separation, a_k, n_b)
            else:
                ratios[k] = plasmonics.decay_rate_ratio(
                    pc.orientation, omega_em[k], pc.separation, a_k, n_b)
                nr[k] = plasmonics.nonradiative_rate_ratio(
                    pc.orientation, omega_em[k], pc.separation, a_k, n_b)
        if pc.band_efficiency:
            q = np.array([plasmonics.relative_quantum_efficiency(ratios[k], nr[k])
                          for k in range(n + 1)])

    emission_rates = np.repeat((ratios * gamma_f)[:, None], 3, axis=1)
    q_weights = np.repeat(q[:, None], 3, axis=1)
    rabi = np.broadcast_to(rabi_per_band[None, :, None], (2, n + 1, 3)).astype(complex)

    channels = dynamics.build_collapse_channels(scheme, params, emission_rates)
    h0 = dynamics.build_hamiltonian(scheme, params, rabi, omega_mw=0.0)
    l0 = dynamics.liouvillian(h0, channels)
    mw_diag = dynamics.mw_detuning_diagonal(scheme)
    far_scale = 1.0 if pc is None else pc.far_field_scale
    return Assembly(config=cfg, params=params, scheme=scheme, rabi=rabi,
                    emission_rates=emission_rates, q_weights=q_weights,
                    far_field_scale=far_scale, channels=channels, l0=l0,
                    mw_diag=mw_diag)


def reference_config(cfg, photon_energy):
    """Same NV, no particle, vacuum host, at the given (already resolved) drive."""
    return replace(cfg, particle=None,
                   drive=replace(cfg.drive, photon_energy=photon_energy,
                                 background_index=1.0))


@dataclass(frozen=True)
class OdmrCurve:
    freq_hz: np.ndarray
    pl: np.ndarray


def odmr_sweep(assembly, freqs=None, threads=1):
    """Steady-state PL against microwave frequency (Hz)."""
    if freqs is None:
        grid = assembly.config.experiment.odmr
        freqs = np.linspace(grid.start, grid.stop, grid.points)
    freqs = np.asarray(freqs, dtype=float)

    def point(f):
        lw = assembly.liouvillian_at(2.0 * np.pi * f)
        return assembly.pl_of(dynamics.steady_state(lw))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pl = np.fromiter(pool.map(point, freqs), dtype=float, count=freqs.size)
    else:
        pl = np.fromiter((point(f) for f in freqs), dtype=float, count=freqs.size)
    return OdmrCurve(freq_hz=freqs, pl=pl)


@dataclass(frozen=True)
class FiguresOfMerit:
    baseline: float
    depth: float
    contrast: float
    center_hz: float
    fwhm_hz: float
    sensitivity: float
    baseline_enhancement: float = None
    depth_enhancement: float = None


def _interp_crossing(f, pl, i_from, i_to, level):
    step = 1 if i_to > i_from else -1
    for i in range(i_from, i_to, step):
        a, b = pl[i], pl[i + step]
        if (a - level) * (b - level) <= 0 and a != b:
            t = (level - a) / (b - a)
            return f[i] + t * (f[i + step] - f[i])
    return None


def _dip_width(freq, pl, baseline, i_min):
    level = baseline - 0.5 * (baseline - pl[i_min])
    left = _interp_crossing(freq, pl, i_min, 0, level)
    right = _interp_crossing(freq, pl, i_min, len(pl) - 1, level)
    if left is None or right is None:
        return None
    return right - left


def fit_lorentzian_dip(freq, pl, baseline):
    """(center_hz, fwhm_hz, depth) of the deepest dip in a PL curve.

    Fits b - d w^2 / ((f - f0)^2 + w^2) around the minimum; if the fit does
    not converge the linearly interpolated full width at half depth stands in.
    """
    freq = np.asarray(freq, dtype=float)
    pl = np.asarray(pl, dtype=float)
    i_min = int(np.argmin(pl))
    depth = baseline - float(pl[i_min])
    if depth <= 0 or depth < 1e-9 * baseline:
        raise NoResonanceError("no resonance dip found on the sweep grid")

    width_est = _dip_width(freq, pl, baseline, i_min)
    if width_est is None:
        width_est = (freq[-1] - freq[0]) / 10.0

    def model(f, b, d, f0, w):
        return b - d * w**2 / ((f - f0) ** 2 + w**2)

    mask = np.abs(freq - freq[i_min]) <= 1.5 * width_est
    if np.count_nonzero(mask) < 5:
        mask = np.abs(freq - freq[i_min]) <= 3.0 * width_est
    fwhm = width_est
    center = float(freq[i_min])
    try:
        popt, _ = sopt.curve_fit(
            model, freq[mask], pl[mask],
            p0=(baseline, depth, freq[i_min], width_est / 2.0), maxfev=5000)
        w_fit = abs(popt[3])
        if 0 < 2 * w_fit < (freq[-1] - freq[0]):
            fwhm = 2.0 * w_fit
            center = float(popt[2])
    except (RuntimeError, ValueError):
        pass
    return center, fwhm, depth


def odmr_figures_of_merit(curve, reference=None):
    """Baseline, dip depth, contrast, linewidth, and DC field sensitivity.

    Baseline is the mean PL over the outer 10 percent of the grid at both
    ends; depth is baseline minus the global minimum.
    """
    freq = np.asarray(curve.freq_hz, dtype=float)
    pl = np.asarray(curve.pl, dtype=float)
    n = freq.size
    edge = max(1, int(round(0.1 * n)))
    baseline = float(np.mean(np.concatenate([pl[:edge], pl[-edge:]])))
    center, fwhm, depth = fit_lorentzian_dip(freq, pl, baseline)
    contrast = depth / baseline
    sens = dc_sensitivity(contrast, fwhm, baseline)
    base_enh = depth_enh = None
    if reference is not None:
        ref = odmr_figures_of_merit(reference)
        base_enh = baseline / ref.baseline
        depth_enh = depth / ref.depth
    return FiguresOfMerit(baseline=baseline, depth=depth, contrast=contrast,
                          center_hz=center, fwhm_hz=fwhm, sensitivity=sens,
                          baseline_enhancement=base_enh,
                          depth_enhancement=depth_enh)


def dc_sensitivity(contrast, fwhm_hz, pl_rate_max):
    """Shot-noise DC magnetic sensitivity, T / sqrt(Hz).

    PL enters as a photon rate; treating the model emission rate as the
    detected count rate makes this an idealised unit-collection figure.
    """
    if contrast <= 0 or pl_rate_max <= 0:
        raise NoResonanceError("sensitivity undefined without a dip and PL")
    return (4.0 / (3.0 * np.sqrt(3.0))) * H_PLANCK * fwhm_hz / (
        G_LANDE * MU_BOHR * contrast * np.sqrt(pl_rate_max))


@dataclass(frozen=True)
class TimeTrace:
    t: np.ndarray
    pl_zero: np.ndarray
    pl_pm1: np.ndarray
    delta: np.ndarray
    pl_ss: float
    stabilization_zero: float
    stabilization_pm1: float
    contrast_area: float


def initial_state(scheme, kind):
    """Spin-selected ground-orbital initial density matrices."""
    rho = np.zeros((scheme.dim, scheme.dim), dtype=complex)
    if kind == "zero":
        rho[scheme.index("g0", 0), scheme.index("g0", 0)] = 1.0
    elif kind == "pm1":
        rho[scheme.index("g0", +1), scheme.index("g0", +1)] = 0.5
        rho[scheme.index("g0", -1), scheme.index("g0", -1)] = 0.5
    elif kind == "plus1":
        rho[scheme.index("g0", +1), scheme.index("g0", +1)] = 1.0
    elif kind == "minus1":
        rho[scheme.index("g0", -1), scheme.index("g0", -1)] = 1.0
    else:
        raise ConfigError(f"unknown initial state {kind!r}")
    return rho


def _stabilization_time(t, pl, pl_ss, threshold=0.01):
    dev = np.abs(pl - pl_ss) / pl_ss
    out = np.nonzero(dev > threshold)[0]
    if out.size == 0:
        return float(t[0])
    j = out[-1]
    if j + 1 >= t.size:
        raise WindowError(
            "trace window ends before the PL settles within 1 percent; "
            "extend experiment.trace.t_max")
    return float(t[j + 1])


def time_domain_readout(cfg, t_grid=None, assembly=None):
    """Optical readout transients from spin 0 versus the +-1 mixture.

    The microwave drive is off during readout unless experiment.trace.microwave
    is set.  Returns PL(t) for both initialisations, their difference, the
    integrated readout contrast, the steady PL, and per-initialisation
    stabilization times (first time after which PL stays within 1 percent of
    the steady value).
    """
    trace_cfg = cfg.experiment.trace
    if assembly is None:
        b_mw = cfg.spin.microwave_field if trace_cfg.microwave else 0.0
        assembly = assemble(cfg, b_mw=b_mw)
    if t_grid is None:
        t_grid = np.linspace(0.0, trace_cfg.t_max, trace_cfg.points)
    omega_mw = assembly.params.spin.omega_mw if trace_cfg.microwave else 0.0
    l_op = assembly.liouvillian_at(omega_mw)

    states = {}
    for kind in ("zero", "pm1"):
        rho0 = initial_state(assembly.scheme, kind)
        states[kind] = dynamics.evolve(rho0, l_op, t_grid)
    pl_zero = assembly.pl_trace(states["zero"])
    pl_pm1 = assembly.pl_trace(states["pm1"])
    delta = pl_zero - pl_pm1
    pl_ss = assembly.pl_of(dynamics.steady_state(l_op))
    return TimeTrace(
        t=np.asarray(t_grid, dtype=float), pl_zero=pl_zero, pl_pm1=pl_pm1,
        delta=delta, pl_ss=pl_ss,
        stabilization_zero=_stabilization_time(t_grid, pl_zero, pl_ss),
        stabilization_pm1=_stabilization_time(t_grid, pl_pm1, pl_ss),
        contrast_area=float(np.trapezoid(delta, t_grid)))


def emission_experiment(cfg, energy_grid=None, mode=None, assembly=None):
    """Emission spectrum over lab-frame photon energy (J).

    Far-field mode weighs each band by its collection efficiency and applies
    the flat far-field scale; near-field mode counts every emitted photon.
    """
    if assembly is None:
        assembly = assemble(cfg)
    spec_cfg = cfg.experiment.spectrum
    if energy_grid is None:
        energy_grid = np.linspace(spec_cfg.start, spec_cfg.stop, spec_cfg.points)
    if mode is None:
        mode = spec_cfg.mode

    l_op = assembly.liouvillian_at(assembly.params.spin.omega_mw)
    rho_ss = dynamics.steady_state(l_op)
    pairs = assembly.emission_sigma_indices()
    gamma_flat = assembly.emission_rates.reshape(-1)
    if mode == "far":
        weights = (assembly.q_weights.reshape(-1) * gamma_flat
                   * assembly.far_field_scale)
    elif mode == "near":
        weights = gamma_flat
    else:
        raise ConfigError(f"spectrum mode {mode!r} not one of far/near")
    intensity = dynamics.emission_spectrum(
        l_op, pairs, weights, rho_ss, energy_grid,
        assembly.params.drive.omega_d, assembly.params.drive.gamma_star)
    return np.asarray(energy_grid, dtype=float), intensity


@dataclass(frozen=True)
class SweepPoint:
    intensity: float
    fom: FiguresOfMerit
    reference_pl: float
    error: str = None


def intensity_sweep(cfg, intensities=None, threads=1):
    """ODMR figures of merit against drive intensity, with per-point reference.

    A failing point (solver or config) is recorded with its message instead of
    aborting the remaining grid.
    """
    if intensities is None:
        intensities = cfg.experiment.sweep.intensities
    photon_energy = resolve_drive_energy(cfg)
    ref_cfg = reference_config(cfg, photon_energy)
    rows = []
    for inten in intensities:
        try:
            asm = assemble(cfg, intensity=inten, photon_energy=photon_energy)
            ref = assemble(ref_cfg, intensity=inten, photon_energy=photon_energy)
            curve = odmr_sweep(asm, threads=threads)
            ref_curve = odmr_sweep(ref, threads=threads)
            fom = odmr_figures_of_merit(curve, reference=ref_curve)
            rows.append(SweepPoint(intensity=float(inten), fom=fom,
                                   reference_pl=float(np.mean(ref_curve.pl))))
        except (SolverError, ConfigError) as exc:
            rows.append(SweepPoint(intensity=float(inten), fom=None,
                                   reference_pl=float("nan"), error=str(exc)))
    return rows


def angle_scan(cfg, thetas=None):
    """Steady far-field PL against particle angle theta (rad)."""
    if cfg.particle is None:
        raise ConfigError("angle scan needs a particle block")
    if thetas is None:
        thetas = np.linspace(0.0, np.pi / 2.0, cfg.experiment.angles.points)
    photon_energy = resolve_drive_energy(cfg)
    pl = np.empty(len(thetas))
    for i, theta in enumerate(thetas):
        asm = assemble(cfg, theta=float(theta), photon_energy=photon_energy)
        l_op = asm.liouvillian_at(asm.params.spin.omega_mw)
        pl[i] = asm.pl_of(dynamics.steady_state(l_op))
    return np.asarray(thetas, dtype=float), pl
