"""Nanoparticle response: polarizability, field factors, and decay-rate ratios.

Everything here is classical electrodynamics of a small sphere in the dipole
approximation.  The emitter-side functions take the polarizability already
evaluated at the relevant frequency, so drive-frequency and emission-frequency
physics share one code path.
"""

from dataclasses import dataclass

import numpy as np

from .constants import EV, HBAR, ev_to_angular, joule_to_ev, wavenumber_in_medium
from .core import data_path
from .errors import ConfigError, SolverError

_BUNDLED = {"Ag": "permittivity_ag.csv", "Au": "permittivity_au.csv"}


@dataclass(frozen=True)
class MaterialTable:
    """Tabulated relative permittivity versus photon energy (eV)."""

    name: str
    energies_ev: tuple
    eps: tuple

    def __post_init__(self):
        e = np.asarray(self.energies_ev, dtype=float)
        if e.size < 2 or np.any(np.diff(e) <= 0):
            raise ConfigError("permittivity table needs at least two strictly "
                              "increasing energies")

    @classmethod
    def from_csv(cls, path, name=None):
        body = [ln for ln in open(path, encoding="utf-8")
                if ln.strip() and not ln.lstrip().startswith("#")]
        if not body or not body[0].lower().startswith("energy"):
            raise ConfigError(f"{path}: expected an energy_eV,eps_real,eps_imag header")
        rows = np.loadtxt(body[1:], delimiter=",", ndmin=2)
        if rows.shape[1] != 3:
            raise ConfigError(f"{path}: expected columns energy_eV,eps_real,eps_imag")
        return cls(name=name or str(path),
                   energies_ev=tuple(rows[:, 0]),
                   eps=tuple(rows[:, 1] + 1j * rows[:, 2]))

    @classmethod
    def bundled(cls, name):
        try:
            fname = _BUNDLED[name]
        except KeyError:
            raise ConfigError(
                f"unknown material {name!r}; bundled: {sorted(_BUNDLED)}") from None
        return cls.from_csv(data_path(fname), name=name)


def permittivity(table, omega):
    """Linear interpolation of the complex permittivity at angular frequency omega.

    Raises outside the tabulated range rather than extrapolating; metal optical
    constants do nothing polite off the ends of a measurement.
    """
    e_ev = np.asarray(joule_to_ev(HBAR * np.asarray(omega, dtype=float)))
    lo, hi = table.energies_ev[0], table.energies_ev[-1]
    if np.any(e_ev < lo) or np.any(e_ev > hi):
        raise ConfigError(
            f"photon energy {float(np.min(e_ev)):.3f}-{float(np.max(e_ev)):.3f} eV "
            f"outside {table.name} table range [{lo:.2f}, {hi:.2f}] eV")
    grid = np.asarray(table.energies_ev)
    eps = np.asarray(table.eps)
    out = np.interp(e_ev, grid, eps.real) + 1j * np.interp(e_ev, grid, eps.imag)
    return out if out.ndim else complex(out)


def quasistatic_polarizability(eps_m, eps_b, radius):
    """Small-sphere polarizability r^3 (eps_m - eps_b) / (eps_m + 2 eps_b), in m^3."""
    eps_m = np.asarray(eps_m, dtype=complex)
    denom = eps_m + 2.0 * eps_b
    if np.any(np.abs(denom) < 1e-9 * (np.abs(eps_m) + 2.0 * abs(eps_b))):
        raise SolverError("permittivity sits on the quasistatic resonance pole; "
                          "the dipole model is undefined there")
    out = radius**3 * (eps_m - eps_b) / denom
    return out if out.ndim else complex(out)


def corrected_polarizability(alpha_l, k_b):
    """Radiative-reaction corrected polarizability alpha_L / (1 - 2i k^3 alpha_L / 3)."""
    alpha_l = np.asarray(alpha_l, dtype=complex)
    out = alpha_l / (1.0 - (2.0j / 3.0) * np.asarray(k_b) ** 3 * alpha_l)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class CouplingGeometry:
    """Emitter-particle arrangement: centre distance and dipole orientation.

    orientation 'radial' points the NV dipole along the joining axis (field
    factor +2 alpha / R^3), 'tangential' across it (-1 alpha / R^3), 'angle'
    interpolates via theta with theta = pi/2 the radial limit.
    """

    separation: float
    orientation: str = "radial"
    theta: float = None

    def __post_init__(self):
        if self.separation <= 0:
            raise ConfigError("separation must be positive")
        if self.orientation not in ("radial", "tangential", "angle"):
            raise ConfigError(f"orientation {self.orientation!r} not one of "
                              "radial/tangential/angle")
        if self.orientation == "angle" and self.theta is None:
            raise ConfigError("orientation 'angle' requires theta")

    @property
    def s_alpha(self):
        return {"radial": 2.0, "tangential": -1.0}[self.orientation]


def rabi_factor(geometry, alpha):
    """Complex drive-field factor F = 1 + s_alpha * alpha / R^3 at the emitter."""
    return 1.0 + geometry.s_alpha * alpha / geometry.separation**3


def angle_projected_rabi(theta, separation, alpha):
    """Drive factor when the particle sits at angle theta off the polarization.

    The external field is polarized along the emitter-particle axis at
    theta = pi/2; its projection onto that axis induces the sphere dipole, and
    the same projection applies to the field reaching the emitter, so only the
    radial (+2 alpha / R^3) response survives and the whole factor rides on
    sin(theta).  At theta = 0 the emitter sees no drive at all.
    """
    return np.sin(theta) * (1.0 + 2.0 * alpha / separation**3)


def nonlinear_rabi_coefficient(mu_k, geometry, alpha, eps_eff_d, eps_b):
    """Quadratic field coefficient eta of the emitter-fed-back drive, in
    rad/s per (V/m)^2.  Off by default in the model; exposed for the
    second-order drive correction Omega = Omega_lin + eta E0^2."""
    from .constants import EPS0

    return (mu_k * geometry.s_alpha**2 * alpha
            / (HBAR * 4.0 * np.pi * EPS0 * eps_b * eps_eff_d**2
               * geometry.separation**6))


def decay_rate_ratio(orientation, omega, separation, alpha, n_b):
    """Total decay rate over the free-space rate, emitter beside a sphere.

    The exact dipole-plus-image-field expressions with all near- and far-field
    orders in x = k_b R; alpha must already be evaluated at omega.  As
    R -> infinity (or alpha -> 0) both orientations reduce to the bulk factor
    n_b.
    """
    k = wavenumber_in_medium(omega, n_b)
    x = k * separation
    phase = np.exp(2j * x)
    if orientation == "radial":
        series = -x**-4 - 2j * x**-5 + x**-6
        return n_b * (1.0 + 6.0 * k**3 * np.imag(alpha * phase * series))
    if orientation == "tangential":
        series = x**-2 + 2j * x**-3 - 3.0 * x**-4 - 2j * x**-5 + x**-6
        return n_b * (1.0 + 1.5 * k**3 * np.imag(alpha * phase * series))
    raise ConfigError(f"orientation {orientation!r} not one of radial/tangential")


def nonradiative_rate_ratio(orientation, omega, separation, alpha, n_b):
    """Absorbed (non-radiated) part of the decay rate over the free-space rate."""
    k = wavenumber_in_medium(omega, n_b)
    x = k * separation
    kernel = np.imag(alpha) - (2.0 / 3.0) * k**3 * np.abs(alpha) ** 2
    if orientation == "radial":
        return 6.0 * n_b * k**3 * kernel * (x**-6 + x**-4)
    if orientation == "tangential":
        return 1.5 * n_b * k**3 * kernel * (x**-6 - x**-4 + x**-2)
    raise ConfigError(f"orientation {orientation!r} not one of radial/tangential")


def relative_quantum_efficiency(gamma_ratio, gamma_nr_ratio):
    """Fraction of the emission that reaches the far field, (g - g_nr) / g."""
    if gamma_nr_ratio < -1e-12 or gamma_nr_ratio > gamma_ratio * (1 + 1e-9):
        raise SolverError(
            f"nonradiative rate {gamma_nr_ratio:.4e} outside [0, total {gamma_ratio:.4e}]; "
            "the dipole model broke down at this distance")
    q = (gamma_ratio - gamma_nr_ratio) / gamma_ratio
    return float(min(max(q, 0.0), 1.0))


def mixed_decay_rate_ratio(theta, omega, separation, alpha, n_b):
    """Emission-rate factor for a dipole at angle theta to the joining axis:
    sin^2(theta) radial + cos^2(theta) tangential projections."""
    st2 = np.sin(theta) ** 2
    return (st2 * decay_rate_ratio("radial", omega, separation, alpha, n_b)
            + (1.0 - st2) * decay_rate_ratio("tangential", omega, separation, alpha, n_b))


def mixed_nonradiative_rate_ratio(theta, omega, separation, alpha, n_b):
    st2 = np.sin(theta) ** 2
    return (st2 * nonradiative_rate_ratio("radial", omega, separation, alpha, n_b)
            + (1.0 - st2) * nonradiative_rate_ratio("tangential", omega, separation, alpha, n_b))


def plasmon_peak_energy(table, eps_b, radius, resolution_ev=2e-3):
    """Photon energy (J) maximising |corrected polarizability| over the table range.

    Used to resolve drive energy 'auto' in particle configs: illuminate at the
    dipolar plasmon resonance of the given sphere in the given host.
    """
    lo, hi = table.energies_ev[0], table.energies_ev[-1]
    grid_ev = np.arange(lo, hi + resolution_ev, resolution_ev)
    grid_ev = grid_ev[grid_ev <= hi]
    omega = ev_to_angular(grid_ev)
    eps = permittivity(table, omega)
    alpha_l = quasistatic_polarizability(eps, eps_b, radius)
    k = wavenumber_in_medium(omega, np.sqrt(eps_b))
    alpha = corrected_polarizability(alpha_l, k)
    return float(grid_ev[np.argmax(np.abs(alpha))]) * EV
