"""Level structure, parameter containers, and basis conventions of the NV- model.

The Hilbert space is (n+3) orbital levels, each a spin triplet, plus two spin
singlets: orbitals g_0..g_n (ground vibronic ladder), e_0 (at the zero-phonon
line) and e_1 (effective upper level resonant with the drive).  The basis is
orbital-major with spin order (+1, 0, -1) inside each triplet, singlets s_1,
s_0 last, so dim = 3(n+3) + 2.
"""

import csv
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .constants import DEBYE, EV, EPS0, C_LIGHT, G_LANDE, HBAR, MU_BOHR
from .errors import ConfigError

SPIN_OFFSET = {+1: 0, 0: 1, -1: 2}
SPINS = (+1, 0, -1)


def data_path(name):
    """Resolve a bundled data file, honouring the NVPS_DATA_DIR override."""
    override = os.environ.get("NVPS_DATA_DIR")
    if override:
        candidate = Path(override) / name
        if candidate.exists():
            return candidate
    return Path(str(resources.files("nvps").joinpath("data", name)))


@dataclass(frozen=True)
class VibronicTable:
    """Ground-state vibronic ladder: band energies and rates, index k = 0..n.

    Attributes
    ----------
    energies : tuple of float
        Phonon energies hbar*omega_k in J; energies[0] == 0.
    gamma_f : tuple of float
        Free-space optical emission rate of band k, 1/s.
    gamma_vib : tuple of float
        Vibronic relaxation rate k -> k-1, 1/s; gamma_vib[0] is unused (nan).
    """

    energies: tuple
    gamma_f: tuple
    gamma_vib: tuple

    def __post_init__(self):
        n = len(self.energies) - 1
        if len(self.gamma_f) != n + 1 or len(self.gamma_vib) != n + 1:
            raise ConfigError("vibronic table columns have inconsistent lengths")
        if self.energies[0] != 0.0:
            raise ConfigError("vibronic band 0 must sit at zero energy")
        if any(b <= a for a, b in zip(self.energies, self.energies[1:])):
            raise ConfigError("vibronic band energies must increase with k")
        if any(g <= 0 for g in self.gamma_f):
            raise ConfigError("free-space emission rates must be positive")
        if any(g <= 0 for g in self.gamma_vib[1:]):
            raise ConfigError("vibronic relaxation rates must be positive")

    @property
    def n(self):
        return len(self.energies) - 1

    @classmethod
    def from_csv(cls, path):
        energies, gamma_f, gamma_vib = [], [], []
        with open(path, newline="") as f:
            reader = csv.DictReader(row for row in f if not row.startswith("#"))
            for i, row in enumerate(reader):
                if int(row["k"]) != i:
                    raise ConfigError(f"{path}: k column must run 0..n in order")
                energies.append(float(row["energy_meV"]) * 1e-3 * EV)
                gamma_f.append(float(row["gamma_f_MHz"]) * 1e6)
                raw = (row["gamma_vib_THz"] or "").strip()
                if i == 0:
                    gamma_vib.append(float("nan"))
                    if raw:
                        raise ConfigError(f"{path}: band 0 cannot have a vibronic rate")
                else:
                    if not raw:
                        raise ConfigError(f"{path}: band {i} is missing its vibronic rate")
                    gamma_vib.append(float(raw) * 1e12)
        return cls(tuple(energies), tuple(gamma_f), tuple(gamma_vib))

    @classmethod
    def default(cls):
        return cls.from_csv(data_path("nv_vibronic.csv"))


@dataclass(frozen=True)
class SpinParameters:
    """Spin-manifold parameters: splittings, fields, relaxation and dephasing.

    d_gs/d_es are the axial zero-field splittings in Hz (cyclic), b_nv the
    static field along the NV axis in T, b_mw the microwave amplitude
    transverse to it, omega_mw the microwave angular frequency in rad/s.
    """

    d_gs: float = 2.87e9
    d_es: float = 1.42e9
    b_nv: float = 0.0
    b_mw: float = 0.0
    omega_mw: float = 0.0
    gamma_rel_g: float = 1.0 / 7.7e-3
    gamma_rel_e: float = 1.0 / 1.0e-3
    gamma_star_g: float = 1.0 / 6.7e-6
    gamma_star_e: float = 1.0 / 10e-9

    def __post_init__(self):
        if not self.d_gs > self.d_es > 0:
            raise ConfigError("zero-field splittings must satisfy d_gs > d_es > 0")
        for name in ("gamma_rel_g", "gamma_rel_e", "gamma_star_g", "gamma_star_e"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")

    @property
    def rabi_mw(self):
        """Spin Rabi frequency g mu_B B_mw / (hbar sqrt(2)), rad/s."""
        return G_LANDE * MU_BOHR * self.b_mw / (HBAR * np.sqrt(2.0))


@dataclass(frozen=True)
class ISCParameters:
    """Intersystem-crossing rates (Hz) and singlet energy gaps (J)."""

    gamma_es_pm1: float = 92e6
    gamma_es_0: float = 11.4e6
    gamma_sg_pm1: float = 2.35e6
    gamma_sg_0: float = 4.84e6
    gamma_s: float = 1e9
    e_gap_singlet: float = 1.19 * EV
    e_gap_es: float = 0.40 * EV

    def __post_init__(self):
        if not self.gamma_es_pm1 > self.gamma_es_0:
            raise ConfigError("ISC into the singlets must be stronger from |+-1>")
        if not self.gamma_sg_0 > self.gamma_sg_pm1:
            raise ConfigError("ISC back to the ground state must favour |0>")


@dataclass(frozen=True)
class OpticalDrive:
    """Optical drive and emitter optics: energies in J, rates in Hz.

    e0 is the positive-frequency field amplitude for E = e0 exp(-i w_d t)+c.c.
    """

    photon_energy: float
    intensity: float
    e0: float
    zpl_energy: float = 1.941 * EV
    gamma_star: float = 15e12
    gamma_e: float = 1434e12
    mu0: float = 5.2 * DEBYE
    n_diamond: float = 2.4
    n_background: float = 1.0

    def __post_init__(self):
        if self.photon_energy <= self.zpl_energy:
            raise ConfigError("drive photon energy must sit above the zero-phonon line")
        if self.e0 < 0:
            raise ConfigError("field amplitude cannot be negative")

    @property
    def eps_background(self):
        return self.n_background**2

    @property
    def eps_eff_diamond(self):
        """Screening factor (2 eps_b + eps_D) / (3 eps_b) of the diamond host."""
        eps_b = self.eps_background
        return (2.0 * eps_b + self.n_diamond**2) / (3.0 * eps_b)

    @property
    def omega_d(self):
        return self.photon_energy / HBAR

    @property
    def omega_z(self):
        return self.zpl_energy / HBAR


@dataclass(frozen=True)
class LevelScheme:
    """Basis layout for n excited ground-vibronic levels: dim = 3n + 11."""

    n: int
    orbitals: tuple = field(init=False)

    def __post_init__(self):
        if self.n < 0:
            raise ConfigError("n must be nonnegative")
        labels = tuple(f"g{k}" for k in range(self.n + 1)) + ("e0", "e1")
        object.__setattr__(self, "orbitals", labels)

    @property
    def dim(self):
        return 3 * self.n + 11

    @property
    def index_s1(self):
        return 3 * (self.n + 3)

    @property
    def index_s0(self):
        return 3 * (self.n + 3) + 1

    def index(self, level, spin=None):
        """Basis index of an orbital-spin pair, or of a singlet.

        Triplet labels ('g0'..'gn', 'e0', 'e1') require spin in {+1, 0, -1};
        singlet labels ('s1', 's0') take none.
        """
        if level == "s1" or level == "s0":
            if spin is not None:
                raise ConfigError(f"singlet {level} carries no spin quantum number")
            return self.index_s1 if level == "s1" else self.index_s0
        try:
            orb = self.orbitals.index(level)
        except ValueError:
            raise ConfigError(f"unknown level label {level!r}") from None
        if spin not in SPIN_OFFSET:
            raise ConfigError(f"triplet {level} needs spin +1, 0 or -1, got {spin!r}")
        return 3 * orb + SPIN_OFFSET[spin]

    def label(self, index):
        """Inverse of index(): returns (level, spin) with spin None for singlets."""
        if not 0 <= index < self.dim:
            raise ConfigError(f"basis index {index} outside 0..{self.dim - 1}")
        if index == self.index_s1:
            return ("s1", None)
        if index == self.index_s0:
            return ("s0", None)
        orb, off = divmod(index, 3)
        return (self.orbitals[orb], SPINS[off])

    def triplet_indices(self, level):
        base = 3 * self.orbitals.index(level)
        return (base, base + 1, base + 2)


def build_level_scheme(n, table):
    """Construct the basis layout and check it against the vibronic table."""
    if n < 0:
        raise ConfigError("n must be nonnegative")
    if table.n != n:
        raise ConfigError(f"vibronic table has {table.n + 1} rows, expected {n + 1}")
    return LevelScheme(n)


def basis_index(scheme, level, spin=None):
    return scheme.index(level, spin)


def dipole_moment(k, table, mu0):
    """Transition dipole of band k in C m, scaled so gamma_f ~ |mu_k|^2."""
    if not 0 <= k <= table.n:
        raise ConfigError(f"band index {k} outside 0..{table.n}")
    return mu0 * np.sqrt(table.gamma_f[k] / table.gamma_f[0])


def zeeman_frequencies(p: SpinParameters):
    """Angular eigenfrequencies (w_g+1, w_g-1, w_e+1, w_e-1) of |+-1>, rad/s."""
    shift = G_LANDE * MU_BOHR * p.b_nv / HBAR
    wg = 2.0 * np.pi * p.d_gs
    we = 2.0 * np.pi * p.d_es
    return (wg + shift, wg - shift, we + shift, we - shift)


def field_amplitude_from_intensity(intensity, n_b):
    """Positive-frequency amplitude E_0 (V/m) from cycle-averaged intensity.

    Uses I = 2 n_b eps_0 c E_0^2, the Poynting flux of
    E = E_0 exp(-i w t) + c.c. in a medium of index n_b.
    """
    if intensity < 0:
        raise ConfigError("intensity cannot be negative")
    return float(np.sqrt(intensity / (2.0 * n_b * EPS0 * C_LIGHT)))


@dataclass(frozen=True)
class NVParameters:
    """Aggregate of every table the dynamics layer consumes."""

    vibronic: VibronicTable
    spin: SpinParameters
    isc: ISCParameters
    drive: OpticalDrive

    @property
    def n(self):
        return self.vibronic.n

    def dipoles(self):
        """mu_k for every band, C m."""
        return np.array([dipole_moment(k, self.vibronic, self.drive.mu0)
                         for k in range(self.n + 1)])

    def emission_energies(self):
        """Photon energy of band k emission, hbar(w_z - w_k), J."""
        return self.drive.zpl_energy - np.asarray(self.vibronic.energies)
