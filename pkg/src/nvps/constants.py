"""Physical constants and unit conversion helpers.

All internal arithmetic is SI (energies in J, angular frequencies in rad/s,
rates in 1/s, fields in V/m, lengths in m).  Configs and tables carry
human-scale units and are converted exactly once, on ingestion.
"""

import scipy.constants as _const

HBAR = _const.hbar                  # J s
H_PLANCK = _const.h                 # J s
EV = _const.e                       # J per eV
C_LIGHT = _const.c                  # m/s
EPS0 = _const.epsilon_0             # F/m
MU_BOHR = _const.value("Bohr magneton")     # J/T
DEBYE = 1e-21 / _const.c            # C m per Debye

# Lande factor of the NV electronic spin.
G_LANDE = 2.0


def ev_to_joule(e_ev):
    return e_ev * EV


def joule_to_ev(e_j):
    return e_j / EV


def ev_to_angular(e_ev):
    """Photon energy in eV to angular frequency in rad/s."""
    return e_ev * EV / HBAR


def angular_to_ev(omega):
    return omega * HBAR / EV


def wavenumber_in_medium(omega, n_b):
    """k_b = n_b * omega / c for a non-absorbing background of index n_b."""
    return n_b * omega / C_LIGHT
