"""Emission spectrum of the driven NV: zero-phonon line and phonon sidebands.

The two-time dipole correlator of the steady state, Fourier transformed, gives
the emitted spectrum.  The vibronic ground-state ladder shows up as a comb of
phonon sidebands below the 1.941 eV zero-phonon line.  Next to the silver
sphere, each band is emitted faster (near field) but only the far-field part
survives absorption in the metal; plotting both shows where the photons go.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvps import assemble, emission_experiment, parse_config
from nvps.constants import EV

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = parse_config({
    "drive": {"photon_energy": "auto", "intensity": "0.1 mW/um^2",
              "background_index": 5.885 ** 0.5},
    "particle": {"material": "Ag", "radius": "10 nm", "separation": "20 nm",
                 "orientation": "radial"},
})

grid = np.linspace(1.55, 2.05, 501) * EV
print("assembling and computing correlators (near field) ...")
asm = assemble(cfg)
_, near = emission_experiment(cfg, energy_grid=grid, mode="near", assembly=asm)
print("far field ...")
_, far = emission_experiment(cfg, energy_grid=grid, mode="far", assembly=asm)

fig, ax = plt.subplots(figsize=(6.4, 4.2))
ax.plot(grid / EV, near / near.max(), lw=1.1, label="emitted (near field)")
ax.plot(grid / EV, far / near.max(), lw=1.1, label="detected (far field)")
ax.axvline(1.941, color="0.6", ls="--", lw=0.8)
ax.annotate("ZPL", xy=(1.941, 1.0), xytext=(1.96, 0.9), fontsize=8)
ax.set_xlabel("photon energy (eV)")
ax.set_ylabel("spectral density (normalized)")
ax.legend(fontsize=8)
ax.set_title("NV emission next to the silver sphere")
fig.tight_layout()
fig.savefig(OUT / "emission_spectrum.png", dpi=160)
print(f"wrote {OUT / 'emission_spectrum.png'}")

survived = np.trapezoid(far, grid) / np.trapezoid(near, grid)
print(f"fraction of emission surviving to the far field: {survived:.2f}")
