"""Spin readout transients: how fast the PL difference develops and dies.

Optical readout distinguishes m = 0 from m = +-1 through the intersystem
crossing: a spin prepared in |0> fluoresces brightly and settles from above,
|+-1> dips while the singlet shelf fills, and both converge to the same
steady PL once optical pumping has erased the initial spin.  The integrated
|PL_0 - PL_pm1| transient is the total signal one readout shot can collect.
Near the silver sphere everything brightens and accelerates; the integrated
contrast still comes out ahead.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from nvps import (parse_config, reference_config, resolve_drive_energy,
                  time_domain_readout)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = parse_config({
    "spin": {"static_field": "4.4 mT"},
    "drive": {"photon_energy": "auto", "intensity": "1.0 mW/um^2",
              "background_index": 5.885 ** 0.5},
    "particle": {"material": "Ag", "radius": "10 nm", "separation": "20 nm",
                 "orientation": "radial"},
})
photon = resolve_drive_energy(cfg)
ref_cfg = reference_config(cfg, photon)

t_grid = np.linspace(0.0, 20e-6, 1001)
print("evolving enhanced traces ...")
enhanced = time_domain_readout(cfg, t_grid=t_grid)
print("evolving free-space traces ...")
reference = time_domain_readout(ref_cfg, t_grid=t_grid)

print()
print(f"steady PL enhancement      : "
      f"{enhanced.pl_ss / reference.pl_ss:.1f}x")
print(f"contrast-area enhancement  : "
      f"{enhanced.contrast_area / reference.contrast_area:.2f}x")
print(f"stabilization (enhanced)   : "
      f"{max(enhanced.stabilization_zero, enhanced.stabilization_pm1) * 1e6:.2f} us")
print(f"stabilization (reference)  : "
      f"{max(reference.stabilization_zero, reference.stabilization_pm1) * 1e6:.2f} us")

fig, axes = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)
for ax, tr, title in ((axes[0], enhanced, "with silver sphere"),
                      (axes[1], reference, "free space")):
    ax.plot(tr.t * 1e6, tr.pl_zero, lw=1.2, label="init $|0\\rangle$")
    ax.plot(tr.t * 1e6, tr.pl_pm1, lw=1.2, label="init $|\\pm 1\\rangle$")
    ax.axhline(tr.pl_ss, color="0.6", ls=":", lw=0.8)
    ax.set_ylabel("PL rate (1/s)")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
axes[1].set_xlabel("time ($\\mu$s)")
axes[1].set_xlim(0, 8)
fig.tight_layout()
fig.savefig(OUT / "time_domain_readout.png", dpi=160)
print(f"\nwrote {OUT / 'time_domain_readout.png'}")
