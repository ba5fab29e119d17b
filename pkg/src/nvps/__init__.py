"""Spin-resolved simulations of an optically driven defect centre coupled to a
plasmonic nanoparticle: ODMR spectra, time-domain readout, emission spectra,
and magnetometry figures of merit."""

__version__ = "0.1.0"

from .config import RunConfig, parse_config, serialize, to_mapping
from .core import (ISCParameters, LevelScheme, NVParameters, OpticalDrive,
                   SpinParameters, VibronicTable, basis_index,
                   build_level_scheme, dipole_moment,
                   field_amplitude_from_intensity, zeeman_frequencies)
from .dynamics import (CollapseChannel, build_collapse_channels,
                       build_hamiltonian, emission_spectrum, evolve,
                       liouvillian, pl_rate, steady_state)
from .errors import (ConfigError, DegenerateSteadyStateError, NoResonanceError,
                     SolverError, WindowError)
from .experiments import (Assembly, FiguresOfMerit, OdmrCurve, TimeTrace,
                          angle_scan, assemble, dc_sensitivity,
                          emission_experiment, intensity_sweep,
                          odmr_figures_of_merit, odmr_sweep, reference_config,
                          resolve_drive_energy, time_domain_readout)
from .plasmonics import (CouplingGeometry, MaterialTable, angle_projected_rabi,
                         corrected_polarizability, decay_rate_ratio,
                         nonlinear_rabi_coefficient, nonradiative_rate_ratio,
                         permittivity, plasmon_peak_energy,
                         quasistatic_polarizability, rabi_factor,
                         relative_quantum_efficiency)

__all__ = [name for name in dir() if not name.startswith("_")]
