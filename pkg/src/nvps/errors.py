"""Exception taxonomy shared across the package.

ConfigError covers anything traceable to user input (bad units, unknown keys,
out-of-range values); SolverError covers numerical failures in the dynamics
layer.  The CLI maps these onto exit codes 2 and 3.
"""


class ConfigError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


class NoResonanceError(SolverError):
    """ODMR analysis found no dip to fit on the sweep grid."""


class DegenerateSteadyStateError(SolverError):
    """Liouvillian kernel has dimension > 1; caller must disambiguate."""


class WindowError(SolverError):
    """A requested time/correlation window is too short to converge."""
