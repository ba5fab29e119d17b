"""Rotating-frame Hamiltonian, collapse channels, and Liouvillian solvers.

Density matrices are column-stacked (Fortran order), so vec(A rho B) =
kron(B.T, A) vec(rho).  The Liouvillian is built dense; at the default model
size (dim 32, superoperator 1024 x 1024) direct factorisations beat any
iterative scheme and sidestep the 13-orders-of-magnitude rate stiffness.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .constants import HBAR
from .core import SPINS, NVParameters, zeeman_frequencies
from .errors import ConfigError, DegenerateSteadyStateError, SolverError, WindowError


def vec(rho):
    return rho.reshape(-1, order="F")


def unvec(v):
    d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d, order="F")


def trace_distance(a, b):
    w = np.linalg.eigvalsh(a - b)
    return 0.5 * float(np.sum(np.abs(w)))


@dataclass(frozen=True)
class CollapseChannel:
    """One Lindblad channel: rate (1/s), operator, and a taxonomy label."""

    rate: float
    op: np.ndarray
    label: str


def build_hamiltonian(scheme, params: NVParameters, rabi, omega_mw=None):
    """Rotating-frame Hamiltonian in J.

    Parameters
    ----------
    rabi : complex array, shape (2, n+1, 3)
        Optical Rabi frequencies (rad/s) of |e_j, m> <-> |g_k, m|, indexed
        (j, k, m) with the spin order (+1, 0, -1).  Plasmonic factors and
        screening are already folded in by the caller.
    omega_mw : float, optional
        Microwave angular frequency override (rad/s); defaults to the value
        in params.spin.  ODMR sweeps pass it per grid point.

    The diagonal carries hbar*w_k on the ground vibronics, hbar(w_z - w_d) on
    e_0, zero on e_1 (resonant with the drive by construction), and the spin
    detunings (w_{g/e,+-1} - w_mw) inside every triplet.  The singlet block is
    diagonal in the frame rotating at w_d.
    """
    n = scheme.n
    rabi = np.asarray(rabi, dtype=complex)
    if rabi.shape != (2, n + 1, 3):
        raise ConfigError(f"rabi array must have shape (2, {n + 1}, 3), got {rabi.shape}")
    if not np.all(np.isfinite(rabi)):
        raise ConfigError("rabi array contains non-finite entries")
    if omega_mw is None:
        omega_mw = params.spin.omega_mw

    drive = params.drive
    wg_p, wg_m, we_p, we_m = zeeman_frequencies(params.spin)
    omega_rabi_mw = params.spin.rabi_mw

    dim = scheme.dim
    h = np.zeros((dim, dim), dtype=complex)

    def fill_triplet(base, orbital_energy, w_p, w_m):
        h[base + 0, base + 0] = orbital_energy + HBAR * (w_p - omega_mw)
        h[base + 1, base + 1] = orbital_energy
        h[base + 2, base + 2] = orbital_energy + HBAR * (w_m - omega_mw)
        # |0><+1| + |0><-1| + h.c. microwave coupling
        h[base + 1, base + 0] += HBAR * omega_rabi_mw
        h[base + 0, base + 1] += HBAR * omega_rabi_mw
        h[base + 1, base + 2] += HBAR * omega_rabi_mw
        h[base + 2, base + 1] += HBAR * omega_rabi_mw

    for k in range(n + 1):
        fill_triplet(3 * k, params.vibronic.energies[k], wg_p, wg_m)
    e0_base = 3 * (n + 1)
    e1_base = 3 * (n + 2)
    fill_triplet(e0_base, drive.zpl_energy - drive.photon_energy, we_p, we_m)
    fill_triplet(e1_base, 0.0, we_p, we_m)

    for j, ebase in enumerate((e0_base, e1_base)):
        for k in range(n + 1):
            for mi in range(3):
                r, c = ebase + mi, 3 * k + mi
                h[r, c] += -HBAR * rabi[j, k, mi]
                h[c, r] += -HBAR * np.conj(rabi[j, k, mi])

    e_s1 = drive.zpl_energy - params.isc.e_gap_es
    e_s0 = e_s1 - params.isc.e_gap_singlet
    h[scheme.index_s1, scheme.index_s1] = e_s1 - drive.photon_energy
    h[scheme.index_s0, scheme.index_s0] = e_s0 - drive.photon_energy
    return h


def build_collapse_channels(scheme, params: NVParameters, emission_rates):
    """The full printed channel list; 6n + 20 channels (62 at n = 7).

    emission_rates[k, mi] holds the (possibly plasmon-modified) optical
    emission rate of |e_0, m> -> |g_k, m| in 1/s; the free-space case passes
    the n_b-scaled table rates.
    """
    n = scheme.n
    dim = scheme.dim
    emission_rates = np.asarray(emission_rates, dtype=float)
    if emission_rates.shape != (n + 1, 3):
        raise ConfigError(f"emission_rates must have shape ({n + 1}, 3)")

    def ketbra(i, j):
        op = np.zeros((dim, dim), dtype=complex)
        op[i, j] = 1.0
        return op

    idx = scheme.index
    channels = []
    for k in range(n + 1):
        for mi, m in enumerate(SPINS):
            channels.append(CollapseChannel(
                float(emission_rates[k, mi]),
                ketbra(idx(f"g{k}", m), idx("e0", m)),
                f"emission[k={k},m={m:+d}]"))
    for k in range(1, n + 1):
        for m in SPINS:
            channels.append(CollapseChannel(
                params.vibronic.gamma_vib[k],
                ketbra(idx(f"g{k - 1}", m), idx(f"g{k}", m)),
                f"vibronic_g[{k}->{k - 1},m={m:+d}]"))
    for m in SPINS:
        channels.append(CollapseChannel(
            params.drive.gamma_e,
            ketbra(idx("e0", m), idx("e1", m)),
            f"vibronic_e[m={m:+d}]"))

    # One collective dephasing projector over both excited orbitals.
    proj = np.zeros((dim, dim), dtype=complex)
    for level in ("e0", "e1"):
        for m in SPINS:
            i = idx(level, m)
            proj[i, i] = 1.0
    channels.append(CollapseChannel(params.drive.gamma_star, proj, "optical_dephasing"))

    for level, rate in (("e0", params.spin.gamma_rel_e), ("g0", params.spin.gamma_rel_g)):
        for m in (+1, -1):
            channels.append(CollapseChannel(
                rate, ketbra(idx(level, 0), idx(level, m)),
                f"spin_relaxation_{level[0]}[{m:+d}->0]"))
    for level, rate in (("e0", params.spin.gamma_star_e), ("g0", params.spin.gamma_star_g)):
        op = ketbra(idx(level, +1), idx(level, +1)) - ketbra(idx(level, -1), idx(level, -1))
        channels.append(CollapseChannel(rate, op, f"spin_dephasing_{level[0]}"))

    isc = params.isc
    for m in (+1, -1):
        channels.append(CollapseChannel(
            isc.gamma_es_pm1, ketbra(scheme.index_s1, idx("e0", m)), f"isc_es[m={m:+d}]"))
    channels.append(CollapseChannel(
        isc.gamma_es_0, ketbra(scheme.index_s1, idx("e0", 0)), "isc_es[m=0]"))
    for m in (+1, -1):
        channels.append(CollapseChannel(
            isc.gamma_sg_pm1, ketbra(idx("g0", m), scheme.index_s0), f"isc_sg[m={m:+d}]"))
    channels.append(CollapseChannel(
        isc.gamma_sg_0, ketbra(idx("g0", 0), scheme.index_s0), "isc_sg[m=0]"))
    channels.append(CollapseChannel(
        isc.gamma_s, ketbra(scheme.index_s0, scheme.index_s1), "singlet_decay"))
    return channels


def hamiltonian_superop(h):
    """-(i/hbar) [H, .] as a dim^2 x dim^2 matrix, 1/s."""
    dim = h.shape[0]
    eye = np.eye(dim)
    return (-1j / HBAR) * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superop(channels):
    """Sum of Lindblad dissipators over all channels, 1/s."""
    dim = channels[0].op.shape[0]
    eye = np.eye(dim)
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for ch in channels:
        if ch.rate < 0:
            raise ConfigError(f"negative rate on channel {ch.label}")
        if ch.rate == 0.0:
            continue
        l = ch.op
        ldl = l.conj().T @ l
        out += ch.rate * (np.kron(l.conj(), l)
                          - 0.5 * np.kron(eye, ldl)
                          - 0.5 * np.kron(ldl.T, eye))
    return out


def liouvillian(h, channels):
    """Generator of rho_dot = L[rho] on column-stacked rho, 1/s."""
    return hamiltonian_superop(h) + dissipator_superop(channels)


def mw_detuning_diagonal(scheme):
    """Diagonal d with L(w_mw) = L(0) + w_mw * diag(d).

    Sweeping the microwave frequency only shifts every triplet |+-1> level by
    -hbar*w_mw, a diagonal update in the vectorised frame; rebuilding the full
    superoperator per ODMR grid point would be pure waste.
    """
    dim = scheme.dim
    nvec = np.zeros(dim)
    for i, _ in enumerate(scheme.orbitals):
        nvec[3 * i + 0] = 1.0
        nvec[3 * i + 2] = 1.0
    dmat = 1j * (nvec[:, None] - nvec[None, :])
    return dmat.reshape(-1, order="F")


def _trace_row(dim):
    row = np.zeros(dim * dim, dtype=complex)
    row[:: dim + 1] = 1.0
    return row


def steady_state(l_op, residual_tol=1e-10, check_kernel=True):
    """Unique stationary density matrix of the Liouvillian.

    Solves the kernel problem directly: the first row of L (the population
    equation of basis state 0, redundant under trace conservation) is replaced
    by the trace functional and the resulting nonsingular system is LU-solved
    with two rounds of iterative refinement.  A reciprocal-condition estimate
    guards the one-dimensional-kernel precondition; suspicious systems get an
    SVD-based kernel count rather than a silently arbitrary answer.
    """
    dim2 = l_op.shape[0]
    dim = int(round(np.sqrt(dim2)))
    m = l_op.copy()
    m[0, :] = _trace_row(dim)
    b = np.zeros(dim2, dtype=complex)
    b[0] = 1.0

    anorm = np.linalg.norm(m, 1)
    with warnings.catch_warnings():
        # exact singularity is diagnosed below, the factor warning is noise
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        try:
            lu, piv = sla.lu_factor(m)
        except np.linalg.LinAlgError:
            _raise_kernel_diagnosis(l_op)
            raise
        x = sla.lu_solve((lu, piv), b)
        if not np.all(np.isfinite(x)):
            _raise_kernel_diagnosis(l_op)
            raise SolverError("singular linear system in steady-state solve")
        for _ in range(2):
            r = b - m @ x
            x += sla.lu_solve((lu, piv), r)

    gecon = sla.get_lapack_funcs("gecon", (m,))
    rcond, info = gecon(lu, anorm)
    if check_kernel and (info != 0 or not np.isfinite(rcond) or rcond < 1e-16):
        _raise_kernel_diagnosis(l_op)

    rho = unvec(x)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    lnorm = np.linalg.norm(l_op)
    residual = np.linalg.norm(l_op @ vec(rho))
    if residual > residual_tol * lnorm:
        _raise_kernel_diagnosis(l_op)
        raise SolverError(
            f"steady-state residual {residual:.3e} exceeds {residual_tol:.1e} * |L| = "
            f"{residual_tol * lnorm:.3e}")
    return rho


def _raise_kernel_diagnosis(l_op):
    """SVD-count the kernel; raise if it is not one-dimensional."""
    sv = np.linalg.svd(l_op, compute_uv=False)
    null_dim = int(np.sum(sv < sv[0] * 1e-12))
    if null_dim != 1:
        raise DegenerateSteadyStateError(
            f"Liouvillian kernel has dimension {null_dim}; the steady state is not "
            "unique (seed a drive or pick an initial condition and evolve instead)")


class _PropagatorCache:
    """exp(L dt) per distinct step, shared across a trajectory."""

    def __init__(self, l_op):
        self.l_op = l_op
        self._cache = {}

    def step(self, dt):
        key = float(np.format_float_scientific(dt, precision=12))
        if key not in self._cache:
            self._cache[key] = sla.expm(self.l_op * dt)
        return self._cache[key]


def evolve(rho0, l_op, t_grid, trace_tol=1e-6):
    """Propagate rho through the (time-independent) Liouvillian.

    Uses the exact matrix exponential per distinct grid spacing, applied
    repeatedly; on the uniform grids used throughout this is a single expm
    plus cheap matrix-vector products, and it is unconditionally stable
    against the PHz-to-sub-kHz rate spread.  The generator preserves the
    trace exactly, so the tiny per-step float drift of the Pade propagator
    is renormalised away at each sample and only a gross drift (beyond
    trace_tol in one step) raises.  Returns an array of shape
    (len(t_grid), dim, dim), Hermitised at each sample.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ConfigError("t_grid must be a nonempty 1-D array")
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise ConfigError("t_grid must be nonnegative and strictly increasing")

    cache = _PropagatorCache(l_op)
    dim = rho0.shape[0]
    out = np.empty((t_grid.size, dim, dim), dtype=complex)
    v = vec(np.asarray(rho0, dtype=complex))
    prev = 0.0
    for i, t in enumerate(t_grid):
        dt = t - prev
        if dt > 0:
            v = cache.step(dt) @ v
        prev = t
        rho = unvec(v)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr - 1.0) > trace_tol:
            raise SolverError(
                f"trace drifted by {abs(tr - 1.0):.3e} at t = {t:.3e} s; the "
                "generator is not trace-preserving at working precision")
        rho /= tr
        v = v / tr
        out[i] = rho
    return out


def pl_rate(rho, q_weights, emission_rates, scheme):
    """Photoluminescence rate sum_k sum_m Q_km gamma_km rho[e0 m, e0 m], 1/s."""
    base = 3 * (scheme.n + 1)
    pops = np.real(np.diagonal(rho)[base:base + 3])
    return float(np.sum(np.asarray(q_weights) * np.asarray(emission_rates) * pops[None, :]))


def emission_spectrum(l_op, sigma_indices, weights, rho_ss, energy_grid,
                      omega_d, window_rate, dtau=None, tail_tol=1e-6,
                      max_doublings=8):
    """Emission intensity over lab-frame photon energies via two-time correlators.

    For each emission transition sigma = |g><e| the regression theorem gives
    C(tau) = tr(sigma^dagger e^{L tau}[sigma rho_ss]); the one-sided Fourier
    transform, summed over transitions with the supplied weights, is the
    spectrum.  The stationary offset tr(sigma^dagger rho_ss) tr(sigma rho_ss)
    and the quasi-static background of channels far slower than the optical
    dephasing are removed before transforming; both would otherwise alias
    into a sub-resolution spike at the drive frequency.

    Parameters
    ----------
    sigma_indices : list of (int, int)
        (g, e) basis index pairs defining each lowering operator.
    weights : array
        Per-transition weight, Q_km * gamma_km in far-field mode, gamma_km in
        near-field mode.
    energy_grid : array
        Lab-frame photon energies (J); mapped to the rotating frame via
        w_rot = E/hbar - omega_d.
    window_rate : float
        Sets the initial correlation window 20 / window_rate; the optical
        dephasing rate is the natural choice.
    """
    energy_grid = np.asarray(energy_grid, dtype=float)
    w_rot = energy_grid / HBAR - omega_d
    w_max = float(np.max(np.abs(w_rot)))
    if dtau is None:
        dtau = min(np.pi / (1.25 * w_max), 0.2 / window_rate)
    if w_max > np.pi / dtau:
        raise ConfigError("energy grid exceeds the Nyquist span of the tau step")

    dim = rho_ss.shape[0]
    n_sig = len(sigma_indices)
    b_mat = np.empty((dim * dim, n_sig), dtype=complex)
    c_inf = np.empty(n_sig, dtype=complex)
    read_idx = np.empty(n_sig, dtype=int)
    for s, (g, e) in enumerate(sigma_indices):
        sig_rho = np.zeros((dim, dim), dtype=complex)
        sig_rho[g, :] = rho_ss[e, :]
        b_mat[:, s] = vec(sig_rho)
        c_inf[s] = rho_ss[e, g] * rho_ss[g, e]
        read_idx[s] = g + dim * e

    n0 = int(np.ceil(20.0 / window_rate / dtau))
    prop = sla.expm(l_op * dtau)

    corr = np.empty((n0, n_sig), dtype=complex)
    cur = b_mat
    for j in range(n0):
        corr[j] = cur[read_idx, np.arange(n_sig)]
        cur = prop @ cur

    for _ in range(max_doublings + 1):
        c_tilde = corr - c_inf[None, :]
        tail_n = max(2, corr.shape[0] // 10)
        c_tilde = c_tilde - np.mean(c_tilde[-tail_n:], axis=0, keepdims=True)
        peak = np.max(np.abs(c_tilde), axis=0)
        tail = np.max(np.abs(c_tilde[-max(2, corr.shape[0] // 20):]), axis=0)
        live = peak > 0
        if np.all(tail[live] <= tail_tol * peak[live]):
            break
        extra = np.empty((corr.shape[0], n_sig), dtype=complex)
        for j in range(extra.shape[0]):
            extra[j] = cur[read_idx, np.arange(n_sig)]
            cur = prop @ cur
        corr = np.vstack([corr, extra])
    else:
        raise WindowError(
            f"correlator tail above {tail_tol:.0e} of peak after {max_doublings} "
            "window doublings")

    n_tau = c_tilde.shape[0]
    n_pad = 1 << int(np.ceil(np.log2(4 * n_tau)))
    spec = np.fft.fft(c_tilde, n=n_pad, axis=0)
    spec -= 0.5 * c_tilde[0][None, :]
    spec = 2.0 * np.real(spec) * dtau
    total = spec @ np.asarray(weights, dtype=float)

    w_fft = 2.0 * np.pi * np.fft.fftfreq(n_pad, d=dtau)
    order = np.argsort(w_fft)
    return np.interp(w_rot, w_fft[order], total[order])
