"""Measurement oracles: energy, symplecticity, convergence, guiding-center
errors and residuals of the momentum-shadowing identity.

Reference solutions here come from a plain RK4 written independently of the
kick code, run at a small fraction of the step being tested.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .composition import integrate, make_stepper, parse_method
from .maps import kick, kick_generating_data
from .system import PhaseState


def energy(state, system):
    return system.hamiltonian(state.q, state.p, state.t)


# --- symplecticity ----------------------------------------------------------------


def canonical_matrix(n):
    """The 2n x 2n matrix ``[[0, I], [-I, 0]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def default_fd_step(state):
    return 1e-5 * max(1.0, float(np.max(np.abs(state.flat()))))


def fd_jacobian(phase_map, state, fd_step=None):
    """Central-difference Jacobian of ``phase_map`` on the flattened (q, p)."""
    step = default_fd_step(state) if fd_step is None else fd_step
    z = state.flat()
    cols = []
    for i in range(z.size):
        dz = np.zeros_like(z)
        dz[i] = step
        plus = phase_map(PhaseState.from_flat(z + dz, state.t)).flat()
        minus = phase_map(PhaseState.from_flat(z - dz, state.t)).flat()
        cols.append((plus - minus) / (2 * step))
    return np.stack(cols, axis=1)


def symplecticity_defect(phase_map, state, fd_step=None):
    """``max |M^T J M - J|`` for the FD Jacobian M of ``phase_map`` at ``state``."""
    M = fd_jacobian(phase_map, state, fd_step)
    J = canonical_matrix(M.shape[0] // 2)
    return float(np.max(np.abs(M.T @ J @ M - J)))


# --- convergence ------------------------------------------------------------------


@dataclass
class ConvergenceResult:
    h: np.ndarray
    errors: np.ndarray
    slope: float
    monotone: bool


def _steps_for(T, h):
    n = int(round(T / h))
    if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T={T} is not a whole number of steps of size {h}")
    return n


def fit_slope(h, errors):
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def convergence_order(stepper, system, state, h_list, T, reference=None, ref_factor=50):
    """Fit the log-log slope of the final-time error against step size.

    ``stepper`` is a method spec (``"essrk4"``, ``"rk4"``) or a callable
    ``(state, h, system) -> state``. The default reference is RK4 at
    ``min(h_list) / ref_factor``. Error is the max norm over all phase
    coordinates at time ``T``.
    """
    h_list = np.asarray(sorted(h_list, reverse=True), dtype=float)
    if h_list.size < 3:
        raise ValueError("need at least three step sizes")
    if reference is None:
        h_ref = h_list[-1] / ref_factor
        reference = integrate(state, "rk4", h_ref, _steps_for(T, h_ref), system, stride=10**9).final
    errors = []
    for h in h_list:
        n = _steps_for(T, h)
        if callable(stepper):
            final = state
            for _ in range(n):
                final = stepper(final, h, system)
        else:
            final = integrate(state, stepper, h, n, system, stride=10**9).final
        errors.append(float(np.max(np.abs(final.flat() - reference.flat()))))
    errors = np.array(errors)
    monotone = bool(np.all(np.diff(errors) < 0))
    if not monotone:
        warnings.warn("errors are not monotone in h; step sizes may be outside the asymptotic regime")
    return ConvergenceResult(h_list, errors, fit_slope(h_list, errors), monotone)


# --- guiding-center decomposition -----------------------------------------------


def guiding_center_decompose(state, system):
    """Polar form of the perpendicular velocity: ``v1 = v sin(theta)``, ``v2 = v cos(theta)``.

    Returns scalars for a single particle and arrays otherwise. ``theta`` is
    in (-pi, pi] and is 0 when the velocity vanishes.
    """
    e = system.charges[:, None]
    m = system.masses[:, None]
    vel = (state.p - e * system.vector_potential(state.q, state.t)) / m
    amp = np.hypot(vel[:, 0], vel[:, 1])
    phase = np.arctan2(vel[:, 0], vel[:, 1])
    if state.n_particles == 1:
        return float(amp[0]), float(phase[0])
    return amp, phase


def wrapped_angle(delta):
    """Absolute angular difference folded into [0, pi]."""
    return np.abs((np.asarray(delta) + np.pi) % (2 * np.pi) - np.pi)


# --- reports --------------------------------------------------------------------


@dataclass
class DiagnosticsReport:
    method: str
    energy_series: np.ndarray
    amplitude_error_series: np.ndarray | None = None
    phase_error_series: np.ndarray | None = None
    symplecticity_defect: float | None = None
    convergence_slope: float | None = None
    final_state_error: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def final_energy(self):
        return float(self.energy_series[-1, 1])


def energy_series(traj, system):
    return np.column_stack([traj.t, traj.energies(system)])


def secular_trend(series):
    """Linear-fit drift of a ``(t, E)`` series over its whole span.

    Returns ``(drift, oscillation)`` where ``drift`` is slope times duration
    and ``oscillation`` the peak-to-peak of the detrended residual.
    """
    t, e = series[:, 0], series[:, 1]
    slope, intercept = np.polyfit(t - t[0], e, 1)
    resid = e - (slope * (t - t[0]) + intercept)
    return float(slope * (t[-1] - t[0])), float(np.ptp(resid))


# --- shadowing oracles ------------------------------------------------------------


def _rk4(rhs, y, t0, t1, n):
    h = (t1 - t0) / n
    for i in range(n):
        t = t0 + i * h
        k1 = rhs(y, t)
        k2 = rhs(y + h / 2 * k1, t + h / 2)
        k3 = rhs(y + h / 2 * k2, t + h / 2)
        k4 = rhs(y + h * k3, t + h)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _position_action_rhs(system):
    """Positions under the non-kinetic flow, augmented with ``z' = f``."""
    coef = -(system.charges / system.masses)[:, None]

    def rhs(y, t):
        q = y[:-1].reshape(-1, 3)
        dq = coef * system.vector_potential(q, t)
        return np.append(dq.ravel(), system.effective_potential(q, t))

    return rhs


def _position_momentum_rhs(system):
    """Full non-kinetic dynamics: ``q' = -(e/m) A``, ``p' = (e/m) p A' - grad f``."""
    ratio = (system.charges / system.masses)[:, None]

    def rhs(y, t):
        q, p = y[: y.size // 2].reshape(-1, 3), y[y.size // 2:].reshape(-1, 3)
        dq = -ratio * system.vector_potential(q, t)
        dp = ratio * np.einsum("ni,nij->nj", p, system.jacobian(q, t)) - system.effective_potential_gradient(q, t)
        return np.concatenate([dq.ravel(), dp.ravel()])

    return rhs


def shadowing_residual(system, state, t0=None, t1=None, n_ref=1000, fd_step=1e-5):
    """Max-norm gap between the shadowing formula and directly integrated momenta.

    Positions and the action integral are integrated from perturbed initial
    positions and differentiated by central differences; the momentum then
    follows from ``p(t1) = (p(t0) - dc/dx) (dg/dx)^{-1}``.
    """
    t0 = state.t if t0 is None else t0
    if t1 is None:
        raise ValueError("t1 is required")
    x = state.q.ravel()
    dim = x.size
    aug = _position_action_rhs(system)
    dg = np.empty((dim, dim))
    dc = np.empty(dim)
    for j in range(dim):
        dx = np.zeros(dim + 1)
        dx[j] = fd_step
        y = np.append(x, 0.0)
        plus = _rk4(aug, y + dx, t0, t1, n_ref)
        minus = _rk4(aug, y - dx, t0, t1, n_ref)
        diff = (plus - minus) / (2 * fd_step)
        dg[:, j] = diff[:dim]
        dc[j] = diff[dim]
    p_formula = np.linalg.solve(dg.T, state.p.ravel() - dc)
    direct = _rk4(_position_momentum_rhs(system), state.flat(), t0, t1, n_ref)
    return float(np.max(np.abs(p_formula - direct[dim:])))


def action_quadrature_residual(system, state, tableau, h, n_ref=1000):
    """``|c(q) - integral of f|`` over one kick of length ``h``.

    ``c`` is the RK action increment from the kick; the integral follows the
    reference non-kinetic trajectory starting at ``state.q``.
    """
    _, c, _, _ = kick_generating_data(state, tableau, h, system)
    y = _rk4(_position_action_rhs(system), np.append(state.q.ravel(), 0.0), state.t, state.t + h, n_ref)
    return abs(c - float(y[-1]))


def kick_local_error(system, state, tableau, h, n_ref=1000):
    """Max-norm distance of one kick from the reference non-kinetic flow."""
    out = kick(state, tableau, h, system)
    ref = _rk4(_position_momentum_rhs(system), state.flat(), state.t, state.t + h, n_ref)
    return float(np.max(np.abs(out.flat() - ref)))


def method_symplecticity(method, state, h, system):
    """Symplecticity defect of one step of ``method`` at ``state``."""
    stepper = make_stepper(parse_method(method))
    return symplecticity_defect(lambda s: stepper(s, h, system), state)
