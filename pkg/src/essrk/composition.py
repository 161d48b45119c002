"""Triple-jump compositions of drifts and kicks, plus the RK4 baseline.

A schedule is stored as fractions of the macro step, so it is built once
per order and reused for every step. Adjacent drifts are merged when the
schedule is built.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np

from . import _backend, kernels
from .fields import FieldError
from .maps import StepFailure, drift, kick
from .system import PhaseState
from .tableau import ButcherTableau, tableau_for_order


def gamma_for(p):
    """Triple-jump coefficient ``1 / (2 - 2^(1/(p+1)))`` raising order p to p + 2."""
    if isinstance(p, bool) or int(p) != p or p < 2 or p % 2:
        raise ValueError(f"order must be an even integer >= 2, got {p!r}")
    return 1.0 / (2.0 - 2.0 ** (1.0 / (p + 1)))


@dataclass(frozen=True)
class ScheduleSegment:
    """One drift or kick, with endpoints as fractions of the macro step.

    Kick endpoints are the time nodes the kick runs between. Drifts are time
    independent; their endpoints are the cumulative drift nodes and
    ``duration`` is the merged drift length.
    """

    kind: Literal["drift", "kick"]
    start: float
    end: float
    duration: float


@dataclass(frozen=True)
class CompositionSchedule:
    order: int
    segments: tuple

    @property
    def kicks(self):
        return tuple(s for s in self.segments if s.kind == "kick")

    @property
    def drifts(self):
        return tuple(s for s in self.segments if s.kind == "drift")

    @property
    def kick_count(self):
        return len(self.kicks)

    def drift_fractions(self):
        return np.array([s.duration for s in self.drifts])

    def kick_intervals(self):
        return np.array([(s.start, s.end) for s in self.kicks])


def _kick_intervals(p, lo, hi):
    if p == 2:
        return [(lo, hi)]
    g = gamma_for(p - 2)
    span = hi - lo
    a, b = lo + g * span, lo + (1.0 - g) * span
    return _kick_intervals(p - 2, lo, a) + _kick_intervals(p - 2, a, b) + _kick_intervals(p - 2, b, hi)


@lru_cache(maxsize=None)
def build_schedule(p):
    """Merged drift/kick schedule of the order-p composition.

    The second-order base is half drift, kick, half drift. Each level of the
    recursion rescales three copies into [0, g], [g, 1-g], [1-g, 1]; since
    g > 1 the middle copy runs backwards. After merging, the drift between
    two consecutive kicks is half of each neighbouring kick interval.
    """
    gamma_for(p)
    kicks = _kick_intervals(p, 0.0, 1.0)
    durations = [(kicks[0][1] - kicks[0][0]) / 2]
    durations += [(kicks[i + 1][1] - kicks[i][0]) / 2 for i in range(len(kicks) - 1)]
    durations.append((kicks[-1][1] - kicks[-1][0]) / 2)

    segments = []
    node = 0.0
    for i, d in enumerate(durations):
        nxt = 1.0 if i == len(durations) - 1 else node + d
        segments.append(ScheduleSegment("drift", node, nxt, d))
        node = nxt
        if i < len(kicks):
            lo, hi = kicks[i]
            segments.append(ScheduleSegment("kick", lo, hi, hi - lo))
    return CompositionSchedule(p, tuple(segments))


# --- method specs ---------------------------------------------------------------


@dataclass(frozen=True)
class Method:
    kind: Literal["essrk", "rk4"]
    order: int
    tableau: ButcherTableau | None = None

    @property
    def name(self):
        return "rk4" if self.kind == "rk4" else f"essrk{self.order}"

    @property
    def schedule(self):
        return build_schedule(self.order)

    @property
    def rk_tableau(self):
        return self.tableau or tableau_for_order(self.order)


def parse_method(spec):
    """``"essrk4"`` / ``"essrk(4)"`` / ``"rk4"`` -> :class:`Method`."""
    if isinstance(spec, Method):
        return spec
    text = str(spec).strip().lower().replace("(", "").replace(")", "").replace("-", "")
    if text == "rk4":
        return Method("rk4", 4)
    if text.startswith("essrk"):
        try:
            order = int(text[5:])
        except ValueError:
            raise ValueError(f"cannot parse method {spec!r}") from None
        gamma_for(order)
        return Method("essrk", order)
    raise ValueError(f"unknown method {spec!r}; expected essrk<p> or rk4")


# --- backend dispatch -------------------------------------------------------------


def _compiled(system, backend):
    if backend is None:
        backend = "numba" if _backend.use_numba() else "numpy"
    if backend == "numpy":
        return None
    if backend != "numba":
        raise ValueError(f"unknown backend {backend!r}")
    if not _backend.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not available")
    return system.kernel_spec()


def _raise_status(status, particle, step=None, t=None):
    where = "" if step is None else f" at step {step}"
    if status == kernels.SINGULAR:
        raise StepFailure(
            f"kick momentum matrix is singular for particle {particle}{where}; reduce h",
            particle=particle,
            step=step,
        )
    err = FieldError(f"field evaluated outside its domain for particle {particle}{where}")
    err.step = step
    raise err


def _schedule_arrays(schedule):
    iv = schedule.kick_intervals()
    return schedule.drift_fractions(), np.ascontiguousarray(iv[:, 0]), np.ascontiguousarray(iv[:, 1])


# --- steppers -----------------------------------------------------------------------


def essrk_step(state, schedule, tableau, h, system, backend=None):
    """One ESSRK macro step from ``state.t`` to ``state.t + h``."""
    if isinstance(schedule, int):
        schedule = build_schedule(schedule)
    if schedule.order > tableau.order:
        raise ValueError(f"order-{schedule.order} schedule needs a tableau of order >= {schedule.order}")
    spec = _compiled(system, backend)
    if spec is not None:
        q, p = state.q.copy(), state.p.copy()
        info = np.zeros(1, dtype=np.int64)
        drifts, k0, k1 = _schedule_arrays(schedule)
        status = kernels.essrk_step_inplace(
            q, p, state.t, h, drifts, k0, k1, tableau.a, tableau.b, tableau.c,
            spec.charges, spec.masses, spec.field_kernel, spec.field_params,
            spec.interaction_kernel, spec.interaction_params, info, np.zeros_like(q), np.zeros_like(p),
        )
        if status != kernels.OK:
            _raise_status(status, int(info[0]))
        return PhaseState(q, p, state.t + h)

    t0 = state.t
    for seg in schedule.segments:
        if seg.kind == "drift":
            state = drift(state, seg.duration * h, system)
        else:
            state = kick(PhaseState(state.q, state.p, t0 + seg.start * h), tableau, seg.duration * h, system)
    return PhaseState(state.q, state.p, t0 + h)


def hamiltonian_rhs(state, system):
    """Hamilton's equations of the full Hamiltonian; returns ``(qdot, pdot)``."""
    e = system.charges[:, None]
    m = system.masses[:, None]
    v = state.p - e * system.vector_potential(state.q, state.t)
    qdot = v / m
    pdot = (
        (e / m) * np.einsum("ni,nij->nj", v, system.jacobian(state.q, state.t))
        - e * system.grad_scalar_potential(state.q, state.t)
        - system.interaction_gradient(state.q, state.t)
    )
    return qdot, pdot


def rk4_baseline_step(state, h, system, backend=None):
    """Classical RK4 on the full (non-split) equations. Not symplectic."""
    spec = _compiled(system, backend)
    if spec is not None:
        q, p = state.q.copy(), state.p.copy()
        info = np.zeros(1, dtype=np.int64)
        status = kernels.rk4_step_inplace(
            q, p, state.t, h, spec.charges, spec.masses, spec.field_kernel, spec.field_params,
            spec.interaction_kernel, spec.interaction_params, info, np.zeros_like(q), np.zeros_like(p),
        )
        if status != kernels.OK:
            _raise_status(status, int(info[0]))
        return PhaseState(q, p, state.t + h)

    q, p, t = state.q, state.p, state.t
    k1 = hamiltonian_rhs(state, system)
    k2 = hamiltonian_rhs(PhaseState(q + h / 2 * k1[0], p + h / 2 * k1[1], t + h / 2), system)
    k3 = hamiltonian_rhs(PhaseState(q + h / 2 * k2[0], p + h / 2 * k2[1], t + h / 2), system)
    k4 = hamiltonian_rhs(PhaseState(q + h * k3[0], p + h * k3[1], t + h), system)
    return PhaseState(
        q + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        p + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        t + h,
    )


def make_stepper(method, backend=None) -> Callable:
    """``stepper(state, h, system) -> state`` for a method spec."""
    method = parse_method(method)
    if method.kind == "rk4":
        return lambda state, h, system: rk4_baseline_step(state, h, system, backend=backend)
    schedule, tableau = method.schedule, method.rk_tableau
    return lambda state, h, system: essrk_step(state, schedule, tableau, h, system, backend=backend)


# --- trajectories -----------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    method: str = ""

    def __len__(self):
        return self.t.size

    def state(self, i):
        return PhaseState(self.q[i], self.p[i], self.t[i])

    @property
    def final(self):
        return self.state(-1)

    def energies(self, system):
        return np.array([system.hamiltonian(self.q[i], self.p[i], self.t[i]) for i in range(len(self))])


def integrate(state, method, h, n_steps, system, observer=None, stride=1, backend=None):
    """Advance ``n_steps`` steps of size ``h``.

    Records the initial state, every ``stride``-th step and the last step.
    Time after step n is ``t0 + n*h`` (no accumulated round-off). If an
    ``observer(step, state)`` is given it is called after every step.
    """
    method = parse_method(method)
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if h == 0:
        raise ValueError("step size must be nonzero")
    spec = _compiled(system, backend)
    if spec is not None and observer is None:
        return _integrate_compiled(state, method, h, n_steps, stride, spec)

    stepper = make_stepper(method, backend=backend)
    t0 = state.t
    ts, qs, ps = [t0], [state.q], [state.p]
    for n in range(n_steps):
        try:
            state = stepper(state, h, system)
        except (StepFailure, FieldError) as exc:
            exc.step = n
            exc.args = (f"{exc.args[0]} (step {n})",)
            raise
        state = PhaseState(state.q, state.p, t0 + (n + 1) * h)
        if observer is not None:
            observer(n + 1, state)
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            ts.append(state.t)
            qs.append(state.q)
            ps.append(state.p)
    return Trajectory(np.array(ts), np.array(qs), np.array(ps), method.name)


def _integrate_compiled(state, method, h, n_steps, stride, spec):
    info = np.zeros(1, dtype=np.int64)
    common = (spec.charges, spec.masses, spec.field_kernel, spec.field_params,
              spec.interaction_kernel, spec.interaction_params, info)
    if method.kind == "rk4":
        out = kernels.run_rk4(state.q, state.p, state.t, float(h), n_steps, stride, *common)
    else:
        tableau = method.rk_tableau
        drifts, k0, k1 = _schedule_arrays(method.schedule)
        out = kernels.run_essrk(
            state.q, state.p, state.t, float(h), n_steps, stride, drifts, k0, k1,
            tableau.a, tableau.b, tableau.c, *common,
        )
    status, failed, ts, qs, ps = out
    if status != kernels.OK:
        _raise_status(status, int(info[0]), step=int(failed))
    return Trajectory(ts, qs, ps, method.name)
