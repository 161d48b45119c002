"""Drift and shadowed-RK kick maps (vectorized numpy path).

The Hamiltonian is split into the kinetic part ``|p|^2/2m``, whose flow is
the drift, and the remainder, whose flow is approximated by the kick.
Positions in the kick follow an explicit RK method; momenta follow from the
generating function ``S(P, q) = <P, g(q)> + c(q)``, which keeps the map
exactly symplectic for every step size.

All functions accept negative durations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import PhaseState

DET_GUARD = 1e-12


class StepFailure(RuntimeError):
    """The momentum update matrix of a kick is (nearly) singular."""

    def __init__(self, message, particle=None, step=None):
        super().__init__(message)
        self.particle = particle
        self.step = step


def drift(state, h, system):
    """Exact kinetic flow: ``q += h p / m``."""
    q = state.q + h * state.p / system.masses[:, None]
    return PhaseState(q, state.p, state.t + h)


@dataclass
class KickStages:
    """Per-stage data, each indexed ``[stage, particle, ...]``."""

    k: np.ndarray
    kprime: np.ndarray
    grad_l: np.ndarray
    l: np.ndarray


def kick_stages(state, tableau, h, system):
    q, t = state.q, state.t
    s, n = tableau.stages, q.shape[0]
    coef = -(system.charges / system.masses)[:, None]
    eye = np.broadcast_to(np.eye(3), (n, 3, 3))
    k = np.zeros((s, n, 3))
    kprime = np.zeros((s, n, 3, 3))
    grad_l = np.zeros((s, n, 3))
    l = np.zeros(s)
    for i in range(s):
        row = tableau.a[i, :i]
        pos = q + h * np.tensordot(row, k[:i], axes=1)
        jac = eye + h * np.tensordot(row, kprime[:i], axes=1)
        ti = t + h * tableau.c[i]
        k[i] = coef * system.vector_potential(pos, ti)
        kprime[i] = coef[..., None] * np.matmul(system.jacobian(pos, ti), jac)
        grad_l[i] = np.einsum("nj,njk->nk", system.effective_potential_gradient(pos, ti), jac)
        l[i] = system.effective_potential(pos, ti)
    return KickStages(k, kprime, grad_l, l)


def _inverse3(m):
    """Batched 3x3 inverse by the adjugate; returns ``(inverse, det)``."""
    r0, r1, r2 = m[..., 0, :], m[..., 1, :], m[..., 2, :]
    c0, c1, c2 = np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)
    det = np.sum(r0 * c0, axis=-1)
    adj = np.stack([c0, c1, c2], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return adj / det[..., None, None], det


def kick_generating_data(state, tableau, h, system):
    """Return ``(g(q), c(q), g'(q), grad c(q))`` for the kick over [t, t+h].

    ``g`` is the RK position map, ``c`` the RK action increment (a scalar
    summed over particles) and ``g'`` the block-diagonal Jacobian, one 3x3
    block per particle.
    """
    st = kick_stages(state, tableau, h, system)
    b = tableau.b
    g = state.q + h * np.tensordot(b, st.k, axes=1)
    gprime = np.eye(3) + h * np.tensordot(b, st.kprime, axes=1)
    c = h * float(np.dot(b, st.l))
    grad_c = h * np.tensordot(b, st.grad_l, axes=1)
    return g, c, gprime, grad_c


def kick(state, tableau, h, system):
    """Shadowed-RK approximation of the non-kinetic flow from t to t + h."""
    g, _, gprime, grad_c = kick_generating_data(state, tableau, h, system)
    inv, det = _inverse3(gprime)
    bad = np.flatnonzero(~(np.abs(det) > DET_GUARD))
    if bad.size:
        j = int(bad[0])
        raise StepFailure(
            f"kick momentum matrix is singular for particle {j} (det={det[j]:.3e}); reduce h",
            particle=j,
        )
    p = np.einsum("nj,njk->nk", state.p - grad_c, inv)
    return PhaseState(g, p, state.t + h)
