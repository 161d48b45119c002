"""Phase states and N-particle systems.

A system couples N charged particles, each in its own field, through an
optional interaction potential ``V(q_1, ..., q_N, t)`` that depends on
positions only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._backend import NJIT_OPTS, njit
from .fields import FieldModel, ParticleProps


@dataclass(frozen=True)
class PhaseState:
    """Positions ``q`` and momenta ``p`` (both N x 3) at time ``t``."""

    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1, 3)
        p = np.array(self.p, dtype=float).reshape(-1, 3)
        if q.shape != p.shape:
            raise ValueError(f"q and p shapes differ: {q.shape} vs {p.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase state has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_particles(self):
        return self.q.shape[0]

    def flat(self):
        return np.concatenate([self.q.ravel(), self.p.ravel()])

    @classmethod
    def from_flat(cls, z, t=0.0):
        z = np.asarray(z, dtype=float)
        half = z.size // 2
        return cls(z[:half].reshape(-1, 3), z[half:].reshape(-1, 3), t)


# --- interactions ---------------------------------------------------------------


@njit(**NJIT_OPTS)
def _no_interaction_kernel(Q, t, params, grad):
    grad[:, :] = 0.0
    return 0.0


@njit(**NJIT_OPTS)
def _harmonic_kernel(Q, t, params, grad):
    kappa = params[0]
    n = Q.shape[0]
    grad[:, :] = 0.0
    energy = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(3):
                d = Q[i, k] - Q[j, k]
                energy += 0.5 * kappa * d * d
                grad[i, k] += kappa * d
                grad[j, k] -= kappa * d
    return energy


class Interaction:
    """Position-only coupling potential. Subclasses supply V and its gradient."""

    kernel = None

    def potential(self, q, t):
        raise NotImplementedError

    def gradient(self, q, t):
        raise NotImplementedError

    def kernel_params(self):
        return np.zeros(1)


class HarmonicInteraction(Interaction):
    """``V = kappa/2 * sum_{i<j} |q_i - q_j|^2``."""

    kernel = _harmonic_kernel

    def __init__(self, kappa=0.1):
        self.kappa = float(kappa)

    def potential(self, q, t):
        q = np.asarray(q, dtype=float)
        n = q.shape[0]
        # sum_{i<j} |qi - qj|^2 = n sum |qi|^2 - |sum qi|^2
        total = n * np.sum(q * q) - np.sum(np.sum(q, axis=0) ** 2)
        return 0.5 * self.kappa * total

    def gradient(self, q, t):
        q = np.asarray(q, dtype=float)
        return self.kappa * (q.shape[0] * q - np.sum(q, axis=0))

    def kernel_params(self):
        return np.array([self.kappa])


# --- systems ----------------------------------------------------------------------


class KernelSpec(NamedTuple):
    field_kernel: object
    field_params: np.ndarray
    interaction_kernel: object
    interaction_params: np.ndarray
    charges: np.ndarray
    masses: np.ndarray


class EnsembleSystem:
    """N particles with per-particle fields and an optional interaction.

    ``fields`` is either a single field shared by every particle or one field
    per particle.
    """

    def __init__(
        self,
        particles: Sequence[ParticleProps],
        fields: FieldModel | Sequence[FieldModel],
        interaction: Interaction | None = None,
    ):
        self.particles = tuple(particles)
        if not self.particles:
            raise ValueError("a system needs at least one particle")
        if isinstance(fields, FieldModel):
            self.fields = (fields,) * len(self.particles)
        else:
            self.fields = tuple(fields)
        if len(self.fields) != len(self.particles):
            raise ValueError("need one field per particle")
        self.interaction = interaction
        self.charges = np.array([pp.charge for pp in self.particles], dtype=float)
        self.masses = np.array([pp.mass for pp in self.particles], dtype=float)
        self._shared = all(f is self.fields[0] for f in self.fields)

    @classmethod
    def single(cls, field, props=None):
        return cls([props or ParticleProps()], field)

    @property
    def n_particles(self):
        return len(self.particles)

    def _per_particle(self, method, q, t):
        q = np.asarray(q, dtype=float)
        if self._shared:
            return np.asarray(getattr(self.fields[0], method)(q, t))
        return np.stack([np.asarray(getattr(f, method)(q[j], t)) for j, f in enumerate(self.fields)])

    def vector_potential(self, q, t):
        return self._per_particle("vector_potential", q, t)

    def jacobian(self, q, t):
        return self._per_particle("jacobian", q, t)

    def scalar_potential(self, q, t):
        return self._per_particle("scalar_potential", q, t)

    def grad_scalar_potential(self, q, t):
        return self._per_particle("grad_scalar_potential", q, t)

    def interaction_potential(self, q, t):
        return 0.0 if self.interaction is None else float(self.interaction.potential(q, t))

    def interaction_gradient(self, q, t):
        if self.interaction is None:
            return np.zeros(np.shape(q))
        return np.asarray(self.interaction.gradient(q, t), dtype=float)

    def effective_potential(self, q, t):
        """Total kick potential: per-particle ``e^2|A|^2/2m + e phi`` plus V."""
        e, m = self.charges, self.masses
        A = self.vector_potential(q, t)
        per = e * e * np.sum(A * A, axis=-1) / (2 * m) + e * self.scalar_potential(q, t)
        return float(np.sum(per)) + self.interaction_potential(q, t)

    def effective_potential_gradient(self, q, t):
        """N x 3 gradient of :meth:`effective_potential` (row-vector convention)."""
        e, m = self.charges[:, None], self.masses[:, None]
        A = self.vector_potential(q, t)
        dA = self.jacobian(q, t)
        return (
            (e * e / m) * np.einsum("ni,nij->nj", A, dA)
            + e * self.grad_scalar_potential(q, t)
            + self.interaction_gradient(q, t)
        )

    def hamiltonian(self, q, p, t):
        q = np.asarray(q, dtype=float).reshape(-1, 3)
        p = np.asarray(p, dtype=float).reshape(-1, 3)
        e, m = self.charges, self.masses
        v = p - e[:, None] * self.vector_potential(q, t)
        kinetic = np.sum(v * v, axis=-1) / (2 * m)
        return float(np.sum(kinetic + e * self.scalar_potential(q, t))) + self.interaction_potential(q, t)

    def kernel_spec(self):
        """Compiled-kernel description, or None if some part is Python-only."""
        kernel = type(self.fields[0]).kernel
        if kernel is None or any(type(f).kernel is not kernel for f in self.fields):
            return None
        if self.interaction is None:
            ikernel, iparams = _no_interaction_kernel, np.zeros(1)
        elif type(self.interaction).kernel is None:
            return None
        else:
            ikernel, iparams = type(self.interaction).kernel, self.interaction.kernel_params()
        params = np.stack([np.asarray(f.kernel_params(), dtype=float) for f in self.fields])
        return KernelSpec(kernel, params, ikernel, np.asarray(iparams, dtype=float), self.charges, self.masses)
