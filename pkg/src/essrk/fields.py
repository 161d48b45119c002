"""Electromagnetic field models and the effective potential of the kick.

Every field evaluates, for positions ``q`` of shape ``(..., 3)`` and a time
``t`` broadcastable against ``q[..., 0]``:

* ``vector_potential``       A(q, t), shape (..., 3)
* ``jacobian``               A'(q, t) with ``[A']_ij = dA_i/dq_j``, shape (..., 3, 3)
* ``scalar_potential``       phi(q, t), shape (...)
* ``grad_scalar_potential``  grad phi(q, t), shape (..., 3)

Built-in fields additionally carry a numba kernel with the signature
``kernel(q, t, params, A, dA, gphi) -> phi`` writing into preallocated
buffers. A kernel signals a domain violation by returning NaN.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import NJIT_OPTS, njit

TOKAMAK_AXIS_GUARD = 1e-12


class FieldError(ValueError):
    """A field was evaluated outside its domain."""


@dataclass(frozen=True)
class ParticleProps:
    charge: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")


class FieldModel:
    """Base class for user-defined fields.

    Subclasses must implement all four evaluations; ``jacobian`` and
    ``grad_scalar_potential`` have to be the exact derivatives for the kick to
    be exactly symplectic.
    """

    kernel = None

    def vector_potential(self, q, t):
        raise NotImplementedError

    def jacobian(self, q, t):
        raise NotImplementedError

    def scalar_potential(self, q, t):
        raise NotImplementedError

    def grad_scalar_potential(self, q, t):
        raise NotImplementedError

    def kernel_params(self):
        return np.zeros(1)


# --- zero / uniform -----------------------------------------------------------


@njit(**NJIT_OPTS)
def _uniform_kernel(q, t, params, A, dA, gphi):
    for i in range(3):
        A[i] = params[i]
        gphi[i] = 0.0
        for j in range(3):
            dA[i, j] = 0.0
    return params[3]


class UniformField(FieldModel):
    """Constant vector potential and constant scalar potential (no force)."""

    kernel = _uniform_kernel

    def __init__(self, A=(0.0, 0.0, 0.0), phi=0.0):
        self.A = np.asarray(A, dtype=float).reshape(3)
        self.phi = float(phi)

    def vector_potential(self, q, t):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(self.A, q.shape).copy()

    def jacobian(self, q, t):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape + (3,))

    def scalar_potential(self, q, t):
        q = np.asarray(q, dtype=float)
        return np.full(q.shape[:-1], self.phi)

    def grad_scalar_potential(self, q, t):
        return np.zeros(np.shape(q))

    def kernel_params(self):
        return np.array([*self.A, self.phi])


class ZeroField(UniformField):
    def __init__(self):
        super().__init__()


# --- parametric: spatially uniform B(t) along z ---------------------------------


@njit(**NJIT_OPTS)
def _parametric_kernel(q, t, params, A, dA, gphi):
    half_b = 0.5 * (1.0 + params[0] * np.sin(params[1] * t))
    A[0] = half_b * q[1]
    A[1] = -half_b * q[0]
    A[2] = 0.0
    for i in range(3):
        gphi[i] = 0.0
        for j in range(3):
            dA[i, j] = 0.0
    dA[0, 1] = half_b
    dA[1, 0] = -half_b
    return 0.0


class ParametricField(FieldModel):
    """Uniform magnetic field ``B(t) = 1 + epsilon*sin(omega*t)`` along z.

    Symmetric-gauge potential ``A = B(t) [y, -x, 0] / 2``; no electric field.
    """

    kernel = _parametric_kernel

    def __init__(self, epsilon=1e-4, omega=1.0):
        self.epsilon = float(epsilon)
        self.omega = float(omega)

    def magnitude(self, t):
        return 1.0 + self.epsilon * np.sin(self.omega * np.asarray(t, dtype=float))

    def vector_potential(self, q, t):
        q = np.asarray(q, dtype=float)
        half_b = np.broadcast_to(0.5 * self.magnitude(t), q.shape[:-1])
        return np.stack([half_b * q[..., 1], -half_b * q[..., 0], np.zeros(q.shape[:-1])], axis=-1)

    def jacobian(self, q, t):
        q = np.asarray(q, dtype=float)
        half_b = np.broadcast_to(0.5 * self.magnitude(t), q.shape[:-1])
        out = np.zeros(q.shape[:-1] + (3, 3))
        out[..., 0, 1] = half_b
        out[..., 1, 0] = -half_b
        return out

    def scalar_potential(self, q, t):
        return np.zeros(np.shape(q)[:-1])

    def grad_scalar_potential(self, q, t):
        return np.zeros(np.shape(q))

    def kernel_params(self):
        return np.array([self.epsilon, self.omega])


# --- tokamak ----------------------------------------------------------------------


@njit(**NJIT_OPTS)
def _tokamak_kernel(q, t, params, A, dA, gphi):
    b0 = params[0]
    e0 = params[1]
    major = params[2]
    safety = params[3]
    x = q[0]
    y = q[1]
    z = q[2]
    rho2 = x * x + y * y
    if rho2 < 1e-12:
        return np.nan
    rho = np.sqrt(rho2)
    num = (rho - major) ** 2 + z * z
    g = num / (2.0 * safety * rho2)
    common = ((rho - major) * rho - num) / (safety * rho2 * rho2)
    gx = x * common
    gy = y * common
    gz = z / (safety * rho2)
    A[0] = -b0 * g * y
    A[1] = b0 * g * x
    A[2] = -b0 * major * np.log(rho / major)
    dA[0, 0] = -b0 * gx * y
    dA[0, 1] = -b0 * (gy * y + g)
    dA[0, 2] = -b0 * gz * y
    dA[1, 0] = b0 * (gx * x + g)
    dA[1, 1] = b0 * gy * x
    dA[1, 2] = b0 * gz * x
    dA[2, 0] = -b0 * major * x / rho2
    dA[2, 1] = -b0 * major * y / rho2
    dA[2, 2] = 0.0
    gphi[0] = 0.0
    gphi[1] = 0.0
    gphi[2] = e0 * np.sin(z)
    return -e0 * np.cos(z)


class TokamakField(FieldModel):
    """Static toroidal field in Coulomb gauge with ``phi = -E0 cos z``.

    ``R`` is the major radius and ``Qsafety`` the safety factor. The domain
    excludes the vertical axis ``x = y = 0``.
    """

    kernel = _tokamak_kernel

    def __init__(self, B0=1.0, E0=1e-2, R=2.0, Qsafety=5.0):
        if not R > 0:
            raise ValueError("major radius R must be positive")
        if Qsafety == 0:
            raise ValueError("safety factor must be nonzero")
        self.B0 = float(B0)
        self.E0 = float(E0)
        self.R = float(R)
        self.Qsafety = float(Qsafety)

    def _geometry(self, q):
        q = np.asarray(q, dtype=float)
        x, y, z = q[..., 0], q[..., 1], q[..., 2]
        rho2 = x * x + y * y
        if np.any(rho2 < TOKAMAK_AXIS_GUARD):
            raise FieldError("tokamak field evaluated on the axis x^2 + y^2 = 0")
        return x, y, z, rho2, np.sqrt(rho2)

    def vector_potential(self, q, t):
        x, y, z, rho2, rho = self._geometry(q)
        g = ((rho - self.R) ** 2 + z * z) / (2.0 * self.Qsafety * rho2)
        return self.B0 * np.stack([-g * y, g * x, -self.R * np.log(rho / self.R)], axis=-1)

    def jacobian(self, q, t):
        x, y, z, rho2, rho = self._geometry(q)
        num = (rho - self.R) ** 2 + z * z
        g = num / (2.0 * self.Qsafety * rho2)
        common = ((rho - self.R) * rho - num) / (self.Qsafety * rho2 * rho2)
        gx, gy, gz = x * common, y * common, z / (self.Qsafety * rho2)
        zero = np.zeros_like(x)
        rows = [
            [-gx * y, -(gy * y + g), -gz * y],
            [gx * x + g, gy * x, gz * x],
            [-self.R * x / rho2, -self.R * y / rho2, zero],
        ]
        return self.B0 * np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    def scalar_potential(self, q, t):
        q = np.asarray(q, dtype=float)
        self._geometry(q)
        return -self.E0 * np.cos(q[..., 2])

    def grad_scalar_potential(self, q, t):
        q = np.asarray(q, dtype=float)
        self._geometry(q)
        z = q[..., 2]
        zero = np.zeros_like(z)
        return np.stack([zero, zero, self.E0 * np.sin(z)], axis=-1)

    def magnetic_field(self, q):
        """Toroidal B from its closed form in toroidal coordinates.

        Independent of the vector potential; used to check ``curl A``.
        """
        x, y, z, rho2, rho = self._geometry(q)
        minor = np.sqrt((rho - self.R) ** 2 + z * z)
        cos_th = (rho - self.R) / minor
        sin_th = z / minor
        e_phi = np.stack([-y / rho, x / rho, np.zeros_like(x)], axis=-1)
        e_theta = np.stack([-sin_th * x / rho, -sin_th * y / rho, cos_th], axis=-1)
        scale = self.B0 * self.R / (self.R + minor * cos_th)
        return scale[..., None] * (e_phi + (minor / (self.Qsafety * self.R))[..., None] * e_theta)

    def kernel_params(self):
        return np.array([self.B0, self.E0, self.R, self.Qsafety])


# --- finite-difference adapter --------------------------------------------------


class FiniteDifferenceField(FieldModel):
    """Wrap plain callables ``A(q, t)`` and ``phi(q, t)`` for a single point.

    Derivatives come from central differences, so the resulting kick is only
    symplectic up to O(step**2).
    """

    def __init__(self, vector_potential, scalar_potential=None, step=1e-6):
        self._A = vector_potential
        self._phi = scalar_potential or (lambda q, t: 0.0)
        self.step = float(step)

    def _pointwise(self, func, q, t, shape):
        q = np.asarray(q, dtype=float)
        flat_q = q.reshape(-1, 3)
        flat_t = np.broadcast_to(np.asarray(t, dtype=float), q.shape[:-1]).reshape(-1)
        out = np.array([func(qi, ti) for qi, ti in zip(flat_q, flat_t)], dtype=float)
        return out.reshape(q.shape[:-1] + shape)

    def _central(self, func, q, t, shape):
        cols = []
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = self.step
            cols.append(
                (self._pointwise(func, q + dq, t, shape) - self._pointwise(func, q - dq, t, shape))
                / (2 * self.step)
            )
        return np.stack(cols, axis=-1)

    def vector_potential(self, q, t):
        return self._pointwise(self._A, q, t, (3,))

    def jacobian(self, q, t):
        return self._central(self._A, q, t, (3,))

    def scalar_potential(self, q, t):
        return self._pointwise(self._phi, q, t, ())

    def grad_scalar_potential(self, q, t):
        return self._central(self._phi, q, t, ())


# --- effective potential of the kick ----------------------------------------------


def effective_potential(field, props, q, t):
    """``f = e^2 |A|^2 / (2m) + e phi``."""
    e, m = props.charge, props.mass
    A = field.vector_potential(q, t)
    return e * e * np.sum(A * A, axis=-1) / (2 * m) + e * field.scalar_potential(q, t)


def effective_potential_gradient(field, props, q, t):
    """Row-vector gradient ``(e^2/m) A A' + e grad phi``."""
    e, m = props.charge, props.mass
    A = field.vector_potential(q, t)
    dA = field.jacobian(q, t)
    return (e * e / m) * np.einsum("...i,...ij->...j", A, dA) + e * field.grad_scalar_potential(q, t)


# --- consistency report -------------------------------------------------------


@dataclass
class FieldReport:
    jacobian_defect: float
    grad_phi_defect: float
    divergence: float
    curl_defect: float | None = None

    def passed(self, tol=1e-5):
        values = [self.jacobian_defect, self.grad_phi_defect, self.divergence]
        if self.curl_defect is not None:
            values.append(self.curl_defect)
        return all(v <= tol for v in values)


def _fd_jacobian(func, q, t, step):
    cols = []
    for j in range(3):
        dq = np.zeros(3)
        dq[j] = step
        cols.append((np.asarray(func(q + dq, t)) - np.asarray(func(q - dq, t))) / (2 * step))
    return np.stack(cols, axis=-1)


def field_consistency_check(field, samples, fd_step=1e-5):
    """Compare the analytic derivatives of ``field`` with central differences.

    ``samples`` is an iterable of ``(q, t)`` pairs. The step is scaled by
    ``max(1, |q|)``.
    """
    jac = grad = div = 0.0
    curl = 0.0 if isinstance(field, TokamakField) else None
    for q, t in samples:
        q = np.asarray(q, dtype=float)
        step = fd_step * max(1.0, float(np.max(np.abs(q))))
        fd_A = _fd_jacobian(field.vector_potential, q, t, step)
        fd_phi = _fd_jacobian(lambda x, s: np.atleast_1d(field.scalar_potential(x, s)), q, t, step)[0]
        jac = max(jac, float(np.max(np.abs(fd_A - field.jacobian(q, t)))))
        grad = max(grad, float(np.max(np.abs(fd_phi - field.grad_scalar_potential(q, t)))))
        div = max(div, abs(float(np.trace(fd_A))))
        if curl is not None:
            fd_curl = np.array([fd_A[2, 1] - fd_A[1, 2], fd_A[0, 2] - fd_A[2, 0], fd_A[1, 0] - fd_A[0, 1]])
            curl = max(curl, float(np.max(np.abs(fd_curl - field.magnetic_field(q)))))
    return FieldReport(jac, grad, div, curl)
