import numpy as np
import pytest

from essrk import ParticleProps, PhaseState
from essrk.experiments import benchmark_trajectory, get_preset, run_comparison
from essrk.fields import FieldModel, ParametricField, TokamakField, UniformField, ZeroField
from essrk.system import EnsembleSystem


def single(field, charge=1.0, mass=1.0):
    return EnsembleSystem.single(field, ParticleProps(charge, mass))


def state(q, p, t=0.0):
    return PhaseState(np.atleast_2d(q), np.atleast_2d(p), t)


class SignFlippedTokamak(TokamakField):
    """Tokamak field with dA_z/dy negated (fault injection); that entry is O(1) near the orbit."""

    kernel = None

    def jacobian(self, q, t):
        out = super().jacobian(q, t).copy()
        out[..., 2, 1] *= -1
        return out


class LinearField(FieldModel):
    """A = M q with a fixed matrix; numpy path only."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=float)

    def vector_potential(self, q, t):
        return np.asarray(q, dtype=float) @ self.M.T

    def jacobian(self, q, t):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(self.M, q.shape[:-1] + (3, 3)).copy()

    def scalar_potential(self, q, t):
        return np.zeros(np.shape(q)[:-1])

    def grad_scalar_potential(self, q, t):
        return np.zeros(np.shape(q))


# kick momentum matrix of the midpoint rule vanishes for A' eigenvalues 1 +- i at h = 1
SINGULAR_M = [[1.0, 1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]


BUILTIN_FIELDS = {
    "zero": ZeroField(),
    "uniform": UniformField([0.3, -1.0, 2.0], 0.7),
    "parametric": ParametricField(1e-4, 1.0),
    "parametric-strong": ParametricField(0.5, 2.0),
    "tokamak": TokamakField(),
}


def random_states(rng, n, field_name, n_particles=1):
    """Random in-domain states; tokamak positions stay near the initial orbit."""
    out = []
    for _ in range(n):
        if field_name == "tokamak":
            q = np.array([0.0, 2.1, 0.0]) + rng.uniform(-0.3, 0.3, (n_particles, 3))
        else:
            q = rng.uniform(-2, 2, (n_particles, 3))
        out.append(PhaseState(q, rng.uniform(-1, 1, (n_particles, 3)), float(rng.uniform(0, 10))))
    return out


@pytest.fixture(scope="session")
def parametric_benchmark():
    """RK4 h=0.001 reference for the parametric preset (5e6 steps, ~25 s)."""
    return benchmark_trajectory(get_preset("paper-parametric"))


@pytest.fixture(scope="session")
def parametric_reports(parametric_benchmark):
    return run_comparison(get_preset("paper-parametric"), benchmark=parametric_benchmark)


@pytest.fixture(scope="session")
def tokamak_reports():
    return run_comparison(get_preset("paper-tokamak"))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
