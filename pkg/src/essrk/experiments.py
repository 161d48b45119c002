"""Ready-made experiments: the tokamak orbit, the parametric resonance run,
and a small two-particle ensemble.

Presets whose name starts with ``paper-`` use exactly the published
parameters and initial conditions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .composition import integrate, parse_method
from .diagnostics import (
    DiagnosticsReport,
    energy_series,
    guiding_center_decompose,
    method_symplecticity,
    wrapped_angle,
)
from .fields import ParametricField, ParticleProps, TokamakField
from .system import EnsembleSystem, HarmonicInteraction, PhaseState


@dataclass
class ExperimentPreset:
    name: str
    system: EnsembleSystem
    initial: PhaseState
    h: float
    n_steps: int
    methods: tuple = ("essrk4", "rk4")
    benchmark_h: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def T(self):
        return self.h * self.n_steps


def tokamak_preset(B0=1.0, E0=1e-2, R=2.0, Qsafety=5.0, n_steps=2000):
    params = dict(B0=B0, E0=E0, R=R, Qsafety=Qsafety)
    paper = params == dict(B0=1.0, E0=1e-2, R=2.0, Qsafety=5.0)
    return ExperimentPreset(
        name="paper-tokamak" if paper else "tokamak",
        system=EnsembleSystem.single(TokamakField(**params), ParticleProps(1.0, 1.0)),
        initial=PhaseState([[0.0, 2.1, 0.0]], [[0.0, 0.0, 0.0]], 0.0),
        h=0.5,
        n_steps=n_steps,
        benchmark_h=0.01,
        params=params,
    )


def parametric_preset(omega=1.0, epsilon=1e-4, n_steps=20000):
    params = dict(epsilon=epsilon, omega=omega)
    paper = params == dict(epsilon=1e-4, omega=1.0)
    return ExperimentPreset(
        name="paper-parametric" if paper else "parametric",
        system=EnsembleSystem.single(ParametricField(epsilon, omega), ParticleProps(1.0, 1.0)),
        initial=PhaseState([[0.0, 2.1, 0.0]], [[0.0, 0.0, 0.0]], 0.0),
        h=0.25,
        n_steps=n_steps,
        benchmark_h=0.001,
        params=params,
    )


def ensemble_preset(kappa=0.1, n_steps=1000):
    """Two unit charges in a static uniform field, coupled by a spring."""
    return ExperimentPreset(
        name="ensemble-harmonic",
        system=EnsembleSystem(
            [ParticleProps(1.0, 1.0), ParticleProps(1.0, 1.0)],
            ParametricField(0.0, 1.0),
            HarmonicInteraction(kappa),
        ),
        initial=PhaseState(
            [[0.0, 2.1, 0.0], [0.5, -1.0, 0.2]],
            [[0.0, 0.0, 0.1], [0.3, 0.0, -0.1]],
            0.0,
        ),
        h=0.25,
        n_steps=n_steps,
        benchmark_h=0.0025,
        params=dict(kappa=kappa),
    )


PRESETS = {
    "paper-tokamak": tokamak_preset,
    "paper-parametric": parametric_preset,
    "parametric-offres": lambda: parametric_preset(omega=2.5),
    "ensemble-harmonic": ensemble_preset,
}


def get_preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def benchmark_trajectory(preset, h_bench=None):
    """Fine RK4 run recorded on the preset's step grid."""
    h_bench = preset.benchmark_h if h_bench is None else h_bench
    ratio = preset.h / h_bench
    stride = int(round(ratio))
    if abs(stride - ratio) > 1e-9 * ratio:
        raise ValueError("benchmark step must divide the preset step")
    return integrate(preset.initial, "rk4", h_bench, preset.n_steps * stride, preset.system, stride=stride)


def _gc_series(traj, system):
    amp, phase = [], []
    for i in range(len(traj)):
        v, th = guiding_center_decompose(traj.state(i), system)
        amp.append(np.atleast_1d(v))
        phase.append(np.atleast_1d(th))
    return np.array(amp), np.array(phase)


def run_comparison(preset, methods=None, benchmark=None, symplecticity=True):
    """Run each method and measure it against the fine RK4 benchmark.

    Returns ``{method name: DiagnosticsReport}``. Amplitude and phase error
    series take the worst particle at every recorded time. Pass a
    precomputed ``benchmark`` trajectory to reuse it across calls.
    """
    methods = preset.methods if methods is None else methods
    if benchmark is None and preset.benchmark_h is not None:
        benchmark = benchmark_trajectory(preset)
    if benchmark is not None:
        ref_amp, ref_phase = _gc_series(benchmark, preset.system)

    reports = {}
    for spec in methods:
        method = parse_method(spec)
        traj = integrate(preset.initial, method, preset.h, preset.n_steps, preset.system)
        report = DiagnosticsReport(method.name, energy_series(traj, preset.system))
        if benchmark is not None:
            amp, phase = _gc_series(traj, preset.system)
            report.amplitude_error_series = np.column_stack([traj.t, np.max(np.abs(amp - ref_amp), axis=1)])
            report.phase_error_series = np.column_stack([traj.t, np.max(wrapped_angle(phase - ref_phase), axis=1)])
            report.final_state_error = float(np.max(np.abs(traj.final.flat() - benchmark.final.flat())))
        if symplecticity:
            report.symplecticity_defect = method_symplecticity(method, preset.initial, preset.h, preset.system)
        report.extra["trajectory"] = traj
        reports[method.name] = report
    return reports
