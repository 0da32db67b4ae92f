"""
Time-domain integration of the reduced pair and of the full two-machine system.

Scenarios are staged: a pre-fault operating point, a fault-on period entered by
dropping the machine voltage (and usually inserting virtual reactance), and an
optional post-fault stage after clearing.  Coefficients jump at stage
boundaries while the state stays continuous.  Integration is classical
fixed-step RK4; the dynamics are smooth and non-stiff at these parameter
scales, and a fixed step keeps energy-drift checks deterministic.

Loss of synchronism is detected on the unwrapped angle: the first time it
passes the forward unstable angle still accelerating, or the backward one
still decelerating.  Re-converging a full cycle later counts as a pole slip
and is still a loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .machine import (
    BaseQuantities,
    LoadParams,
    ModelError,
    RelativeSwingModel,
    SgParams,
    VsgParams,
    load_power,
    reduce_two_machine,
    total_reactance,
)
from .equilibrium import find_equilibria


class IntegrationDivergedError(RuntimeError):
    """The integrator produced a non-finite state."""


class SyncState(NamedTuple):
    """Angle difference [rad] and pu frequency difference of the pair."""

    delta: float
    dw: float


@dataclass(frozen=True)
class StageCondition:
    """Per-stage overrides; None inherits the corresponding base parameter."""

    sg_voltage: float | None = None
    virtual_reactance: float | None = None
    power_ref: float | None = None


@dataclass(frozen=True)
class FaultScenario:
    """Staged fault description: pre-fault, fault-on, optional post-fault."""

    t_end: float
    t_fault: float
    prefault: StageCondition
    faulted: StageCondition
    t_clear: float | None = None
    postfault: StageCondition | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.t_fault < self.t_end:
            raise ModelError(f"need 0 <= t_fault < t_end, got {self.t_fault}, {self.t_end}")
        if (self.t_clear is None) != (self.postfault is None):
            raise ModelError("t_clear and postfault must be given together")
        if self.t_clear is not None and not self.t_fault < self.t_clear <= self.t_end:
            raise ModelError(f"need t_fault < t_clear <= t_end, got t_clear={self.t_clear}")


@dataclass
class Trajectory:
    """Uniformly sampled simulation output.

    delta/dw are the synchronization angle and frequency; sync_power and
    current are derived per-sample with the stage parameters active at each
    sample.  los_time is the first loss-of-synchronism crossing, None if the
    run stays synchronized.
    """

    times: np.ndarray
    delta: np.ndarray
    dw: np.ndarray
    sync_power: np.ndarray
    current: np.ndarray
    los_time: float | None
    ssi: float

    def state(self, i: int) -> SyncState:
        return SyncState(float(self.delta[i]), float(self.dw[i]))


def derivative(model: RelativeSwingModel, state: SyncState) -> SyncState:
    """Right-hand side of the reduced swing equation at a state."""
    return SyncState(
        model.omega_ref * state.dw,
        (model.power_ref - model.power_max * math.sin(state.delta) - model.damping * state.dw)
        / (2.0 * model.inertia),
    )


def rk4_step(model: RelativeSwingModel, state: SyncState, dt: float) -> SyncState:
    """One classical RK4 step; global error O(dt**4)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1 = derivative(model, state)
    k2 = derivative(model, SyncState(state.delta + 0.5 * dt * k1.delta, state.dw + 0.5 * dt * k1.dw))
    k3 = derivative(model, SyncState(state.delta + 0.5 * dt * k2.delta, state.dw + 0.5 * dt * k2.dw))
    k4 = derivative(model, SyncState(state.delta + dt * k3.delta, state.dw + dt * k3.dw))
    out = SyncState(
        state.delta + dt / 6.0 * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta),
        state.dw + dt / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw),
    )
    if not (math.isfinite(out.delta) and math.isfinite(out.dw)):
        raise IntegrationDivergedError(f"non-finite state after step: {out}")
    return out


def current_magnitude(delta, e_v: float, e_g: float, x_sum: float):
    """Output current magnitude |E_v*e^(j*delta) - E_g| / X_sum, elementwise."""
    if x_sum == 0.0:
        raise ModelError("x_sum is zero")
    return np.sqrt(e_v**2 + e_g**2 - 2.0 * e_v * e_g * np.cos(delta)) / x_sum


def ssi_from_peak(delta_peak: float) -> float:
    """Synchronization score (2*pi - peak)/(2*pi + peak); 1 at zero, 0 at a full turn."""
    return (2.0 * math.pi - delta_peak) / (2.0 * math.pi + delta_peak)


def ssi(trajectory: Trajectory) -> float:
    """Score of a trajectory from its signed maximum angle."""
    return ssi_from_peak(float(np.max(trajectory.delta)))


def _los_thresholds(model: RelativeSwingModel, delta_start: float) -> tuple[float, float]:
    """(upper, lower) crossing angles for loss detection under a stage model.

    With a stable equilibrium these are the forward and backward unstable
    angles.  Without one the angle drifts; a full half-turn from the stage
    entry point is then counted as lost, since no equilibrium can lie beyond.
    """
    eq = find_equilibria(model)
    if eq.exists:
        return eq.uep_forward, eq.uep_backward
    return delta_start + math.pi, delta_start - math.pi


def detect_los(trajectory: Trajectory, model: RelativeSwingModel) -> float | None:
    """First time the angle passes an unstable angle while still moving outward."""
    upper, lower = _los_thresholds(model, float(trajectory.delta[0]))
    hit = ((trajectory.delta > upper) & (trajectory.dw > 0)) | (
        (trajectory.delta < lower) & (trajectory.dw < 0)
    )
    idx = np.nonzero(hit)[0]
    return float(trajectory.times[idx[0]]) if idx.size else None


@dataclass(frozen=True)
class _Stage:
    start_index: int
    model: RelativeSwingModel
    vsg: VsgParams
    sg: SgParams


def _apply_stage(
    vsg: VsgParams, sg: SgParams, stage: StageCondition
) -> tuple[VsgParams, SgParams]:
    if stage.virtual_reactance is not None or stage.power_ref is not None:
        vsg = replace(
            vsg,
            virtual_reactance=(
                stage.virtual_reactance
                if stage.virtual_reactance is not None
                else vsg.virtual_reactance
            ),
            power_ref=stage.power_ref if stage.power_ref is not None else vsg.power_ref,
        )
    if stage.sg_voltage is not None:
        sg = replace(sg, voltage=stage.sg_voltage)
    return vsg, sg


def _resolve_stages(
    vsg: VsgParams,
    sg: SgParams,
    load: LoadParams,
    base: BaseQuantities,
    scenario: FaultScenario,
    dt: float,
) -> list[_Stage]:
    stages = [(0.0, scenario.prefault), (scenario.t_fault, scenario.faulted)]
    if scenario.postfault is not None:
        stages.append((scenario.t_clear, scenario.postfault))
    out = []
    for t_start, cond in stages:
        v, g = _apply_stage(vsg, sg, cond)
        model = reduce_two_machine(v, g, load, base)
        out.append(_Stage(math.ceil(t_start / dt - 1e-9), model, v, g))
    return out


def _finish_trajectory(
    times: np.ndarray,
    delta: np.ndarray,
    dw: np.ndarray,
    stages: list[_Stage],
    los_time: float | None,
) -> Trajectory:
    n = len(times)
    sync_power = np.empty(n)
    current = np.empty(n)
    for k, stage in enumerate(stages):
        stop = stages[k + 1].start_index if k + 1 < len(stages) else n
        sl = slice(stage.start_index, stop)
        sync_power[sl] = stage.model.power_max * np.sin(delta[sl])
        current[sl] = current_magnitude(
            delta[sl],
            stage.vsg.internal_voltage,
            stage.sg.voltage,
            total_reactance(stage.vsg, stage.sg),
        )
    return Trajectory(
        times=times,
        delta=delta,
        dw=dw,
        sync_power=sync_power,
        current=current,
        los_time=los_time,
        ssi=ssi_from_peak(float(np.max(delta))),
    )


def _initial_angle(stages: list[_Stage]) -> float:
    pre = find_equilibria(stages[0].model)
    if not pre.exists:
        raise ModelError("the pre-fault stage admits no stable equilibrium to start from")
    return pre.sep


def simulate_reduced(
    vsg: VsgParams,
    sg: SgParams,
    load: LoadParams,
    base: BaseQuantities,
    scenario: FaultScenario,
    dt: float = 1e-4,
) -> Trajectory:
    """Integrate the reduced pair through the staged scenario.

    The run starts at rest on the pre-fault stable angle; each stage rebuilds
    the reduced model (including the load power at the stage voltage) while
    the state carries over unchanged.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    stages = _resolve_stages(vsg, sg, load, base, scenario, dt)
    n_steps = int(round(scenario.t_end / dt))
    times = np.arange(n_steps + 1) * dt
    delta = np.empty(n_steps + 1)
    dw = np.empty(n_steps + 1)
    delta[0] = _initial_angle(stages)
    dw[0] = 0.0

    d, w = float(delta[0]), 0.0
    los_time: float | None = None
    stage_idx = 0
    # Bound per-stage coefficients as locals; the loop dominates runtime.
    m = stages[0].model
    pref, pmax, damp, h2, om = m.power_ref, m.power_max, m.damping, 2.0 * m.inertia, m.omega_ref
    upper, lower = _los_thresholds(m, d)
    sin = math.sin
    for i in range(n_steps):
        while stage_idx + 1 < len(stages) and i >= stages[stage_idx + 1].start_index:
            stage_idx += 1
            m = stages[stage_idx].model
            pref, pmax, damp, h2, om = (
                m.power_ref, m.power_max, m.damping, 2.0 * m.inertia, m.omega_ref,
            )
            upper, lower = _los_thresholds(m, d)
        k1d = om * w
        k1w = (pref - pmax * sin(d) - damp * w) / h2
        d2, w2 = d + 0.5 * dt * k1d, w + 0.5 * dt * k1w
        k2d = om * w2
        k2w = (pref - pmax * sin(d2) - damp * w2) / h2
        d3, w3 = d + 0.5 * dt * k2d, w + 0.5 * dt * k2w
        k3d = om * w3
        k3w = (pref - pmax * sin(d3) - damp * w3) / h2
        d4, w4 = d + dt * k3d, w + dt * k3w
        k4d = om * w4
        k4w = (pref - pmax * sin(d4) - damp * w4) / h2
        d += dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        delta[i + 1] = d
        dw[i + 1] = w
        if los_time is None and ((d > upper and w > 0.0) or (d < lower and w < 0.0)):
            los_time = times[i + 1]
    if not (math.isfinite(d) and math.isfinite(w)):
        raise IntegrationDivergedError("reduced simulation diverged")
    return _finish_trajectory(times, delta, dw, stages, los_time)


def simulate_full(
    vsg: VsgParams,
    sg: SgParams,
    load: LoadParams,
    base: BaseQuantities,
    scenario: FaultScenario,
    dt: float = 1e-4,
) -> Trajectory:
    """Integrate the full four-state pair and return its relative trajectory.

    States are the two absolute angles and pu frequency deviations.  The
    machine's electric power is the load draw minus the converter output.
    The relative trajectory matches simulate_reduced exactly whenever the
    damping-to-inertia ratios agree, for any common-mode drift.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    stages = _resolve_stages(vsg, sg, load, base, scenario, dt)
    n_steps = int(round(scenario.t_end / dt))
    times = np.arange(n_steps + 1) * dt
    delta = np.empty(n_steps + 1)
    dw = np.empty(n_steps + 1)
    delta[0] = _initial_angle(stages)
    dw[0] = 0.0

    om = base.omega_ref
    th_v, w_v, th_g, w_g = float(delta[0]), 0.0, 0.0, 0.0
    los_time: float | None = None
    stage_idx = 0
    sin = math.sin

    def stage_rhs(k: int):
        v, g = stages[k].vsg, stages[k].sg
        pvref, hv2, dv = v.power_ref, 2.0 * v.inertia, v.damping
        pm, hg2, dg = g.mech_power, 2.0 * g.inertia, g.damping
        pmax = v.internal_voltage * g.voltage / total_reactance(v, g)
        p_load = load_power(g.voltage, load)

        def rhs(tv, wv, tg, wg):
            p_v = pmax * sin(tv - tg)
            return (
                om * wv,
                (pvref - p_v - dv * wv) / hv2,
                om * wg,
                (pm - (p_load - p_v) - dg * wg) / hg2,
            )

        return rhs

    rhs = stage_rhs(0)
    upper, lower = _los_thresholds(stages[0].model, th_v - th_g)
    for i in range(n_steps):
        while stage_idx + 1 < len(stages) and i >= stages[stage_idx + 1].start_index:
            stage_idx += 1
            rhs = stage_rhs(stage_idx)
            upper, lower = _los_thresholds(stages[stage_idx].model, th_v - th_g)

        a1, b1, c1, e1 = rhs(th_v, w_v, th_g, w_g)
        a2, b2, c2, e2 = rhs(
            th_v + 0.5 * dt * a1, w_v + 0.5 * dt * b1, th_g + 0.5 * dt * c1, w_g + 0.5 * dt * e1
        )
        a3, b3, c3, e3 = rhs(
            th_v + 0.5 * dt * a2, w_v + 0.5 * dt * b2, th_g + 0.5 * dt * c2, w_g + 0.5 * dt * e2
        )
        a4, b4, c4, e4 = rhs(th_v + dt * a3, w_v + dt * b3, th_g + dt * c3, w_g + dt * e3)
        th_v += dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        w_v += dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        th_g += dt / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4)
        w_g += dt / 6.0 * (e1 + 2 * e2 + 2 * e3 + e4)
        d = th_v - th_g
        w = w_v - w_g
        delta[i + 1] = d
        dw[i + 1] = w
        if los_time is None and ((d > upper and w > 0.0) or (d < lower and w < 0.0)):
            los_time = times[i + 1]
    if not all(map(math.isfinite, (th_v, w_v, th_g, w_g))):
        raise IntegrationDivergedError("full simulation diverged")
    return _finish_trajectory(times, delta, dw, stages, los_time)


def simulate_ensemble(
    model: RelativeSwingModel,
    delta0: np.ndarray,
    dw0: np.ndarray,
    dt: float,
    t_max: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate many initial states under one fixed model, vectorised.

    Returns (los_times, delta_final, dw_final); los entries are nan where the
    state never crossed an unstable angle.  Runs are independent, so batching
    them through numpy is just a scheduling choice.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    d = np.asarray(delta0, dtype=float).copy()
    w = np.asarray(dw0, dtype=float).copy()
    if d.shape != w.shape:
        raise ValueError("delta0 and dw0 must have the same shape")
    eq = find_equilibria(model)
    if eq.exists:
        upper = np.full_like(d, eq.uep_forward)
        lower = np.full_like(d, eq.uep_backward)
    else:
        upper = d + math.pi
        lower = d - math.pi
    pref, pmax, damp = model.power_ref, model.power_max, model.damping
    h2, om = 2.0 * model.inertia, model.omega_ref
    n_steps = int(round(t_max / dt))
    los = np.full(d.shape, np.nan)
    pending = np.isnan(los)
    for i in range(n_steps):
        k1d = om * w
        k1w = (pref - pmax * np.sin(d) - damp * w) / h2
        d2 = d + 0.5 * dt * k1d
        w2 = w + 0.5 * dt * k1w
        k2d = om * w2
        k2w = (pref - pmax * np.sin(d2) - damp * w2) / h2
        d3 = d + 0.5 * dt * k2d
        w3 = w + 0.5 * dt * k2w
        k3d = om * w3
        k3w = (pref - pmax * np.sin(d3) - damp * w3) / h2
        d4 = d + dt * k3d
        w4 = w + dt * k3w
        k4d = om * w4
        k4w = (pref - pmax * np.sin(d4) - damp * w4) / h2
        d += dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        crossed = pending & (((d > upper) & (w > 0)) | ((d < lower) & (w < 0)))
        if crossed.any():
            los[crossed] = (i + 1) * dt
            pending &= ~crossed
    return los, d, w
