"""Fixed-step RK4 integration of the state and adjoint systems.

Forward runs march the controlled dynamics over a uniform grid, applying the
instantaneous arrival jumps at scheduled nodes.  Backward runs integrate the
costate system from its zero terminal condition, applying the matching
adjoint jumps.  Both record pre-jump and post-jump values at impulse nodes so
trajectories represent the discontinuities losslessly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import GridMismatchError, ScheduleError, StabilityError

if TYPE_CHECKING:
    from .control import CostWeights
from .model import (
    D,
    ControlSignal,
    ImpulseSchedule,
    ModelParams,
    StateVector,
    Trajectory,
    _apply_impulse,
    _deriv,
)

# Jumps act on the first four compartments (S, E, A, I) and their costates.
_JUMP_SLOTS = 4


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid over [0, tau] with step h.

    The horizon is rounded to the nearest whole number of steps; the value
    requested by the caller is kept in ``tau_requested``.
    """

    tau: float
    h: float
    n_steps: int = 0
    tau_requested: float = 0.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("step size must be positive")
        if self.tau <= 0:
            raise ValueError("horizon must be positive")
        steps = int(round(self.tau / self.h))
        if steps < 1:
            raise ValueError("horizon shorter than half a step")
        object.__setattr__(self, "tau_requested", self.tau)
        object.__setattr__(self, "n_steps", steps)
        object.__setattr__(self, "tau", steps * self.h)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.tau, self.n_steps + 1)

    def node_index(self, t: float) -> int:
        """Grid node holding time t, or ScheduleError if t is off-grid."""
        i = int(round(t / self.h))
        tol = 1e-9 * max(1.0, self.tau)
        if i < 0 or i > self.n_steps or abs(t - i * self.h) > tol:
            raise ScheduleError(f"time {t} does not coincide with a grid node (h={self.h})")
        return i


@dataclass(frozen=True)
class AdjointVector:
    """Costates paired with the compartments: p for S..D, q for V1..Vn."""

    p: tuple[float, ...]
    q: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        if len(self.p) != 6:
            raise ValueError("need exactly six compartment costates")
        if len(self.q) < 1:
            raise ValueError("need at least one dose costate")

    def as_array(self) -> np.ndarray:
        return np.array([*self.p, *self.q])

    @classmethod
    def from_array(cls, pq: np.ndarray) -> "AdjointVector":
        pq = np.asarray(pq, dtype=float)
        return cls(tuple(pq[:6]), tuple(pq[6:]))


@dataclass(frozen=True)
class AdjointTrajectory:
    """Time-gridded costates with pre/post values at impulse nodes."""

    node_times: np.ndarray
    values_pre: np.ndarray
    values_post: np.ndarray
    impulse_nodes: tuple[int, ...] = field(default_factory=tuple)

    @property
    def times(self) -> np.ndarray:
        dup = set(self.impulse_nodes)
        return np.array(
            [t for j, t in enumerate(self.node_times) for _ in range(2 if j in dup else 1)]
        )

    @property
    def values(self) -> np.ndarray:
        dup = set(self.impulse_nodes)
        rows = []
        for j in range(len(self.node_times)):
            rows.append(self.values_pre[j])
            if j in dup:
                rows.append(self.values_post[j])
        return np.array(rows)

    def at(self, node: int, side: str = "post") -> AdjointVector:
        arr = self.values_post if side == "post" else self.values_pre
        return AdjointVector.from_array(arr[node])


def _impulse_map(schedule: ImpulseSchedule | None, grid: TimeGrid) -> dict[int, tuple]:
    """Map schedule events onto interior grid nodes, rejecting collisions."""
    if schedule is None:
        return {}
    imap: dict[int, tuple] = {}
    for ev in schedule.events:
        idx = grid.node_index(ev.time)
        if idx <= 0 or idx >= grid.n_steps:
            raise ScheduleError(f"impulse time {ev.time} must lie strictly inside (0, {grid.tau})")
        if idx in imap:
            raise ScheduleError(f"two impulses snap to the same grid node t={ev.time}")
        imap[idx] = ev.lam
    return imap


def _sampled_controls(controls: ControlSignal, grid: TimeGrid):
    """Control values at grid nodes and step midpoints."""
    if controls.tau < grid.tau - 1e-9 * max(1.0, grid.tau):
        raise GridMismatchError(
            f"controls end at t={controls.tau} but the grid runs to t={grid.tau}"
        )
    times = grid.times
    mid_times = 0.5 * (times[:-1] + times[1:])
    v_n = np.interp(times, controls.grid, controls.v)
    u_n = np.interp(times, controls.grid, controls.u)
    v_m = np.interp(mid_times, controls.grid, controls.v)
    u_m = np.interp(mid_times, controls.grid, controls.u)
    return v_n, u_n, v_m, u_m


def integrate_forward(
    initial: StateVector,
    controls: ControlSignal,
    params: ModelParams,
    grid: TimeGrid,
    schedule: ImpulseSchedule | None = None,
    record_midpoints: bool = False,
) -> Trajectory:
    """March the controlled dynamics over the grid with classic RK4.

    At every impulse node the pre-jump state is recorded, the arrival jump is
    applied, and the post-jump state is recorded before marching continues.
    Compartments driven negative by roundoff are clamped to zero when their
    magnitude is at most 1e-9 times the initial living population; anything
    larger raises StabilityError (the step size is too coarse).

    With ``record_midpoints`` the trajectory also stores cubic-Hermite state
    values at step midpoints, which the backward pass can use in place of
    linear interpolation.
    """
    if initial.n != params.n:
        raise ValueError(f"state has {initial.n} dose compartments, params expect {params.n}")
    imap = _impulse_map(schedule, grid)
    v_n, u_n, v_m, u_m = _sampled_controls(controls, grid)
    times = grid.times
    h = grid.h
    steps = grid.n_steps
    dim = 6 + params.n

    y = initial.as_array()
    n0 = float(y.sum() - y[D])
    tol = 1e-9 * n0
    pre = np.empty((steps + 1, dim))
    post = np.empty((steps + 1, dim))
    mid = np.empty((steps, dim)) if record_midpoints else None
    pre[0] = post[0] = y

    for i in range(steps):
        k1 = _deriv(y, v_n[i], u_n[i], params)
        k2 = _deriv(y + (0.5 * h) * k1, v_m[i], u_m[i], params)
        k3 = _deriv(y + (0.5 * h) * k2, v_m[i], u_m[i], params)
        k4 = _deriv(y + h * k3, v_n[i + 1], u_n[i + 1], params)
        y1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        lowest = y1.min()
        if lowest < 0.0:
            if lowest < -tol:
                raise StabilityError(
                    f"compartment reached {lowest:.3e} at t={times[i + 1]:.6g}; reduce h"
                )
            np.maximum(y1, 0.0, out=y1)
        if record_midpoints:
            f_right = _deriv(y1, v_n[i + 1], u_n[i + 1], params)
            mid[i] = 0.5 * (y + y1) + (h / 8.0) * (k1 - f_right)
        pre[i + 1] = y1
        lam = imap.get(i + 1)
        if lam is not None:
            y1 = _apply_impulse(y1, lam)
        post[i + 1] = y1
        y = y1

    return Trajectory(
        node_times=times,
        states_pre=pre,
        states_post=post,
        impulse_nodes=tuple(sorted(imap)),
        states_mid=mid,
    )


def integrate_adjoint_backward(
    traj: Trajectory,
    controls: ControlSignal,
    params: ModelParams,
    weights: CostWeights,
    grid: TimeGrid,
    schedule: ImpulseSchedule | None = None,
    adjoint_impulse: str = "multiplicative",
    state_interp: str = "linear",
) -> AdjointTrajectory:
    """Integrate the costate system backward from its zero terminal value.

    The trajectory must come from ``integrate_forward`` on the same grid and
    controls.  States at interior RK stages are linearly interpolated between
    the segment endpoints, or taken from recorded midpoints when
    ``state_interp='midpoint'``.

    At impulse nodes the costates of the jumped compartments are jumped too:
    multiplied by (1 + lam_l) by default, or shifted by lam_l when
    ``adjoint_impulse='literal'``.
    """
    from .control import _adjoint_deriv  # deferred: control builds on this module

    times = grid.times
    if len(traj.node_times) != len(times) or np.max(np.abs(traj.node_times - times)) > 1e-9 * max(
        1.0, grid.tau
    ):
        raise GridMismatchError("trajectory grid does not match the integration grid")
    imap = _impulse_map(schedule, grid)
    if set(imap) != set(traj.impulse_nodes):
        raise GridMismatchError("schedule impulse nodes do not match the trajectory's")
    if state_interp not in ("linear", "midpoint"):
        raise ValueError(f"unknown state interpolation mode {state_interp!r}")
    if state_interp == "midpoint" and traj.states_mid is None:
        raise GridMismatchError("trajectory has no recorded midpoints; rerun with record_midpoints")
    if adjoint_impulse not in ("multiplicative", "literal"):
        raise ValueError(f"unknown adjoint impulse mode {adjoint_impulse!r}")

    v_n, u_n, v_m, u_m = _sampled_controls(controls, grid)
    h = grid.h
    steps = grid.n_steps
    dim = 6 + params.n
    pre = np.empty((steps + 1, dim))
    post = np.empty((steps + 1, dim))

    pq = np.zeros(dim)
    pre[steps] = post[steps] = pq
    for i in range(steps - 1, -1, -1):
        x_right = traj.states_pre[i + 1]
        x_left = traj.states_post[i]
        if state_interp == "midpoint":
            x_mid = traj.states_mid[i]
        else:
            x_mid = 0.5 * (x_left + x_right)
        k1 = _adjoint_deriv(pq, x_right, v_n[i + 1], u_n[i + 1], params, weights)
        k2 = _adjoint_deriv(pq - (0.5 * h) * k1, x_mid, v_m[i], u_m[i], params, weights)
        k3 = _adjoint_deriv(pq - (0.5 * h) * k2, x_mid, v_m[i], u_m[i], params, weights)
        k4 = _adjoint_deriv(pq - h * k3, x_left, v_n[i], u_n[i], params, weights)
        pq = pq - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        post[i] = pq
        lam = imap.get(i)
        if lam is not None:
            pq = pq.copy()
            if adjoint_impulse == "multiplicative":
                pq[:_JUMP_SLOTS] *= 1.0 + np.asarray(lam)
            else:
                pq[:_JUMP_SLOTS] += np.asarray(lam)
        pre[i] = pq

    return AdjointTrajectory(
        node_times=times,
        values_pre=pre,
        values_post=post,
        impulse_nodes=tuple(sorted(imap)),
    )
