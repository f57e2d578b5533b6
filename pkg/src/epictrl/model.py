"""Domain types and the controlled compartmental vector field.

Compartments are a susceptible pool S, an incubating pool E, an asymptomatic
pool A, a symptomatic pool I, recovered R, deceased D, and an ordered chain of
vaccination-dose pools V1..Vn (people whose latest dose is the i-th).  Two
controls act on the system: a vaccination effort v(t) in [0, 1/gamma1] moving
people along S -> V1 -> ... -> Vn, and a treatment effort u(t) in [0, 1]
moving symptomatic people to R.

The canonical array layout used throughout the package is

    [S, E, A, I, R, D, V1, ..., Vn]

so a state vector has n + 6 components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParameterError

# Indices into the canonical state layout.
S, E, A, I, R, D = 0, 1, 2, 3, 4, 5
V0 = 6  # first vaccination compartment


@dataclass(frozen=True)
class StateVector:
    """Compartment populations at one instant (persons, all non-negative)."""

    S: float
    E: float
    A: float
    I: float
    R: float
    D: float
    V: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "V", tuple(float(x) for x in self.V))
        if len(self.V) < 1:
            raise ValueError("state needs at least one vaccination compartment")
        for name in ("S", "E", "A", "I", "R", "D"):
            if getattr(self, name) < 0:
                raise ValueError(f"compartment {name} must be non-negative")
        if any(x < 0 for x in self.V):
            raise ValueError("vaccination compartments must be non-negative")

    @property
    def n(self) -> int:
        return len(self.V)

    def as_array(self) -> np.ndarray:
        """Canonical layout [S, E, A, I, R, D, V1..Vn]."""
        return np.array([self.S, self.E, self.A, self.I, self.R, self.D, *self.V])

    @classmethod
    def from_array(cls, y: np.ndarray) -> "StateVector":
        y = np.asarray(y, dtype=float)
        return cls(y[S], y[E], y[A], y[I], y[R], y[D], tuple(y[V0:]))


@dataclass(frozen=True)
class ModelParams:
    """Epidemiological rates and dose-specific vaccination/breakthrough rates.

    beta is the transmission coefficient (per person per day); epsilon, q, mu
    weight the infectiousness of the E, I, A pools inside the force of
    infection.  k is the incubation exit rate, z the symptomatic fraction,
    eta the asymptomatic exit rate with recovered fraction p, f the
    symptomatic exit rate with survival fraction alpha.  gamma[i] multiplies
    the vaccination control for the (i+1)-th dose, delta[i] is the
    breakthrough rate out of V_{i+1} back into E.

    ``delta_n_to_exposed`` routes the last-dose breakthrough flow
    delta_n * V_n into E as well; by default that flow is absent (the last
    dose is treated as fully protective, delta_n ~ 0).
    """

    beta: float
    epsilon: float
    q: float
    mu: float
    k: float
    z: float
    p: float
    eta: float
    alpha: float
    f: float
    gamma: tuple[float, ...]
    delta: tuple[float, ...]
    delta_n_to_exposed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(x) for x in self.gamma))
        object.__setattr__(self, "delta", tuple(float(x) for x in self.delta))
        g, d = self.gamma, self.delta
        if len(g) < 2:
            raise ValueError("need at least two vaccination doses (len(gamma) >= 2)")
        if len(d) != len(g):
            raise ValueError("gamma and delta must have equal length")
        if g[0] <= 0:
            raise ValueError("gamma[0] must be positive")
        if any(g[i] < g[i + 1] for i in range(len(g) - 1)) or g[-1] < 0:
            raise ValueError("gamma must be non-increasing and non-negative")
        if any(d[i] < d[i + 1] for i in range(len(d) - 1)) or d[-1] < 0:
            raise ValueError("delta must be non-increasing and non-negative")
        if any(gi < di for gi, di in zip(g, d)):
            raise ValueError("each gamma[i] must dominate delta[i]")
        for name in ("beta", "eta", "p", "k", "z", "alpha", "f"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"parameter {name}={x} outside [0, 1]")
        if self.epsilon < 0 or self.mu < 0:
            raise ValueError("epsilon and mu must be non-negative")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")

    @property
    def n(self) -> int:
        return len(self.gamma)

    @property
    def v_max(self) -> float:
        """Upper bound of the vaccination-control box, 1/gamma1."""
        return 1.0 / self.gamma[0]


@dataclass(frozen=True)
class ControlSignal:
    """Sampled (v, u) control pair on a strictly increasing time grid.

    Values between samples are defined by linear interpolation.
    """

    grid: np.ndarray
    v: np.ndarray
    u: np.ndarray
    v_max: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.v, dtype=float)
        u = np.asarray(self.u, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "u", u)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("control grid needs at least two samples")
        if grid[0] != 0.0:
            raise ValueError("control grid must start at t=0")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("control grid must be strictly increasing")
        if v.shape != grid.shape or u.shape != grid.shape:
            raise ValueError("control samples must match the grid shape")
        if np.any(u < 0) or np.any(u > 1):
            raise ValueError("treatment control outside [0, 1]")
        if np.any(v < 0) or np.any(v > self.v_max * (1 + 1e-12)):
            raise ValueError(f"vaccination control outside [0, {self.v_max}]")

    @property
    def tau(self) -> float:
        return float(self.grid[-1])

    def at(self, t):
        """Linearly interpolated (v, u) at time(s) t."""
        return np.interp(t, self.grid, self.v), np.interp(t, self.grid, self.u)

    @classmethod
    def constant(cls, grid: np.ndarray, v: float, u: float, v_max: float = 1.0) -> "ControlSignal":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.full_like(grid, float(v)), np.full_like(grid, float(u)), v_max)


@dataclass(frozen=True)
class ImpulseEvent:
    """One arrival event: at time t, the S/E/A/I pools grow by rates lam."""

    time: float
    lam: tuple[float, float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        if len(self.lam) != 4:
            raise ValueError("impulse needs exactly four arrival rates")
        if any(not 0.0 <= x <= 1.0 for x in self.lam):
            raise ValueError("impulse rates must lie in [0, 1]")


@dataclass(frozen=True)
class ImpulseSchedule:
    """Ordered arrival events, all strictly inside the simulation horizon."""

    events: tuple[ImpulseEvent, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        times = [ev.time for ev in self.events]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("impulse times must be strictly increasing")
        if any(t <= 0 for t in times):
            raise ValueError("impulse times must be positive")

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(ev.time for ev in self.events)


@dataclass(frozen=True)
class Trajectory:
    """Time-gridded states; impulse nodes carry a pre-jump and a post-jump value.

    ``node_times`` has one entry per grid node.  ``states_pre[j]`` is the
    left-limit at node j and ``states_post[j]`` the right-limit; the two
    differ only at impulse nodes.  ``times``/``states`` expose the flattened
    row view in which every impulse time appears twice (pre then post).
    """

    node_times: np.ndarray
    states_pre: np.ndarray
    states_post: np.ndarray
    impulse_nodes: tuple[int, ...] = field(default_factory=tuple)
    states_mid: np.ndarray | None = None

    def __post_init__(self):
        if self.states_pre.shape != self.states_post.shape:
            raise ValueError("pre/post state arrays must have equal shape")
        if len(self.node_times) != self.states_pre.shape[0]:
            raise ValueError("grid and states must have the same length")

    @property
    def n(self) -> int:
        return self.states_pre.shape[1] - 6

    def _row_index(self):
        # Each node contributes one row, impulse nodes two (pre then post).
        dup = set(self.impulse_nodes)
        rows = []
        for j in range(len(self.node_times)):
            rows.append((j, "pre"))
            if j in dup:
                rows.append((j, "post"))
        return rows

    @property
    def times(self) -> np.ndarray:
        return np.array([self.node_times[j] for j, _ in self._row_index()])

    @property
    def states(self) -> np.ndarray:
        out = np.empty((len(self._row_index()), self.states_pre.shape[1]))
        for r, (j, side) in enumerate(self._row_index()):
            out[r] = self.states_pre[j] if side == "pre" else self.states_post[j]
        return out

    def state_at(self, node: int, side: str = "post") -> StateVector:
        arr = self.states_post if side == "post" else self.states_pre
        return StateVector.from_array(arr[node])

    def population(self, side: str = "post") -> np.ndarray:
        """Living population N at every grid node (deceased excluded)."""
        arr = self.states_post if side == "post" else self.states_pre
        return arr.sum(axis=1) - arr[:, D]


def transmissibility_force(state: StateVector, params: ModelParams) -> float:
    """Weighted infectious pressure epsilon*E + (1-q)*I + mu*A."""
    return params.epsilon * state.E + (1.0 - params.q) * state.I + params.mu * state.A


def _deriv(y: np.ndarray, v: float, u: float, pr: ModelParams) -> np.ndarray:
    """Right-hand side of the controlled dynamics on the canonical layout."""
    g, d = pr.gamma, pr.delta
    n = len(g)
    s, e, a, i = y[S], y[E], y[A], y[I]
    force = pr.epsilon * e + (1.0 - pr.q) * i + pr.mu * a
    infect = pr.beta * force * s
    leak = 0.0
    for j in range(n - 1):
        leak += d[j] * y[V0 + j]
    if pr.delta_n_to_exposed:
        leak += d[n - 1] * y[V0 + n - 1]
    out = np.empty_like(y)
    out[S] = -infect - g[0] * v * s
    out[E] = infect - pr.k * e + leak
    out[A] = (1.0 - pr.z) * pr.k * e - pr.eta * a
    out[I] = pr.z * pr.k * e + (1.0 - pr.p) * pr.eta * a - pr.f * i - u * i
    out[R] = pr.alpha * pr.f * i + u * i + pr.p * pr.eta * a
    out[D] = (1.0 - pr.alpha) * pr.f * i
    out[V0] = g[0] * v * s - g[1] * v * y[V0] - d[0] * y[V0]
    for j in range(1, n - 1):
        out[V0 + j] = g[j] * v * y[V0 + j - 1] - g[j + 1] * v * y[V0 + j] - d[j] * y[V0 + j]
    out[V0 + n - 1] = g[n - 1] * v * y[V0 + n - 2]
    if pr.delta_n_to_exposed:
        out[V0 + n - 1] -= d[n - 1] * y[V0 + n - 1]
    return out


def vector_field(state: StateVector, v: float, u: float, params: ModelParams) -> np.ndarray:
    """Time derivative of every compartment, in the canonical layout.

    Requires at least two dose compartments and a state whose dose count
    matches the parameters.
    """
    if state.n != params.n:
        raise ValueError(f"state has {state.n} dose compartments, params expect {params.n}")
    if not 0.0 <= u <= 1.0:
        raise ValueError("treatment control outside [0, 1]")
    if not 0.0 <= v <= params.v_max:
        raise ValueError(f"vaccination control outside [0, {params.v_max}]")
    return _deriv(state.as_array(), v, u, params)


def _apply_impulse(y: np.ndarray, lam) -> np.ndarray:
    out = y.copy()
    out[S] *= 1.0 + lam[0]
    out[E] *= 1.0 + lam[1]
    out[A] *= 1.0 + lam[2]
    out[I] *= 1.0 + lam[3]
    return out


def apply_impulse(state: StateVector, lam) -> StateVector:
    """Instantaneous arrival jump: S, E, A, I each scaled by (1 + lam_i)."""
    lam = tuple(float(x) for x in lam)
    if len(lam) != 4 or any(not 0.0 <= x <= 1.0 for x in lam):
        raise ValueError("impulse rates must be four values in [0, 1]")
    return StateVector.from_array(_apply_impulse(state.as_array(), lam))


def total_population(state: StateVector) -> float:
    """Living population: every compartment except the deceased pool."""
    return state.S + state.E + state.A + state.I + state.R + sum(state.V)


def basic_reproduction_number(params: ModelParams, n0: float) -> float:
    """Epidemic threshold value beta*N0*(z/(alpha*f) + mu*(1-z)/eta).

    Below 1 the infection dies out on its own; above 1 an outbreak grows
    until depletion or control.
    """
    if params.alpha * params.f == 0.0 or params.eta == 0.0:
        raise DegenerateParameterError(
            "reproduction number undefined when alpha*f = 0 or eta = 0"
        )
    return params.beta * n0 * (
        params.z / (params.alpha * params.f) + params.mu * (1.0 - params.z) / params.eta
    )
