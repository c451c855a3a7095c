"""
Kinematic Bicycle Models

Time-domain model for forward simulation, spatial (arclength) model in
path-aligned coordinates, its linearisation and exact zero-order-hold
discretisation along a reference frame, and the saturated-steering study.

Units are SI throughout: metres, radians, seconds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InfeasibleReference, ModelSingularity
from .geometry import ReferenceFrame

logger = logging.getLogger(__name__)

NOMINAL_STEERING_TOL = 1e-6
RK4_SUBSTEPS = 10


@dataclass(frozen=True)
class VehicleParams:
    """Wheelbase, steering box, steering-rate box and reference speed"""

    wheelbase: float
    delta_max: float
    ddelta_max: float
    v_ref: float
    delta_min: Optional[float] = None
    ddelta_min: Optional[float] = None

    def __post_init__(self):
        if self.delta_min is None:
            object.__setattr__(self, "delta_min", -self.delta_max)
        if self.ddelta_min is None:
            object.__setattr__(self, "ddelta_min", -self.ddelta_max)
        if not self.wheelbase > 0:
            raise ValueError(f"wheelbase must be positive, got {self.wheelbase}")
        if not 0 < self.delta_max < math.pi / 2:
            raise ValueError(f"delta_max must lie in (0, pi/2), got {self.delta_max}")
        if not -math.pi / 2 < self.delta_min < self.delta_max:
            raise ValueError(f"delta_min must lie in (-pi/2, delta_max), got {self.delta_min}")
        if not self.ddelta_max > 0 or not self.ddelta_min < 0:
            raise ValueError("Steering-rate bounds must straddle zero")
        if not self.v_ref > 0:
            raise ValueError(f"v_ref must be positive, got {self.v_ref}")

    @property
    def min_turning_radius(self) -> float:
        return self.wheelbase / math.tan(self.delta_max)

    def rate_step_bounds(self, ds):
        """Bounds on the steering change over arclength ds at v_ref"""
        ds = np.asarray(ds, dtype=float)
        return ds * self.ddelta_min / self.v_ref, ds * self.ddelta_max / self.v_ref

    def steering_for_curvature(self, kappa):
        """Steady-state steering angle that drives curvature kappa"""
        return np.arctan(self.wheelbase * np.asarray(kappa, dtype=float))


@dataclass(frozen=True)
class TimeState:
    x: float
    y: float
    psi: float
    delta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.delta])


@dataclass(frozen=True)
class SpatialState:
    """Heading error and lateral deviation relative to a reference frame"""
    e_psi: float = 0.0
    e_y: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.e_psi) and math.isfinite(self.e_y)):
            raise ValueError(f"Non-finite spatial state ({self.e_psi}, {self.e_y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.e_psi, self.e_y])


def time_derivative(state: TimeState, v: float, delta: float, params: VehicleParams) -> Tuple[float, float, float]:
    """(x', y', psi') of the time-domain bicycle model"""
    return (
        v * math.cos(state.psi),
        v * math.sin(state.psi),
        v / params.wheelbase * math.tan(delta),
    )


def _as_state(z) -> Tuple[float, float]:
    if isinstance(z, SpatialState):
        return z.e_psi, z.e_y
    e_psi, e_y = z
    return float(e_psi), float(e_y)


def spatial_derivative(z, delta: float, kappa: float, params: VehicleParams) -> Tuple[float, float]:
    """
    (e_psi', e_y') with respect to reference arclength.

    e_psi' = (1 - e_y*kappa) tan(delta) / (l cos e_psi) - kappa
    e_y'   = (1 - e_y*kappa) tan(e_psi)
    """
    e_psi, e_y = _as_state(z)
    scale = 1.0 - e_y * kappa
    if scale <= 0.0:
        raise ModelSingularity(f"Lateral deviation {e_y:.3f} m reaches the curvature centre (kappa={kappa:.4f})")
    if abs(e_psi) >= math.pi / 2:
        raise ModelSingularity(f"Heading error {e_psi:.3f} rad is perpendicular to the reference")
    d_e_psi = scale * math.tan(delta) / (params.wheelbase * math.cos(e_psi)) - kappa
    d_e_y = scale * math.tan(e_psi)
    return d_e_psi, d_e_y


def spatial_jacobians(z, delta: float, kappa: float, params: VehicleParams) -> Tuple[np.ndarray, np.ndarray]:
    """Analytic Jacobians (df/dz, df/ddelta) of spatial_derivative"""
    e_psi, e_y = _as_state(z)
    l = params.wheelbase
    scale = 1.0 - e_y * kappa
    cos_psi = math.cos(e_psi)
    tan_delta = math.tan(delta)
    A = np.array([
        [scale * tan_delta * math.sin(e_psi) / (l * cos_psi ** 2), -kappa * tan_delta / (l * cos_psi)],
        [scale / cos_psi ** 2, -kappa * math.tan(e_psi)],
    ])
    B = np.array([scale / (l * cos_psi * math.cos(delta) ** 2), 0.0])
    return A, B


def zoh_matrices(a: float, b: float, w: float, ds: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Exact discretisation of z' = [[0, -a], [1, 0]] z + [b, 0] delta + [w, 0]
    over ds for a >= 0. np.sinc keeps the straight-line limit exact.
    """
    omega = math.sqrt(max(a, 0.0))
    sin_term = ds * float(np.sinc(omega * ds / math.pi))
    cos_term = math.cos(omega * ds)
    half = 0.5 * ds * ds * float(np.sinc(omega * ds / (2.0 * math.pi))) ** 2
    A_d = np.array([[cos_term, -a * sin_term], [sin_term, cos_term]])
    B_d = np.array([sin_term * b, half * b])
    d = np.array([sin_term * w, half * w])
    return A_d, B_d, d


@dataclass(frozen=True)
class LtvSpatialSystem:
    """
    z_{j+1} = A_j z_j + B_j delta_j + d_j for intervals j = 0..N-1,
    with z = (e_psi, e_y).
    """

    A: np.ndarray
    B: np.ndarray
    d: np.ndarray
    nominal_steering: np.ndarray
    spacing: np.ndarray
    curvature: np.ndarray

    def __post_init__(self):
        n = len(self.spacing)
        if self.A.shape != (n, 2, 2) or self.B.shape != (n, 2) or self.d.shape != (n, 2):
            raise ValueError("Inconsistent LTV system dimensions")
        if self.nominal_steering.shape != (n,) or self.curvature.shape != (n,):
            raise ValueError("Inconsistent LTV system dimensions")
        for arr in (self.A, self.B, self.d):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LTV system matrices must be finite")

    @property
    def n_intervals(self) -> int:
        return len(self.spacing)

    def propagate(self, z0, steering: Sequence[float]) -> np.ndarray:
        """States (N+1, 2) under the linear model"""
        steering = np.asarray(steering, dtype=float)
        if steering.shape != (self.n_intervals,):
            raise ValueError(f"Expected {self.n_intervals} steering values, got {steering.shape}")
        states = np.empty((self.n_intervals + 1, 2))
        states[0] = np.asarray(_as_state(z0))
        for j in range(self.n_intervals):
            states[j + 1] = self.A[j] @ states[j] + self.B[j] * steering[j] + self.d[j]
        return states

    def condense(self, z0) -> Tuple[np.ndarray, np.ndarray]:
        """
        Eliminate the states: z_k = M[k] @ delta + c[k].
        Returns M with shape (N+1, 2, N) and c with shape (N+1, 2).
        """
        n = self.n_intervals
        M = np.zeros((n + 1, 2, n))
        c = np.zeros((n + 1, 2))
        c[0] = np.asarray(_as_state(z0))
        for k in range(n):
            M[k + 1] = self.A[k] @ M[k]
            M[k + 1][:, k] += self.B[k]
            c[k + 1] = self.A[k] @ c[k] + self.d[k]
        return M, c


def linearize_and_discretize(frame: ReferenceFrame, params: VehicleParams,
                             clip_nominal: bool = False) -> LtvSpatialSystem:
    """
    Linearise the spatial model at (e_psi, e_y) = 0 with the steering that
    tracks each interval's curvature, then discretise each interval exactly.

    Nominal steering beyond the box raises InfeasibleReference unless
    clip_nominal is set; then the operating point saturates and the
    model residual at it is carried as an affine term.
    """
    kappa = frame.interval_curvature()
    spacing = frame.spacing
    nominal = np.arctan(params.wheelbase * kappa)
    outside = (nominal > params.delta_max + NOMINAL_STEERING_TOL) | (nominal < params.delta_min - NOMINAL_STEERING_TOL)
    if np.any(outside):
        index = int(np.argmax(outside))
        if not clip_nominal:
            raise InfeasibleReference(
                f"Reference curvature {kappa[index]:.4f} 1/m at interval {index} needs "
                f"{math.degrees(nominal[index]):.2f} deg of steering", index=index)
        logger.debug(f"Saturating nominal steering on {int(outside.sum())} of {len(kappa)} intervals")
    nominal = np.clip(nominal, params.delta_min, params.delta_max)

    n = len(kappa)
    A = np.empty((n, 2, 2))
    B = np.empty((n, 2))
    d = np.empty((n, 2))
    for j in range(n):
        tan_nominal = math.tan(nominal[j])
        a = kappa[j] * tan_nominal / params.wheelbase
        b = 1.0 / (params.wheelbase * math.cos(nominal[j]) ** 2)
        residual = tan_nominal / params.wheelbase - kappa[j]
        A[j], B[j], d[j] = zoh_matrices(a, b, residual - b * nominal[j], spacing[j])
    return LtvSpatialSystem(A=A, B=B, d=d, nominal_steering=nominal,
                            spacing=np.array(spacing), curvature=np.array(kappa))


def rollout_spatial(frame: ReferenceFrame, z0, steering: Sequence[float], params: VehicleParams,
                    substeps: int = RK4_SUBSTEPS) -> np.ndarray:
    """
    Integrate the nonlinear spatial model with fixed-step RK4, holding the
    steering and the interval curvature constant per interval.
    Returns states (N+1, 2) as rows (e_psi, e_y).
    """
    steering = np.asarray(steering, dtype=float)
    kappa = frame.interval_curvature()
    if steering.shape != kappa.shape:
        raise ValueError(f"Expected {len(kappa)} steering values, got {steering.shape}")
    states = np.empty((len(kappa) + 1, 2))
    z = np.asarray(_as_state(z0), dtype=float)
    states[0] = z

    for j, (delta, k, ds) in enumerate(zip(steering, kappa, frame.spacing)):
        h = ds / substeps

        def f(state):
            return np.array(spatial_derivative(state, delta, k, params))

        try:
            for _ in range(substeps):
                k1 = f(z)
                k2 = f(z + 0.5 * h * k1)
                k3 = f(z + 0.5 * h * k2)
                k4 = f(z + h * k3)
                z = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        except ModelSingularity as e:
            raise ModelSingularity(f"Rollout failed on interval {j}: {e}", index=j) from e
        states[j + 1] = z
    return states


def integrate_time_step(state: TimeState, v: float, delta: float, dt: float, params: VehicleParams) -> TimeState:
    """Exact constant-steering step of the time-domain model (circular arc)"""
    yaw_rate = v * math.tan(delta) / params.wheelbase
    turn = yaw_rate * dt
    if abs(turn) < 1e-12:
        x = state.x + v * dt * math.cos(state.psi)
        y = state.y + v * dt * math.sin(state.psi)
    else:
        radius = v / yaw_rate
        x = state.x + radius * (math.sin(state.psi + turn) - math.sin(state.psi))
        y = state.y + radius * (math.cos(state.psi) - math.cos(state.psi + turn))
    return TimeState(x, y, state.psi + turn, delta)


def simulate_time(state0: TimeState, v: float, delta: float, dt: float, n_steps: int,
                  params: VehicleParams) -> np.ndarray:
    """Constant-steering rollout; rows (x, y, psi, delta)"""
    trajectory = [state0.as_array()]
    state = state0
    for _ in range(n_steps):
        state = integrate_time_step(state, v, delta, dt, params)
        trajectory.append(state.as_array())
    return np.array(trajectory)


@dataclass(frozen=True)
class SaturationResult:
    trajectory: np.ndarray
    envelope_radius: float
    envelope_centre: np.ndarray
    transition_length: float
    steady_radius: float
    delta0: float


def saturated_steering_simulation(params: VehicleParams, T_s: float, v: float, delta0: float,
                                  max_steps: int = 10_000_000) -> SaturationResult:
    """
    Steer as fast as possible toward delta_max from delta0, sampled every
    T_s, until the heading has turned a full circle to the left.

    The envelope circle is centred on the steady-turn centre; its radius is
    the largest distance of the trajectory from that centre.
    """
    if not T_s > 0:
        raise ValueError(f"T_s must be positive, got {T_s}")
    if not v > 0:
        raise ValueError(f"v must be positive, got {v}")
    if not params.delta_min - 1e-12 <= delta0 <= params.delta_max + 1e-12:
        raise ValueError(f"delta0 {delta0} outside the steering box")

    state = TimeState(0.0, 0.0, 0.0, float(delta0))
    rows = [state.as_array()]
    lowest_heading = 0.0
    travelled = 0.0
    transition_length = 0.0 if delta0 >= params.delta_max else None
    delta = float(delta0)

    for _ in range(max_steps):
        state = integrate_time_step(state, v, delta, T_s, params)
        rows.append(state.as_array())
        travelled += v * T_s
        lowest_heading = min(lowest_heading, state.psi)
        if state.psi - lowest_heading >= 2.0 * math.pi:
            break
        delta = min(delta + T_s * params.ddelta_max, params.delta_max)
        if transition_length is None and delta >= params.delta_max:
            transition_length = travelled
    else:
        raise RuntimeError(f"Saturated steering did not complete a turn within {max_steps} steps")

    trajectory = np.array(rows)
    steady_radius = params.wheelbase / math.tan(state.delta)
    centre = np.array([
        state.x - steady_radius * math.sin(state.psi),
        state.y + steady_radius * math.cos(state.psi),
    ])
    radius = float(np.max(np.hypot(trajectory[:, 0] - centre[0], trajectory[:, 1] - centre[1])))
    logger.debug(f"Saturated turn from delta0={math.degrees(delta0):.1f} deg: envelope {radius:.3f} m")
    return SaturationResult(
        trajectory=trajectory,
        envelope_radius=radius,
        envelope_centre=centre,
        transition_length=float(transition_length if transition_length is not None else travelled),
        steady_radius=steady_radius,
        delta0=float(delta0),
    )


def velocity_dependent_rate_bounds(frame: ReferenceFrame, params: VehicleParams, speeds) -> Tuple[np.ndarray, np.ndarray]:
    """Per-interval steering change bounds D_j * rate / v_j"""
    spacing = frame.spacing
    speeds = np.broadcast_to(np.asarray(speeds, dtype=float), spacing.shape)
    if np.any(speeds <= 0):
        raise ValueError("Speeds must be positive")
    return spacing * params.ddelta_min / speeds, spacing * params.ddelta_max / speeds


def state_dependent_rate_bounds(frame: ReferenceFrame, states, params: VehicleParams,
                                speeds=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-interval steering change bounds including the ratio between
    reference arclength and travelled arclength at the interval start state.
    """
    states = np.asarray(states, dtype=float)
    kappa = frame.interval_curvature()
    if speeds is None:
        speeds = params.v_ref
    lower, upper = velocity_dependent_rate_bounds(frame, params, speeds)
    e_psi = states[:len(kappa), 0]
    e_y = states[:len(kappa), 1]
    factor = (1.0 - e_y * kappa) / np.cos(e_psi)
    return lower * factor, upper * factor


def count_rate_violations(steering, lower, upper, tol: float = 1e-9) -> int:
    """Count steering changes outside [lower_j, upper_j]"""
    steps = np.diff(np.asarray(steering, dtype=float))
    lower = np.asarray(lower, dtype=float)[:len(steps)]
    upper = np.asarray(upper, dtype=float)[:len(steps)]
    return int(np.sum((steps < lower - tol) | (steps > upper + tol)))
