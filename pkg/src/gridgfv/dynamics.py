"""Linearized frequency dynamics under deterministic and stochastic injections.

The dynamic states live at the generator internal nodes only: load buses are
algebraic and their frequencies are reconstructed through the participation
matrix (f_bus = D @ f_gen), so the state dimension stays at 2 * n_gen.  The
disturbance bus is retained through the reduction as a pure injection port.

Wind speed follows a mean-reverting Ornstein-Uhlenbeck process sampled with
the exact discretization (unconditionally stable, exact stationary moments at
any step), and maps to power through a clamped cubic turbine law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .case_model import NetworkCase
from .errors import GridGfvError, SimulationUnstableError
from .powerflow import InternalEmfs, PowerFlowSolution, build_ybus
from .reduction import (
    AugmentedAdmittance,
    NodeKey,
    ParticipationMatrix,
    augment_internal_nodes,
    frequency_participation,
    kron_reduce,
)

OMEGA_SYNC = 2.0 * math.pi * 60.0  # rad/s at 60 Hz nominal


@dataclass(frozen=True)
class OuParams:
    """Mean-reverting wind-speed process parameters.

    Defaults give a wind-speed variance of b^2/(2*alpha) ~ 0.049 (m/s)^2
    around a 14 m/s mean.
    """

    mu: float = 14.0
    alpha: float = 0.1
    b: float = 0.099
    dt: float = 0.01
    seed: int | tuple = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.b < 0:
            raise ValueError(f"b must be non-negative, got {self.b}")


@dataclass(frozen=True)
class TurbineParams:
    """Cubic-law wind turbine: P(v) = rated * clamp((v/v_rated)^3, 0, 1)."""

    rated_power: float = 1.0  # pu on the system base
    v_rated: float = 15.0  # m/s
    v_ref: float = 14.0  # m/s; deviations are taken about P(v_ref)


@dataclass(frozen=True)
class SwingModel:
    """Linearized multi-machine model at one operating point.

    m holds 2H per machine, damp the damping coefficients.  l_red is the
    operating-point-weighted Laplacian over internal nodes plus all network
    buses (every bus stays available as an injection port); simulate() does
    the final algebraic elimination per injection node.
    """

    m: np.ndarray
    damp: np.ndarray
    l_red: np.ndarray
    nodes: tuple[NodeKey, ...]
    participation: ParticipationMatrix
    omega_s: float
    bus_ids: tuple[int, ...]

    @property
    def gen_rows(self) -> list[int]:
        return [i for i, (kind, _) in enumerate(self.nodes) if kind == "gen"]


@dataclass(frozen=True)
class Trajectory:
    """One realization: shared time grid, per-machine and per-bus frequency
    deviation series (pu), COI frequency, and the applied injection."""

    t: np.ndarray
    gen_freq: np.ndarray  # (n_gen, n_t)
    bus_freq: np.ndarray  # (n_bus, n_t)
    coi_freq: np.ndarray  # (n_t,)
    injection: np.ndarray  # (n_t,)
    bus_ids: tuple[int, ...]


def simulate_ou(params: OuParams, n_steps: int) -> np.ndarray:
    """Exact-discretization OU path of n_steps + 1 samples starting at mu.

    eta_{k+1} = mu + (eta_k - mu) e^{-a dt} + b sqrt((1 - e^{-2 a dt})/(2a)) xi_k
    with xi_k standard normal from the seeded stream.  Deterministic given
    (params, n_steps).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rho = math.exp(-params.alpha * params.dt)
    sigma = params.b * math.sqrt((1.0 - rho * rho) / (2.0 * params.alpha))
    rng = np.random.default_rng(params.seed)
    xi = rng.standard_normal(n_steps)
    deviations = lfilter([sigma], [1.0, -rho], xi)
    out = np.empty(n_steps + 1)
    out[0] = params.mu
    out[1:] = params.mu + deviations
    return out


def wind_to_power(
    v: np.ndarray, rated_power: float, v_rated: float, v_ref: float
) -> np.ndarray:
    """Power deviation series for a wind-speed series, about P(v_ref)."""
    if v_rated <= 0:
        raise ValueError(f"v_rated must be positive, got {v_rated}")
    v = np.asarray(v, dtype=float)
    p = rated_power * np.clip((v / v_rated) ** 3, 0.0, 1.0)
    p_ref = rated_power * min(max((v_ref / v_rated) ** 3, 0.0), 1.0)
    return p - p_ref


def _augmented_laplacian(
    case: NetworkCase,
    sol: PowerFlowSolution,
    emfs: InternalEmfs,
    aug: AugmentedAdmittance,
) -> np.ndarray:
    """Synchronizing-coefficient Laplacian over buses + internal nodes.

    Same weighting as the bus Laplacian, extended with the machine EMFs:
    w_ij = |U_i||U_j| Im(Y_ij) cos(a_i - a_j) on every coupled pair, where U
    and a take bus voltage/angle or internal EMF/rotor angle as appropriate.
    """
    n = case.n_bus
    mag = np.concatenate([sol.vm, emfs.e_mag])
    ang = np.concatenate([sol.va, emfs.delta0])
    b_off = aug.matrix.imag.copy()
    np.fill_diagonal(b_off, 0.0)
    w = (mag[:, None] * mag[None, :]) * b_off * np.cos(ang[:, None] - ang[None, :])
    w = 0.5 * (w + w.T)
    return np.diag(w.sum(axis=1)) - w


def build_swing_model(
    case: NetworkCase,
    sol: PowerFlowSolution,
    emfs: InternalEmfs,
    default_damping: float = 1.0,
    omega_s: float = OMEGA_SYNC,
) -> SwingModel:
    """Assemble the second-order model M dw/dt = dP - D w - L_red theta,
    d theta/dt = omega_s * w over generator internal nodes.

    Machines missing a damping value in the case file get default_damping.
    """
    m = np.array([2.0 * g.h for g in case.generators])
    damp = np.array(
        [g.d if g.d is not None else default_damping for g in case.generators]
    )
    ybus = build_ybus(case)
    aug = augment_internal_nodes(ybus, case)
    lap = _augmented_laplacian(case, sol, emfs, aug)
    return SwingModel(
        m=m,
        damp=damp,
        l_red=lap,
        nodes=aug.nodes,
        participation=frequency_participation(aug),
        omega_s=omega_s,
        bus_ids=sol.bus_ids,
    )


def _resolve_node(model: SwingModel, injection_bus) -> NodeKey:
    if isinstance(injection_bus, (int, np.integer)):
        key: NodeKey = ("bus", int(injection_bus))
    else:
        key = (injection_bus[0], int(injection_bus[1]))
    if key not in model.nodes:
        raise GridGfvError(f"unknown injection node {injection_bus!r}")
    return key


def _injection_reduction(model: SwingModel, node: NodeKey):
    """Laplacian over internal nodes and the injection gain vector.

    A bus port is eliminated algebraically: with zero inertia there, its
    angle tracks 0 = dP - L_bG theta_G - L_bb theta_b, which folds the
    injection onto the machines with weights -L_Gb / L_bb (summing to 1).
    An internal-node port injects directly on that machine.
    """
    g_rows = model.gen_rows
    if node[0] == "gen":
        l_red = kron_reduce(model.l_red, g_rows)
        w = np.zeros(len(g_rows))
        w[node[1]] = 1.0
        return l_red, w
    b_row = model.nodes.index(node)
    # kron_reduce keeps original row order: bus rows precede internal-node
    # rows in the augmented ordering, so the bus port lands in row 0.
    kept = kron_reduce(model.l_red, g_rows + [b_row])
    l_gb = kept[1:, 0]
    l_bb = kept[0, 0]
    l_red = kept[1:, 1:] - np.outer(l_gb, l_gb) / l_bb
    w = -l_gb / l_bb
    return l_red, w


def _rk4_step_operators(a: np.ndarray, g: np.ndarray, dt: float):
    """Classical RK4 update for the LTI system dx/dt = A x + g u(t), with the
    input linearly interpolated between samples, folded into constant
    matrices: x_{k+1} = R x_k + s0 u_k + s1 u_{k+1}."""
    n = a.shape[0]
    eye = np.eye(n)
    a2 = a @ a
    a3 = a2 @ a
    a4 = a3 @ a
    r = eye + dt * a + (dt**2 / 2) * a2 + (dt**3 / 6) * a3 + (dt**4 / 24) * a4
    ag = a @ g
    a2g = a2 @ g
    a3g = a3 @ g
    b_start = (dt / 6) * (g + dt * ag + (dt**2 / 2) * a2g + (dt**3 / 4) * a3g)
    b_mid = (dt / 6) * (4 * g + 2 * dt * ag + (dt**2 / 2) * a2g)
    b_end = (dt / 6) * g
    return r, b_start + 0.5 * b_mid, b_end + 0.5 * b_mid


def simulate(model: SwingModel, injection_bus, dp: np.ndarray, dt: float) -> Trajectory:
    """Integrate the swing model for one injection series.

    injection_bus is a network bus id, or a ("gen", k) node key to drive a
    machine directly.  dp samples live on the time grid t_k = k*dt; the
    series length fixes the horizon.  Fixed-step 4th-order (RK4) integration;
    zero input from zero state stays identically zero.
    """
    dp = np.asarray(dp, dtype=float)
    if dp.ndim != 1 or len(dp) < 1:
        raise ValueError("dp must be a non-empty 1-d series")
    node = _resolve_node(model, injection_bus)
    l_red, w = _injection_reduction(model, node)
    ng = len(model.m)
    a = np.zeros((2 * ng, 2 * ng))
    a[:ng, ng:] = model.omega_s * np.eye(ng)
    a[ng:, :ng] = -l_red / model.m[:, None]
    a[ng:, ng:] = np.diag(-model.damp / model.m)
    g = np.zeros(2 * ng)
    g[ng:] = w / model.m

    r, s0, s1 = _rk4_step_operators(a, g, dt)
    n_t = len(dp)
    omega = np.zeros((ng, n_t))
    x = np.zeros(2 * ng)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_t - 1):
            x = r @ x + s0 * dp[k] + s1 * dp[k + 1]
            omega[:, k + 1] = x[ng:]

    if not np.all(np.isfinite(omega)):
        bad = np.nonzero(~np.isfinite(omega).all(axis=0))[0][0]
        raise SimulationUnstableError(
            f"non-finite state at t = {bad * dt:.4f} s; the linear model is "
            "unstable at this step size",
            first_time=bad * dt,
        )

    h_weights = 0.5 * model.m
    coi = (h_weights @ omega) / h_weights.sum()
    bus_freq = model.participation.d @ omega
    return Trajectory(
        t=np.arange(n_t) * dt,
        gen_freq=omega,
        bus_freq=bus_freq,
        coi_freq=coi,
        injection=dp.copy(),
        bus_ids=model.bus_ids,
    )


def _homogeneous(name: str, value) -> float:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if not np.all(arr == arr.flat[0]):
        raise ValueError(f"{name} must be identical at every node, got {arr}")
    return float(arr.flat[0])


def closed_form_response(
    l_red: np.ndarray,
    m: float,
    d: float,
    disturbance_node: int,
    dp_magnitude: float,
    t_grid: np.ndarray,
) -> np.ndarray:
    """Homogeneous-system frequency response to a power step, in closed form.

    For a network with identical inertia m and damping d at every node of
    l_red, a step dP applied at node b from rest gives, per mode alpha with
    gamma = d/m and s_a^2 = lambda_a/m - gamma^2/4:

        df_i(t) = (dP/m) e^{-gamma t/2} sum_a phi_ai phi_ab sin(s_a t)/s_a

    Overdamped modes continue with sinh; a zero discriminant uses the limit
    kernel t.  Returns (n_nodes, n_t); df is the angle rate in the same
    units the Laplacian/inertia pair implies.
    """
    m = _homogeneous("m", m)
    d = _homogeneous("d", d)
    if m <= 0:
        raise ValueError("m must be positive")
    if d < 0:
        raise ValueError("d must be non-negative")

    t = np.asarray(t_grid, dtype=float)
    lam, phi = np.linalg.eigh(np.asarray(l_red, dtype=float))
    gamma = d / m
    disc = lam / m - gamma * gamma / 4.0
    scale = max(float(np.max(np.abs(disc))), 1.0)
    kernels = np.empty((len(lam), len(t)))
    for a, da in enumerate(disc):
        if da > 1e-12 * scale:
            s = math.sqrt(da)
            kernels[a] = np.exp(-gamma * t / 2) * np.sin(s * t) / s
        elif da < -1e-12 * scale:
            s = math.sqrt(-da)  # s <= gamma/2 since lambda >= 0
            kernels[a] = (np.exp((s - gamma / 2) * t) - np.exp(-(s + gamma / 2) * t)) / (2 * s)
        else:
            kernels[a] = np.exp(-gamma * t / 2) * t
    weights = phi[disturbance_node, :]
    return (dp_magnitude / m) * (phi * weights[None, :]) @ kernels
