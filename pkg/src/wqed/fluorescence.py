"""Coherent-drive dynamics: Bloch ODEs, regression correlators, Lindblad oracle.

For a coherent input of amplitude ``alpha`` at detuning ``k`` the atomic
expectation values obey

    d<s_z>/dt = -2i sqrt(2/tau) (a e^{-ikt} <s_+> - a* e^{+ikt} <s_->)
                - (2/tau)(<s_z> + 1)
    d<s_->/dt = (-i W - 1/tau) <s_-> + i sqrt(2/tau) a e^{-ikt} <s_z>

(and the conjugate for ``<s_+>``).  Internally everything is integrated in
the frame rotating at the drive frequency, where the system is an
autonomous affine ODE ``dy/dt = A y + b``; stored trajectories are
transformed back to the lab frame on output.  The integrator is fixed-step
RK4 so that repeated runs reproduce results bit-for-bit.

The first-order coherence of the transmitted field,

    G1(t, t') = |a|^2 e^{-ik(t-t')}
              + i a e^{-ikt} sqrt(2/tau) <s_+(t')>
              - i a* e^{+ikt'} sqrt(2/tau) <s_-(t)>
              + (2/tau) <s_+(t') s_-(t)>,

is assembled from one-time trajectories plus the two-time correlator
obtained from the quantum regression prescription.  An independent 2x2
density-matrix integrator for the equivalent master equation (decay rate
2/tau, drive coupling alpha*sqrt(2/tau)) serves as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidWindow, NonPhysicalState, StepTooLarge
from .model import SystemParams

__all__ = [
    "DriveParams",
    "BlochState",
    "CorrelationTrace",
    "bloch_rhs",
    "evolve_bloch",
    "steady_state",
    "regression_g1",
    "regression_g1_reversed",
    "output_photon_flux",
    "lindblad_oracle_step",
    "lindblad_trajectory",
]


@dataclass(frozen=True)
class DriveParams:
    """Coherent drive: amplitude ``alpha`` and detuning ``k_drive``."""

    alpha: complex
    k_drive: float


@dataclass(frozen=True)
class BlochState:
    """Lab-frame atomic expectation values at one instant."""

    sm: complex
    sp: complex
    sz: float
    t: float

    @staticmethod
    def ground(t: float = 0.0) -> "BlochState":
        return BlochState(0j, 0j, -1.0, t)

    @staticmethod
    def excited(t: float = 0.0) -> "BlochState":
        return BlochState(0j, 0j, 1.0, t)

    def vector(self) -> np.ndarray:
        return np.array([self.sm, self.sp, self.sz], dtype=complex)


@dataclass(frozen=True)
class CorrelationTrace:
    """G1(t, t') sampled at ``ts`` (all >= t_prime) for fixed ``t_prime``."""

    t_prime: float
    ts: np.ndarray = field(repr=False)
    g1: np.ndarray = field(repr=False)


def _coupling(params: SystemParams) -> float:
    return math.sqrt(2.0 / params.tau)


def bloch_rhs(state: BlochState, drive: DriveParams, params: SystemParams) -> np.ndarray:
    """Lab-frame time derivative ``(d<s_->, d<s_+>, d<s_z>)`` at ``state.t``."""
    c = _coupling(params)
    a_t = drive.alpha * np.exp(-1j * drive.k_drive * state.t)
    d_sm = (-1j * params.omega_atom - 1.0 / params.tau) * state.sm + 1j * c * a_t * state.sz
    d_sp = (1j * params.omega_atom - 1.0 / params.tau) * state.sp - 1j * c * np.conj(a_t) * state.sz
    d_sz = (
        -2j * c * (a_t * state.sp - np.conj(a_t) * state.sm)
        - (2.0 / params.tau) * (state.sz + 1.0)
    )
    return np.array([d_sm, d_sp, d_sz], dtype=complex)


def _rotating_generator(
    drive: DriveParams, params: SystemParams
) -> tuple[np.ndarray, np.ndarray]:
    """Affine generator (A, b) for y = (sm~, sp~, sz) in the drive frame."""
    c = _coupling(params)
    delta = drive.k_drive - params.omega_atom
    a = drive.alpha
    A = np.array(
        [
            [1j * delta - 1.0 / params.tau, 0.0, 1j * c * a],
            [0.0, -1j * delta - 1.0 / params.tau, -1j * c * np.conj(a)],
            [2j * c * np.conj(a), -2j * c * a, -2.0 / params.tau],
        ],
        dtype=complex,
    )
    b = np.array([0.0, 0.0, -2.0 / params.tau], dtype=complex)
    return A, b


def _to_rotating(state: BlochState, k: float) -> np.ndarray:
    phase = np.exp(1j * k * state.t)
    return np.array([state.sm * phase, state.sp / phase, state.sz], dtype=complex)


def _to_lab(y: np.ndarray, k: float, t: float) -> BlochState:
    phase = np.exp(-1j * k * t)
    return BlochState(complex(y[0] * phase), complex(y[1] / phase), float(y[2].real), t)


def _rk4_affine(
    A: np.ndarray, b: np.ndarray, y0: np.ndarray, t0: float, t1: float, dt: float
) -> list[tuple[float, np.ndarray]]:
    """Fixed-step RK4 for ``dy/dt = A y + b`` from t0 to t1; returns all steps.

    The requested step is rounded so the horizon divides evenly; the actual
    step is within one part in ``n`` of the request, keeping runs
    deterministic without a ragged final step.
    """
    span = t1 - t0
    if span == 0.0:
        return [(t0, y0.copy())]
    n = max(1, int(round(span / dt)))
    h = span / n
    rhs = lambda y: A @ y + b
    out = [(t0, y0.copy())]
    y = y0.copy()
    t = t0
    for i in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (i + 1) * h
        out.append((t, y.copy()))
    return out


def evolve_bloch(
    initial: BlochState,
    drive: DriveParams,
    params: SystemParams,
    t_end: float,
    dt: float,
) -> list[BlochState]:
    """Integrate the Bloch system from ``initial.t`` to ``t_end``.

    Returns the trajectory including the initial state, in the lab frame.

    Raises:
        StepTooLarge: if ``dt > tau/20`` (documented accuracy guard for the
            fixed-step integrator).
    """
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > params.tau / 20.0:
        raise StepTooLarge(f"dt={dt:g} exceeds tau/20={params.tau / 20.0:g}")
    A, b = _rotating_generator(drive, params)
    y0 = _to_rotating(initial, drive.k_drive)
    steps = _rk4_affine(A, b, y0, initial.t, t_end, dt)
    return [_to_lab(y, drive.k_drive, t) for t, y in steps]


def steady_state(drive: DriveParams, params: SystemParams, t: float = 0.0) -> BlochState:
    """Fixed point of the rotating-frame system, phased to the lab frame at ``t``."""
    A, b = _rotating_generator(drive, params)
    y = np.linalg.solve(A, -b)
    return _to_lab(y, drive.k_drive, t)


def output_photon_flux(state: BlochState, drive: DriveParams, params: SystemParams) -> float:
    """Instantaneous output flux ``<a_out^+ a_out>(t)`` for the given state."""
    c = _coupling(params)
    a_t = drive.alpha * np.exp(-1j * drive.k_drive * state.t)
    cross = 1j * c * (a_t * state.sp - np.conj(a_t) * state.sm)
    return float(abs(drive.alpha) ** 2 + cross.real + (2.0 / params.tau) * (state.sz + 1.0) / 2.0)


def _g1_window(t_prime: float, ts) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < t_prime - 1e-12):
        raise InvalidWindow("correlation times must not precede t_prime")
    return ts


def _propagate_to(
    A: np.ndarray, b: np.ndarray, y0: np.ndarray, t0: float, ts: np.ndarray, dt: float
) -> list[np.ndarray]:
    """Values of the affine flow at each requested time (monotone ts >= t0)."""
    values = []
    y = y0.copy()
    t = t0
    for target in ts:
        if target > t:
            y = _rk4_affine(A, b, y, t, float(target), dt)[-1][1]
            t = float(target)
        values.append(y.copy())
    return values


def regression_g1(
    drive: DriveParams,
    params: SystemParams,
    t_prime: float,
    ts,
    dt: float | None = None,
) -> CorrelationTrace:
    """First-order coherence G1(t, t') for t in ``ts`` (all >= t_prime).

    The system starts in the ground state at t = 0, evolves to ``t_prime``,
    and the two-time term ``<s_+(t') s_-(t)>`` is propagated with the same
    Bloch generator from the operator-product initial conditions
    ``s_+ s_- = (s_z + 1)/2``, ``s_+ s_+ = 0``, ``s_+ s_z = -s_+``.

    Raises:
        InvalidWindow: if any requested time precedes ``t_prime``.
    """
    ts = _g1_window(t_prime, ts)
    if dt is None:
        dt = params.tau / 100.0
    A, b = _rotating_generator(drive, params)
    k = drive.k_drive
    c = _coupling(params)

    y_tp = _rk4_affine(A, b, BlochState.ground().vector(), 0.0, t_prime, dt)[-1][1]
    state_tp = _to_lab(y_tp, k, t_prime)

    # Regression vector w = (<s_+(t')s_-(t)>, <s_+(t')s_+(t)>, <s_+(t')s_z(t)>)
    # in the rotating frame; the affine term is scaled by <s_+(t')>.
    w0 = np.array(
        [
            (state_tp.sz + 1.0) / 2.0 * np.exp(1j * k * t_prime),
            0.0,
            -state_tp.sp,
        ],
        dtype=complex,
    )
    w_vals = _propagate_to(A, b * state_tp.sp, w0, t_prime, ts, dt)
    y_vals = _propagate_to(A, b, y_tp, t_prime, ts, dt)

    g1 = np.empty(ts.shape, dtype=complex)
    for i, (t, w, y) in enumerate(zip(ts, w_vals, y_vals)):
        sm_t = y[0] * np.exp(-1j * k * t)
        corr = w[0] * np.exp(-1j * k * t)
        g1[i] = (
            abs(drive.alpha) ** 2 * np.exp(-1j * k * (t - t_prime))
            + 1j * drive.alpha * np.exp(-1j * k * t) * c * state_tp.sp
            - 1j * np.conj(drive.alpha) * np.exp(1j * k * t_prime) * c * sm_t
            + (2.0 / params.tau) * corr
        )
    return CorrelationTrace(t_prime=float(t_prime), ts=ts, g1=g1)


def regression_g1_reversed(
    drive: DriveParams,
    params: SystemParams,
    t_prime: float,
    ts,
    dt: float | None = None,
) -> CorrelationTrace:
    """G1(t', t) for t in ``ts`` (the conjugate-ordered correlator).

    Computed through an independent regression run for ``<s_+(t) s_-(t')>``
    (the fixed operator now sits on the right), so that hermiticity
    ``G1(t, t') = conj(G1(t', t))`` can be verified by comparing two genuine
    computations rather than by construction.
    """
    ts = _g1_window(t_prime, ts)
    if dt is None:
        dt = params.tau / 100.0
    A, b = _rotating_generator(drive, params)
    k = drive.k_drive
    c = _coupling(params)

    y_tp = _rk4_affine(A, b, BlochState.ground().vector(), 0.0, t_prime, dt)[-1][1]
    state_tp = _to_lab(y_tp, k, t_prime)

    # u = (<s_-(t)s_-(t')>, <s_+(t)s_-(t')>, <s_z(t)s_-(t')>): same generator,
    # affine term scaled by <s_-(t')>; initial values from s_- s_- = 0,
    # s_+ s_- = (s_z+1)/2, s_z s_- = -s_-.
    u0 = np.array(
        [
            0.0,
            (state_tp.sz + 1.0) / 2.0 * np.exp(-1j * k * t_prime),
            -state_tp.sm,
        ],
        dtype=complex,
    )
    u_vals = _propagate_to(A, b * state_tp.sm, u0, t_prime, ts, dt)
    y_vals = _propagate_to(A, b, y_tp, t_prime, ts, dt)

    g1 = np.empty(ts.shape, dtype=complex)
    for i, (t, u, y) in enumerate(zip(ts, u_vals, y_vals)):
        sp_t = y[1] * np.exp(1j * k * t)
        corr = u[1] * np.exp(1j * k * t)
        g1[i] = (
            abs(drive.alpha) ** 2 * np.exp(-1j * k * (t_prime - t))
            + 1j * drive.alpha * np.exp(-1j * k * t_prime) * c * sp_t
            - 1j * np.conj(drive.alpha) * np.exp(1j * k * t) * c * state_tp.sm
            + (2.0 / params.tau) * corr
        )
    return CorrelationTrace(t_prime=float(t_prime), ts=ts, g1=g1)


# --- Lindblad oracle -------------------------------------------------------
#
# Basis (|g>, |e>); rho is propagated in the rotating frame where
# H = (omega_atom - k_drive) s_+ s_- + g_d s_+ + g_d* s_- with
# g_d = alpha sqrt(2/tau), and the dissipator has rate 2/tau.

_SM = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_SP = _SM.conj().T
_N_OP = _SP @ _SM


def _lindblad_rhs(rho: np.ndarray, drive: DriveParams, params: SystemParams) -> np.ndarray:
    g_d = drive.alpha * _coupling(params)
    h = (params.omega_atom - drive.k_drive) * _N_OP + g_d * _SP + np.conj(g_d) * _SM
    gamma = 2.0 / params.tau
    comm = h @ rho - rho @ h
    diss = _SM @ rho @ _SP - 0.5 * (_N_OP @ rho + rho @ _N_OP)
    return -1j * comm + gamma * diss


def _check_physical(rho: np.ndarray) -> None:
    if rho.shape != (2, 2):
        raise NonPhysicalState(f"expected a 2x2 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise NonPhysicalState("density matrix is not Hermitian within 1e-10")
    if abs(np.trace(rho).real - 1.0) > 1e-10 or abs(np.trace(rho).imag) > 1e-10:
        raise NonPhysicalState("density matrix trace differs from 1 by more than 1e-10")
    half_tr = 0.5 * np.trace(rho).real
    radius = math.sqrt(
        (0.5 * (rho[0, 0].real - rho[1, 1].real)) ** 2 + abs(rho[0, 1]) ** 2
    )
    # The positivity tolerance matches the step's own output guarantee so
    # the integrator accepts its own trajectories near pure states.
    if half_tr - radius < -1e-9:
        raise NonPhysicalState("density matrix has an eigenvalue below -1e-9")


def lindblad_oracle_step(
    rho: np.ndarray, drive: DriveParams, params: SystemParams, dt: float
) -> np.ndarray:
    """Advance a rotating-frame density matrix by one RK4 step.

    Trace is preserved to roundoff (the generator is traceless and RK4
    combines trace-free increments); positivity holds within 1e-9 for
    ``dt <= tau/50``.

    Raises:
        NonPhysicalState: if the input violates hermiticity or unit trace
            beyond 1e-10, or positive semidefiniteness beyond 1e-9.
    """
    rho = np.asarray(rho, dtype=complex)
    _check_physical(rho)
    k1 = _lindblad_rhs(rho, drive, params)
    k2 = _lindblad_rhs(rho + 0.5 * dt * k1, drive, params)
    k3 = _lindblad_rhs(rho + 0.5 * dt * k2, drive, params)
    k4 = _lindblad_rhs(rho + dt * k3, drive, params)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rho_to_bloch(rho: np.ndarray, k: float, t: float) -> BlochState:
    sm_rot = complex(rho[1, 0])  # <s_-> = tr(rho |g><e|) = <e|rho|g>
    sz = float((rho[1, 1] - rho[0, 0]).real)
    sm_lab = sm_rot * np.exp(-1j * k * t)
    return BlochState(complex(sm_lab), complex(np.conj(sm_lab)), sz, t)


def lindblad_trajectory(
    drive: DriveParams,
    params: SystemParams,
    t_end: float,
    dt: float,
    rho0: np.ndarray | None = None,
) -> list[BlochState]:
    """Expectation-value trajectory of the density-matrix oracle (lab frame).

    Starts from the ground state unless ``rho0`` (rotating frame) is given;
    sampling instants match :func:`evolve_bloch` with the same ``dt``.
    """
    rho = np.diag([1.0, 0.0]).astype(complex) if rho0 is None else np.asarray(rho0, complex)
    n = max(1, int(round(t_end / dt)))
    h = t_end / n
    out = [_rho_to_bloch(rho, drive.k_drive, 0.0)]
    for i in range(n):
        rho = lindblad_oracle_step(rho, drive, params, h)
        out.append(_rho_to_bloch(rho, drive.k_drive, (i + 1) * h))
    return out
