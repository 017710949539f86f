"""Sensor-side steady-state Kalman filter and controller-side estimate.

Slot micro-order used by the simulator:

1. plant emits ``y_k``
2. sensor time-update (from ``u_{k-1}``) and measurement-update
3. scheduler decides the channel assignment
4. channel realizes the drops
5. controller receives or counts a miss
6. ``u_k = L x_hat`` is applied
7. controller time-update ``x_hat <- A x_hat + B u_k``

The innovation accumulator ``e_check`` tracks ``x_post - x_hat`` exactly:
it is multiplied by ``A`` at each time-update, gains ``K * innovation`` at
each measurement-update and is zeroed on delivery.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import LoopSpec
from .synthesis import LoopSynthesis, closed_loop_matrix, cov_propagate


@dataclass(frozen=True, eq=False)
class SensorFilterState:
    x_pred: np.ndarray
    x_post: np.ndarray
    e_check: np.ndarray


@dataclass(frozen=True, eq=False)
class ControllerState:
    x_hat: np.ndarray
    t_since: int
    last_rx: np.ndarray


def init_sensor(loop: LoopSpec) -> SensorFilterState:
    x0 = loop.x0_mean.astype(float)
    return SensorFilterState(x_pred=x0.copy(), x_post=x0.copy(), e_check=np.zeros(loop.n))


def init_controller(loop: LoopSpec) -> ControllerState:
    x0 = loop.x0_mean.astype(float)
    return ControllerState(x_hat=x0.copy(), t_since=0, last_rx=x0.copy())


def sensor_step(state: SensorFilterState, y_k, u_prev, synth: LoopSynthesis,
                loop: LoopSpec) -> SensorFilterState:
    """Advance the sensor filter by one slot.

    ``u_prev`` is the input applied in the previous slot; pass ``None`` in the
    first slot, where ``state.x_pred`` already holds the prior mean.
    """
    if u_prev is None:
        x_pred = state.x_pred
        e_check = state.e_check
    else:
        x_pred = loop.A @ state.x_post + loop.B @ np.asarray(u_prev, dtype=float).reshape(-1)
        e_check = loop.A @ state.e_check
    correction = synth.K_gain @ (np.asarray(y_k, dtype=float).reshape(-1) - loop.C @ x_pred)
    return SensorFilterState(x_pred=x_pred, x_post=x_pred + correction, e_check=e_check + correction)


def sensor_on_delivery(state: SensorFilterState) -> SensorFilterState:
    return SensorFilterState(x_pred=state.x_pred, x_post=state.x_post, e_check=np.zeros(state.e_check.shape))


def controller_on_receive(ctrl: ControllerState, x_sensor_post) -> ControllerState:
    x = np.array(x_sensor_post, dtype=float)
    return ControllerState(x_hat=x, t_since=0, last_rx=x.copy())


def controller_on_miss(ctrl: ControllerState) -> ControllerState:
    # x_hat already carries the propagated prior from the last time-update
    return ControllerState(x_hat=ctrl.x_hat, t_since=ctrl.t_since + 1, last_rx=ctrl.last_rx)


def controller_time_update(ctrl: ControllerState, u, loop: LoopSpec) -> ControllerState:
    x_hat = loop.A @ ctrl.x_hat + loop.B @ np.asarray(u, dtype=float).reshape(-1)
    return ControllerState(x_hat=x_hat, t_since=ctrl.t_since, last_rx=ctrl.last_rx)


def controller_predict(ctrl: ControllerState, synth: LoopSynthesis,
                       loop: LoopSpec) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form controller estimate ``(A+BL)^t last_rx`` and covariance ``h^t(P_bar)``.

    Agrees with the recursively maintained ``x_hat`` from the first reception on.
    """
    t = ctrl.t_since
    x = np.linalg.matrix_power(closed_loop_matrix(loop, synth), t) @ ctrl.last_rx
    return x, cov_propagate(synth.P_bar, t, loop.A, loop.W)

