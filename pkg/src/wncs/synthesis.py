"""Offline LQG synthesis: control DARE, steady-state Kalman filter, error-cost weight.

Both Riccati equations are solved by iterating their exact recursions until
the Frobenius step falls below ``tol * (1 + ||X||_F)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NumericalError
from .scenario import LoopSpec

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10**6
COND_LIMIT = 1e12
_BLOWUP = 1e150


@dataclass(frozen=True, eq=False)
class LoopSynthesis:
    Pi_inf: np.ndarray
    L_inf: np.ndarray
    Gamma_inf: np.ndarray
    P_bar: np.ndarray
    K_gain: np.ndarray


def _solve_sym(S: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if np.linalg.cond(S) > COND_LIMIT:
        raise NumericalError(f"{what} is numerically singular (condition number > {COND_LIMIT:g})")
    return np.linalg.solve(S, rhs)


def _sym(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.T)


def lyap_map(X: np.ndarray, A: np.ndarray, W: np.ndarray) -> np.ndarray:
    """h(X) = A X A^T + W, the open-loop covariance prediction."""
    return _sym(A @ X @ A.T + W)


def kalman_update_map(X: np.ndarray, C: np.ndarray, V: np.ndarray) -> np.ndarray:
    """g(X) = X - X C^T (C X C^T + V)^{-1} C X, the measurement update."""
    XC = X @ C.T
    S = C @ XC + V
    return _sym(X - XC @ _solve_sym(S, XC.T, "innovation covariance"))


def control_gain(Pi: np.ndarray, A: np.ndarray, B: np.ndarray, R: np.ndarray) -> np.ndarray:
    BtPi = B.T @ Pi
    return -_solve_sym(BtPi @ B + R, BtPi @ A, "B^T Pi B + R")


def _riccati_step(Pi: np.ndarray, A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    L = control_gain(Pi, A, B, R)
    return _sym(A.T @ Pi @ A + Q - L.T @ (B.T @ Pi @ B + R) @ L)


def _iterate(step, X: np.ndarray, tol: float, max_iter: int, what: str) -> np.ndarray:
    if tol <= 0:
        raise ValueError("tol must be positive")
    for _ in range(max_iter):
        X_next = step(X)
        norm = np.linalg.norm(X_next)
        if not np.isfinite(norm) or norm > _BLOWUP:
            raise NoConvergence(f"{what} diverges (check stabilizability/detectability)")
        if np.linalg.norm(X_next - X) <= tol * (1.0 + norm):
            return X_next
        X = X_next
    raise NoConvergence(f"{what} did not converge in {max_iter} iterations")


def solve_control_dare(A, B, Q, R, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       init: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Value-iterate the control DARE from ``init`` (default Q).

    Returns ``(Pi_inf, L_inf)`` with ``L_inf = -(B^T Pi B + R)^{-1} B^T Pi A``.
    """
    A, B, Q, R = (np.atleast_2d(np.asarray(X, dtype=float)) for X in (A, B, Q, R))
    start = Q.copy() if init is None else np.atleast_2d(np.asarray(init, dtype=float))
    Pi = _iterate(lambda X: _riccati_step(X, A, B, Q, R), start, tol, max_iter, "control Riccati recursion")
    return Pi, control_gain(Pi, A, B, R)


def solve_filter_riccati(A, C, W, V, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                         init: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Iterate P <- g(h(P)) to the a-posteriori steady state.

    Returns ``(P_bar, K)`` where ``K = h(P_bar) C^T (C h(P_bar) C^T + V)^{-1}``.
    """
    A, C, W, V = (np.atleast_2d(np.asarray(X, dtype=float)) for X in (A, C, W, V))
    start = np.eye(A.shape[0]) if init is None else np.atleast_2d(np.asarray(init, dtype=float))
    P_bar = _iterate(lambda X: kalman_update_map(lyap_map(X, A, W), C, V), start, tol, max_iter,
                     "filter Riccati recursion")
    return P_bar, kalman_gain(P_bar, A, C, W, V)


def kalman_gain(P_bar, A, C, W, V) -> np.ndarray:
    P_pred = lyap_map(P_bar, A, W)
    PC = P_pred @ C.T
    S = C @ PC + V
    return _solve_sym(S, PC.T, "innovation covariance").T


def gamma_infinity(Pi_inf, L_inf, B, R) -> np.ndarray:
    """Error-cost weight L^T (B^T Pi B + R) L."""
    L = np.atleast_2d(L_inf)
    return _sym(L.T @ (B.T @ Pi_inf @ B + R) @ L)


def cov_propagate(P_bar, t: int, A, W) -> np.ndarray:
    """t-fold composition h^t(P_bar); h^0 is the identity map."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    X = np.atleast_2d(np.asarray(P_bar, dtype=float))
    A = np.atleast_2d(A)
    W = np.atleast_2d(W)
    for _ in range(t):
        X = lyap_map(X, A, W)
    return X


def closed_loop_matrix(loop: LoopSpec, synth: LoopSynthesis) -> np.ndarray:
    return loop.A + loop.B @ synth.L_inf


def synthesize(loop: LoopSpec, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> LoopSynthesis:
    Pi, L = solve_control_dare(loop.A, loop.B, loop.Q, loop.R, tol, max_iter)
    P_bar, K = solve_filter_riccati(loop.A, loop.C, loop.W, loop.V, tol, max_iter)
    return LoopSynthesis(
        Pi_inf=Pi,
        L_inf=L,
        Gamma_inf=gamma_infinity(Pi, L, loop.B, loop.R),
        P_bar=P_bar,
        K_gain=K,
    )


def stationary_cost(loop: LoopSpec, synth: LoopSynthesis) -> float:
    """Long-run average stage cost with every packet delivered: tr(Pi W) + tr(Gamma P_bar)."""
    return float(np.trace(synth.Pi_inf @ loop.W) + np.trace(synth.Gamma_inf @ synth.P_bar))
