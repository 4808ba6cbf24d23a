"""Gradient-based minimizers used by the score solver.

Two routes are provided: a limited-memory quasi-Newton method with a
backtracking line search (fast, occasionally stalls on hard targets) and a
plain first-order method with bias-corrected moment estimates (slow, rarely
stalls). Both operate on a callable returning (loss, gradient) and are
fully deterministic. Non-finite losses never propagate: the line search
rejects steps that produce them, and a run that cannot recover is reported
as failed rather than raising.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class LbfgsConfig:
    lr: float = 1.0
    max_epochs: int = 10
    max_iter: int = 200
    history_size: int = 10
    grad_tol: float = 1e-11
    # Armijo sufficient-decrease constant and step-halving cap
    armijo_c1: float = 1e-4
    max_halvings: int = 40


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 2e-3
    steps: int = 5000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_tol: float = 1e-11


@dataclass(frozen=True)
class OptimResult:
    x: np.ndarray
    loss: float
    iterations: int
    converged: bool
    failed: bool = False


def _backtrack(fun_grad: FunGrad, x: np.ndarray, f: float, g: np.ndarray,
               direction: np.ndarray, t0: float, c1: float, max_halvings: int):
    """Armijo backtracking; returns (x_new, f_new, g_new) or None on failure.

    Steps whose loss comes back non-finite count as insufficient decrease
    and are halved like any other rejected step.
    """
    slope = float(np.dot(g, direction))
    t = t0
    for _ in range(max_halvings):
        x_new = x + t * direction
        f_new, g_new = fun_grad(x_new)
        if np.isfinite(f_new) and np.all(np.isfinite(g_new)) and f_new <= f + c1 * t * slope:
            return x_new, f_new, g_new
        t *= 0.5
    return None


def _two_loop(g: np.ndarray, s_hist: deque, y_hist: deque, rho_hist: deque) -> np.ndarray:
    """Standard two-loop recursion for the quasi-Newton direction."""
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y
    if s_hist:
        s_last, y_last = s_hist[-1], y_hist[-1]
        gamma = float(np.dot(s_last, y_last)) / float(np.dot(y_last, y_last))
        q *= gamma
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return -q


def minimize_lbfgs(fun_grad: FunGrad, x0: np.ndarray, cfg: LbfgsConfig) -> OptimResult:
    """Limited-memory quasi-Newton descent from x0.

    The epoch and per-epoch iteration limits jointly cap the total step
    budget at max_epochs * max_iter; curvature history persists across the
    whole run.
    """
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        return OptimResult(x=x, loss=float("inf"), iterations=0, converged=False, failed=True)

    s_hist: deque = deque(maxlen=cfg.history_size)
    y_hist: deque = deque(maxlen=cfg.history_size)
    rho_hist: deque = deque(maxlen=cfg.history_size)
    iterations = 0
    budget = cfg.max_epochs * cfg.max_iter

    while iterations < budget:
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= cfg.grad_tol:
            return OptimResult(x=x, loss=f, iterations=iterations, converged=True)

        direction = _two_loop(g, s_hist, y_hist, rho_hist)
        if not np.all(np.isfinite(direction)) or float(np.dot(direction, g)) >= 0.0:
            # history produced a non-descent direction; fall back to steepest
            direction = -g

        step = _backtrack(fun_grad, x, f, g, direction, cfg.lr, cfg.armijo_c1, cfg.max_halvings)
        if step is None and s_hist:
            # retry once from a clean slate before giving up
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            step = _backtrack(fun_grad, x, f, g, -g, cfg.lr, cfg.armijo_c1, cfg.max_halvings)
        if step is None:
            return OptimResult(x=x, loss=f, iterations=iterations, converged=False)

        x_new, f_new, g_new = step
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.dot(s, s) + 1e-300):
            s_hist.append(s); y_hist.append(y); rho_hist.append(1.0 / sy)
        x, f, g = x_new, f_new, g_new
        iterations += 1

    return OptimResult(x=x, loss=f, iterations=iterations, converged=False)


def minimize_adam(fun_grad: FunGrad, x0: np.ndarray, cfg: AdamConfig) -> OptimResult:
    """First-order descent with bias-corrected moment estimates from x0."""
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    f, g = fun_grad(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        return OptimResult(x=x, loss=float("inf"), iterations=0, converged=False, failed=True)

    for t in range(1, cfg.steps + 1):
        if float(np.max(np.abs(g))) <= cfg.grad_tol:
            return OptimResult(x=x, loss=f, iterations=t - 1, converged=True)
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
        x = x - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        f, g = fun_grad(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return OptimResult(x=x, loss=float("inf"), iterations=t, converged=False, failed=True)

    return OptimResult(x=x, loss=f, iterations=cfg.steps, converged=False)
