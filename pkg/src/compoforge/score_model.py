"""Probability model linking latent crop scores to annotation frequencies.

Annotators produced two empirical signals per crop: how often it was rated
good, and how often it landed in an annotator's top-3 selection out of the
candidate set. This module maps a latent score vector s to both signals:

  p_good_i = sigmoid(s_i)
  p_top1   = softmax(alpha * s)
  p_top3   = top-3 inclusion probability under sequential sampling without
             replacement driven by p_top1 (exact form), or the cheap
             approximation 1 - (1 - p_top1_i)^3 used inside the loss.

The fitting loss compares the model's predictions against the observed
frequencies with a squared error per crop, weighting the top-3 term by
beta. The gradient is analytic; optimizers consume loss_and_grad directly.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

DENOM_FLOOR = 1e-12


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    return arr


def _as_probability_vector(x, name: str, *, require_simplex: bool) -> np.ndarray:
    arr = _as_vector(x, name)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValidationError(f"{name} entries must lie in [0, 1]")
    if require_simplex and abs(float(arr.sum()) - 1.0) > 1e-8:
        raise ValidationError(f"{name} must sum to 1")
    return arr


def sigmoid(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    return out


def predict_good(s) -> np.ndarray:
    """Per-crop probability of a good rating."""
    return sigmoid(_as_vector(s, "s"))


def predict_top1(s, alpha: float) -> np.ndarray:
    """Temperature-scaled softmax over scores, stabilized by max subtraction."""
    arr = _as_vector(s, "s")
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValidationError("alpha must be a positive finite number")
    z = alpha * arr
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def exact_top3(p) -> np.ndarray:
    """Exact probability that each item appears in a 3-draw sequential sample.

    Draws are without replacement, each proportional to the remaining items'
    probabilities. The result decomposes into the chances of being picked
    first, second, or third. Outputs sum to the number of draws (3).
    """
    arr = _as_probability_vector(p, "p", require_simplex=True)
    n = arr.size
    if n < 3:
        raise ValidationError("exact_top3 requires at least 3 items")
    one = 1.0 - arr
    if np.any(one < DENOM_FLOOR):
        raise ValidationError("exact_top3: a first-draw denominator (1 - p_j) is below 1e-12")
    pair = one[:, None] - arr[None, :]  # pair[j, k] = 1 - p_j - p_k
    off = ~np.eye(n, dtype=bool)
    if np.any(pair[off] < DENOM_FLOOR):
        raise ValidationError("exact_top3: a second-draw denominator (1 - p_j - p_k) is below 1e-12")

    r = arr / one
    s1 = r.sum()
    term2 = arr * (s1 - r)

    np.fill_diagonal(pair, 1.0)
    m = (arr[:, None] * arr[None, :]) / (one[:, None] * pair)
    np.fill_diagonal(m, 0.0)
    total = m.sum()
    term3 = arr * (total - m.sum(axis=1) - m.sum(axis=0))

    return np.clip(arr + term2 + term3, 0.0, 1.0)


def approx_top3(p) -> np.ndarray:
    """Independence approximation of top-3 inclusion: 1 - (1 - p_i)^3."""
    arr = _as_probability_vector(p, "p", require_simplex=False)
    return 1.0 - (1.0 - arr) ** 3


def forward_targets(s, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Targets the loss would be zero at, for a known latent score vector.

    Uses the same approximation path as the loss, so optimizing against
    these targets can in principle drive the loss to zero.
    """
    arr = _as_vector(s, "s")
    return predict_good(arr), approx_top3(predict_top1(arr, alpha))


def _check_loss_inputs(s, p_good, p_top3, alpha: float, beta: float):
    arr = _as_vector(s, "s")
    g = _as_probability_vector(p_good, "p_good", require_simplex=False)
    t = _as_probability_vector(p_top3, "p_top3", require_simplex=False)
    if not (arr.size == g.size == t.size):
        raise ValidationError("s, p_good and p_top3 must have equal length")
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValidationError("alpha must be a positive finite number")
    if not np.isfinite(beta) or beta < 0:
        raise ValidationError("beta must be a non-negative finite number")
    return arr, g, t


def loss_value(s, p_good, p_top3, *, alpha: float, beta: float) -> float:
    """Squared-error fit of predicted vs observed rating frequencies.

    The top-3 side uses the cheap approximation, not the exact inclusion
    probability; the exact form exists for analysis and validation only.
    """
    arr, g, t = _check_loss_inputs(s, p_good, p_top3, alpha, beta)
    sig = sigmoid(arr)
    q = predict_top1(arr, alpha)
    h = 1.0 - (1.0 - q) ** 3
    return float(np.sum((sig - g) ** 2) + beta * np.sum((h - t) ** 2))


def loss_and_grad(s, p_good, p_top3, *, alpha: float, beta: float) -> tuple[float, np.ndarray]:
    """Loss plus its analytic gradient with respect to s."""
    arr, g, t = _check_loss_inputs(s, p_good, p_top3, alpha, beta)
    sig = sigmoid(arr)
    q = predict_top1(arr, alpha)
    h = 1.0 - (1.0 - q) ** 3

    value = float(np.sum((sig - g) ** 2) + beta * np.sum((h - t) ** 2))

    grad_good = 2.0 * (sig - g) * sig * (1.0 - sig)
    d = 3.0 * (h - t) * (1.0 - q) ** 2
    grad_top = 2.0 * alpha * beta * q * (d - float(np.dot(d, q)))
    return value, grad_good + grad_top
