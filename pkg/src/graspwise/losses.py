"""Reference losses for the three prediction heads, with analytic gradients.

Proposal head: binary cross entropy plus smooth-L1 box regression gated by
the positive label. Orientation head: 19-way cross entropy (class 0 is
non-grasp) plus smooth-L1 gated by grasp classes. Surface head: binary
cross entropy. The total is their plain sum. Reductions are sums over the
batch by default, with an optional mean.

Probabilities are clamped from below at 1e-12 inside the log, so a certain
correct prediction costs exactly zero; gradients vanish in the clamped
region. grad_check compares an analytic gradient with central finite
differences and nudges the point once if the error looks kink-dominated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

CLAMP_EPS = 1e-12
N_ORIENTATION_CLASSES = 19  # class 0 = non-grasp

LossFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


class LossDomainError(ValueError):
    """Prediction violates its probability-vector invariants."""


class ShapeError(ValueError):
    """Mismatched operand shapes."""


def _check_probs(vec: Sequence[float], size: int, what: str) -> None:
    if len(vec) != size:
        raise LossDomainError(f"{what} must have {size} components, got {len(vec)}")
    if any(not 0.0 <= v <= 1.0 for v in vec):
        raise LossDomainError(f"{what} components must lie in [0, 1]: {vec}")
    if abs(sum(vec) - 1.0) > 1e-3:
        raise LossDomainError(f"{what} must sum to 1, got {sum(vec)}")


@dataclass(frozen=True)
class ProposalPrediction:
    p: tuple[float, float]  # (non-grasp, grasp) probabilities
    t: tuple[float, float, float, float]
    p_star: int  # 0 negative, 1 positive
    t_star: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        _check_probs(self.p, 2, "proposal probability")
        if self.p_star not in (0, 1):
            raise LossDomainError(f"p_star must be 0 or 1, got {self.p_star}")


@dataclass(frozen=True)
class OrientationPrediction:
    rho: tuple[float, ...]  # 19 class probabilities
    beta: tuple[float, float, float, float]
    rho_star: int  # class 0..18
    beta_star: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        _check_probs(self.rho, N_ORIENTATION_CLASSES, "orientation probability")
        if not 0 <= self.rho_star < N_ORIENTATION_CLASSES:
            raise LossDomainError(f"rho_star must be in 0..18, got {self.rho_star}")


@dataclass(frozen=True)
class SurfacePrediction:
    s: tuple[float, float]  # (stacked, clear) probabilities
    s_star: int  # 0 stacked, 1 clear

    def __post_init__(self) -> None:
        _check_probs(self.s, 2, "surface probability")
        if self.s_star not in (0, 1):
            raise LossDomainError(f"s_star must be 0 or 1, got {self.s_star}")


def cross_entropy(probs: Sequence[float], label: int) -> float:
    """Negative log likelihood of the labeled component.

    Clamped from below so a zero probability yields a large finite loss
    instead of an infinity; a certain correct prediction costs exactly 0.
    """
    p = max(float(probs[label]), CLAMP_EPS)
    return -float(np.log(p))


def _cross_entropy_grad(probs: Sequence[float], label: int) -> np.ndarray:
    g = np.zeros(len(probs))
    p = float(probs[label])
    if p > CLAMP_EPS:
        g[label] = -1.0 / p
    return g


def softmax(z: Sequence[float]) -> np.ndarray:
    e = np.exp(np.asarray(z, dtype=float) - np.max(z))
    return e / e.sum()


def softmax_cross_entropy(z: Sequence[float], label: int) -> tuple[float, np.ndarray]:
    """CE composed with softmax; the gradient is probs minus one-hot."""
    probs = softmax(z)
    onehot = np.zeros_like(probs)
    onehot[label] = 1.0
    return cross_entropy(probs, label), probs - onehot


def smooth_l1(x: Sequence[float], target: Sequence[float]) -> float:
    """Piecewise loss: quadratic inside |d| < 1, linear outside, summed."""
    xv = np.asarray(x, dtype=float)
    tv = np.asarray(target, dtype=float)
    if xv.shape != tv.shape:
        raise ShapeError(f"smooth_l1 operands differ in shape: {xv.shape} vs {tv.shape}")
    d = xv - tv
    per = np.where(np.abs(d) < 1.0, 0.5 * d * d, np.abs(d) - 0.5)
    return float(per.sum())


def smooth_l1_grad(x: Sequence[float], target: Sequence[float]) -> np.ndarray:
    d = np.asarray(x, dtype=float) - np.asarray(target, dtype=float)
    return np.where(np.abs(d) < 1.0, d, np.sign(d))


def _reduce(total: float, n: int, reduction: str) -> float:
    if reduction == "sum":
        return total
    if reduction == "mean":
        return total / n if n else 0.0
    raise ValueError(f"reduction must be 'sum' or 'mean', got {reduction!r}")


def loss_p(batch: Sequence[ProposalPrediction], lam1: float = 1.0, reduction: str = "sum") -> float:
    """Proposal classification plus positive-gated box regression."""
    total = 0.0
    for pred in batch:
        total += cross_entropy(pred.p, pred.p_star)
        total += lam1 * pred.p_star * smooth_l1(pred.t, pred.t_star)
    return _reduce(total, len(batch), reduction)


def loss_g(batch: Sequence[OrientationPrediction], lam2: float = 1.0, reduction: str = "sum") -> float:
    """Orientation classification plus grasp-gated box regression."""
    total = 0.0
    for pred in batch:
        total += cross_entropy(pred.rho, pred.rho_star)
        if pred.rho_star != 0:
            total += lam2 * smooth_l1(pred.beta, pred.beta_star)
    return _reduce(total, len(batch), reduction)


def loss_s(batch: Sequence[SurfacePrediction], reduction: str = "sum") -> float:
    """Surface classification."""
    total = sum(cross_entropy(pred.s, pred.s_star) for pred in batch)
    return _reduce(total, len(batch), reduction)


def loss_total(
    p_batch: Sequence[ProposalPrediction],
    g_batch: Sequence[OrientationPrediction],
    s_batch: Sequence[SurfacePrediction],
    lam1: float = 1.0,
    lam2: float = 1.0,
    reduction: str = "sum",
) -> float:
    return (
        loss_p(p_batch, lam1, reduction)
        + loss_g(g_batch, lam2, reduction)
        + loss_s(s_batch, reduction)
    )


def proposal_loss_fn(
    p_stars: Sequence[int],
    t_stars: Sequence[Sequence[float]],
    lam1: float = 1.0,
) -> tuple[LossFn, int]:
    """Loss over a flat parameter vector packing (p0, p1, t0..t3) per sample.

    Returns the function and the expected vector size; the function yields
    (value, analytic gradient) for grad_check.
    """
    n = len(p_stars)

    def fn(x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        value = 0.0
        grad = np.zeros_like(x)
        for i in range(n):
            base = 6 * i
            p = x[base : base + 2]
            t = x[base + 2 : base + 6]
            value += cross_entropy(p, p_stars[i])
            grad[base : base + 2] = _cross_entropy_grad(p, p_stars[i])
            if p_stars[i]:
                value += lam1 * smooth_l1(t, t_stars[i])
                grad[base + 2 : base + 6] = lam1 * smooth_l1_grad(t, t_stars[i])
        return value, grad

    return fn, 6 * n


def orientation_loss_fn(
    rho_stars: Sequence[int],
    beta_stars: Sequence[Sequence[float]],
    lam2: float = 1.0,
) -> tuple[LossFn, int]:
    """Loss over a flat vector packing (rho 19, beta 4) per sample."""
    n = len(rho_stars)
    width = N_ORIENTATION_CLASSES + 4

    def fn(x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        value = 0.0
        grad = np.zeros_like(x)
        for i in range(n):
            base = width * i
            rho = x[base : base + N_ORIENTATION_CLASSES]
            beta = x[base + N_ORIENTATION_CLASSES : base + width]
            value += cross_entropy(rho, rho_stars[i])
            grad[base : base + N_ORIENTATION_CLASSES] = _cross_entropy_grad(rho, rho_stars[i])
            if rho_stars[i] != 0:
                value += lam2 * smooth_l1(beta, beta_stars[i])
                grad[base + N_ORIENTATION_CLASSES : base + width] = lam2 * smooth_l1_grad(
                    beta, beta_stars[i]
                )
        return value, grad

    return fn, width * n


def surface_loss_fn(s_stars: Sequence[int]) -> tuple[LossFn, int]:
    """Loss over a flat vector packing (s0, s1) per sample."""
    n = len(s_stars)

    def fn(x: np.ndarray) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        value = 0.0
        grad = np.zeros_like(x)
        for i in range(n):
            s = x[2 * i : 2 * i + 2]
            value += cross_entropy(s, s_stars[i])
            grad[2 * i : 2 * i + 2] = _cross_entropy_grad(s, s_stars[i])
        return value, grad

    return fn, 2 * n


def _central_differences(fn: LossFn, point: np.ndarray, h: float) -> np.ndarray:
    num = np.empty_like(point)
    for i in range(point.size):
        step = np.zeros_like(point)
        step[i] = h
        num[i] = (fn(point + step)[0] - fn(point - step)[0]) / (2.0 * h)
    return num


def grad_check(loss_fn: LossFn, point: Sequence[float], h: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central differences.

    If the error looks kink-dominated (a coordinate sitting on the smooth-L1
    break), the point is nudged once by 16h and re-checked there.
    """
    x = np.asarray(point, dtype=float)
    _, analytic = loss_fn(x)
    numeric = _central_differences(loss_fn, x, h)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.abs(analytic - numeric) / np.where(scale > 1e-8, scale, 1.0)
    worst = float(rel.max()) if rel.size else 0.0
    if worst > np.sqrt(h):
        nudged = x + 16.0 * h
        _, analytic = loss_fn(nudged)
        numeric = _central_differences(loss_fn, nudged, h)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        rel = np.abs(analytic - numeric) / np.where(scale > 1e-8, scale, 1.0)
        worst = float(rel.max()) if rel.size else 0.0
    return worst
