"""Separation objectives and evaluation metrics.

``si_snr`` is differentiable (returns a scalar graph tensor), so the
permutation-invariant loss built on it can drive training directly.
Improvement metrics (``si_snri``, ``sdri``) are plain floats for
reporting; ``sdri`` uses an SNR on the unscaled residual, a documented
approximation of full distortion-ratio evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import tensor as T
from .tensor import ContractError, Tensor


def _as_signal(x) -> Tensor:
    t = x if isinstance(x, Tensor) else Tensor(np.asarray(x))
    if t.data.ndim != 1:
        raise ContractError(f"expected a 1-D signal, got shape {t.shape}")
    return t


def si_snr(est, target, eps: float = 1e-8, zero_mean: bool = True) -> Tensor:
    """Scale-invariant signal-to-noise ratio in dB (scalar tensor).

    The target is rescaled by the estimate's projection coefficient; the
    ratio of projected-signal power to residual power is reported in dB.
    """
    est = _as_signal(est)
    target = _as_signal(target)
    if est.shape != target.shape:
        raise ContractError(
            f"signal lengths differ: {est.shape[0]} vs {target.shape[0]}"
        )
    if zero_mean:
        est = T.sub(est, est.mean())
        target = T.sub(target, target.mean())
    dot = T.tsum(T.mul(est, target))
    energy = T.tsum(T.mul(target, target))
    scale = T.div(dot, T.add(energy, eps))
    projected = T.mul(scale, target)
    residual = T.sub(est, projected)
    num = T.add(T.tsum(T.mul(projected, projected)), eps)
    den = T.add(T.tsum(T.mul(residual, residual)), eps)
    return T.decibels(T.div(num, den))


def sdr(est, target, eps: float = 1e-8, zero_mean: bool = True) -> Tensor:
    """Distortion ratio in dB, simplified: plain target power over the power
    of the scale-projected residual. Unlike ``si_snr`` the numerator is not
    rescaled by the projection coefficient, so estimate gain matters. This
    stands in for full distortion-ratio scoring with its allowed-filter
    projection, which is out of scope.
    """
    est = _as_signal(est)
    target = _as_signal(target)
    if est.shape != target.shape:
        raise ContractError(
            f"signal lengths differ: {est.shape[0]} vs {target.shape[0]}"
        )
    if zero_mean:
        est = T.sub(est, est.mean())
        target = T.sub(target, target.mean())
    dot = T.tsum(T.mul(est, target))
    energy = T.tsum(T.mul(target, target))
    scale = T.div(dot, T.add(energy, eps))
    residual = T.sub(est, T.mul(scale, target))
    num = T.add(energy, eps)
    den = T.add(T.tsum(T.mul(residual, residual)), eps)
    return T.decibels(T.div(num, den))


@dataclass
class PitResult:
    loss: Tensor                  # scalar, -(best mean pairwise SI-SNR)
    permutation: tuple[int, ...]  # estimate index -> target index
    per_pair: np.ndarray          # (K, K) floats, [est][target]


def upit_loss(ests, targets, eps: float = 1e-8) -> PitResult:
    """Best-permutation negative SI-SNR over all speaker assignments."""
    k = len(ests)
    if len(targets) != k:
        raise ContractError(
            f"estimate count {k} != target count {len(targets)}"
        )
    if k > 4:
        raise ContractError("exhaustive assignment search supports at most 4 speakers")
    pair = [[si_snr(ests[i], targets[j], eps) for j in range(k)] for i in range(k)]
    best_perm = None
    best_value = None
    for perm in permutations(range(k)):
        value = sum(pair[i][perm[i]].item() for i in range(k)) / k
        if best_value is None or value > best_value:
            best_value = value
            best_perm = perm
    chosen = pair[0][best_perm[0]]
    for i in range(1, k):
        chosen = T.add(chosen, pair[i][best_perm[i]])
    loss = T.mul(chosen, -1.0 / k)
    per_pair = np.array([[pair[i][j].item() for j in range(k)] for i in range(k)])
    return PitResult(loss, best_perm, per_pair)


def si_snri(ests, targets, mixture, eps: float = 1e-8) -> float:
    """Mean SI-SNR improvement of estimates over the raw mixture (dB)."""
    pit = upit_loss(ests, targets, eps)
    total = 0.0
    for i, j in enumerate(pit.permutation):
        baseline = si_snr(mixture, targets[j], eps).item()
        total += pit.per_pair[i][j] - baseline
    return total / len(ests)


def sdri(ests, targets, mixture, eps: float = 1e-8) -> float:
    """Mean distortion-ratio improvement under the SI-SNR-optimal
    assignment (dB)."""
    pit = upit_loss(ests, targets, eps)
    total = 0.0
    for i, j in enumerate(pit.permutation):
        improved = sdr(ests[i], targets[j], eps).item()
        baseline = sdr(mixture, targets[j], eps).item()
        total += improved - baseline
    return total / len(ests)
