"""Denoiser-generic DDPM machinery over voxel-shaped real tensors.

Steps are 1-based: the forward chain runs t = 1..T, the reverse chain
t = T..1.  Table entries for step t live at index t-1.  A denoiser is any
callable (x_t, t) -> predicted-noise tensor of the same shape; trained
networks plug in through that contract.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .voxel import Frame, VoxelGrid

__all__ = [
    "NoiseSchedule",
    "linear_schedule",
    "forward_sample",
    "ddpm_loss",
    "reverse_step",
    "sample_grid",
    "Denoiser",
]


class Denoiser(Protocol):
    def __call__(self, x_t: np.ndarray, t: int) -> np.ndarray:
        ...


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise magnitudes and their running products."""

    beta: np.ndarray       # (T,)
    alpha: np.ndarray      # (T,) 1 - beta
    alpha_bar: np.ndarray  # (T,) cumulative product of alpha

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1 or len(beta) < 1:
            raise ValueError("beta must be a non-empty 1-D array")
        if not ((beta > 0) & (beta < 1)).all():
            raise ValueError("beta entries must lie in (0, 1)")
        if (np.diff(beta) < 0).any():
            raise ValueError("beta must be nondecreasing")
        if len(beta) > 1 and not (np.diff(self.alpha_bar) < 0).all():
            raise ValueError("alpha_bar must be strictly decreasing")

    @property
    def steps(self) -> int:
        return len(self.beta)


def linear_schedule(steps: int = 1000, beta_start: float = 1e-4,
                    beta_end: float = 0.02) -> NoiseSchedule:
    """Beta rises linearly from beta_start at t=1 to beta_end at t=T."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not (0 < beta_start <= beta_end < 1):
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    beta = np.linspace(beta_start, beta_end, steps)
    alpha = 1.0 - beta
    return NoiseSchedule(beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha))


def _check_step(sched: NoiseSchedule, t: int):
    if not 1 <= t <= sched.steps:
        raise ValueError(f"step t={t} outside [1, {sched.steps}]")


def forward_sample(x0: np.ndarray, t: int, eps: np.ndarray,
                   sched: NoiseSchedule) -> np.ndarray:
    """Noised sample sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError("x0 and eps shapes differ")
    _check_step(sched, t)
    ab = sched.alpha_bar[t - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def ddpm_loss(x0: np.ndarray, t: int, eps: np.ndarray,
              denoiser: Denoiser, sched: NoiseSchedule) -> float:
    """Squared Euclidean norm of the noise-prediction residual."""
    x_t = forward_sample(x0, t, eps, sched)
    pred = np.asarray(denoiser(x_t, t), dtype=np.float64)
    if pred.shape != np.asarray(eps).shape:
        raise ValueError("denoiser changed the tensor shape")
    resid = np.asarray(eps, dtype=np.float64) - pred
    return float((resid * resid).sum())


def reverse_step(x_t: np.ndarray, t: int, denoiser: Denoiser,
                 sched: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """One ancestral step: the denoised mean plus sqrt(beta_t) Gaussian noise
    (noise-free at t = 1)."""
    _check_step(sched, t)
    x_t = np.asarray(x_t, dtype=np.float64)
    beta = sched.beta[t - 1]
    alpha = sched.alpha[t - 1]
    ab = sched.alpha_bar[t - 1]
    eps_hat = np.asarray(denoiser(x_t, t), dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise ValueError("denoiser changed the tensor shape")
    mean = (x_t - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(alpha)
    if t == 1:
        return mean
    return mean + np.sqrt(beta) * rng.standard_normal(x_t.shape)


def sample_grid(denoiser: Denoiser, sched: NoiseSchedule, resolution: int,
                rng: np.random.Generator, threshold: float = 0.0) -> VoxelGrid:
    """Run the full reverse chain from standard normal noise and binarize.

    Occupancy is encoded as -1 (empty) / +1 (filled); a voxel is occupied
    when the final value exceeds the threshold.
    """
    x = rng.standard_normal((resolution,) * 3)
    for t in range(sched.steps, 0, -1):
        x = reverse_step(x, t, denoiser, sched, rng)
    occ = x > threshold
    return VoxelGrid(occ, Frame.normalized(resolution))
