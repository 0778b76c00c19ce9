"""Value-estimation math: TD residuals, GAE advantages, n-step and lambda returns.

Conventions: a trajectory of length T carries rewards R_0..R_{T-1} (R_t is
the reward received after step t) and value estimates V_0..V_T, where V_T
bootstraps the tail.  ``terminal=True`` forces the bootstrap value to zero so
callers cannot forget to do it themselves.

On a finite trajectory the lambda-return's infinite mixture of n-step
returns is truncated by lumping the remaining weight onto the final partial
return.  This is the unique truncation for which

    lambda_return[t] == gae_advantage[t] + values[t]

holds exactly for every t, gamma and lambda.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange


@dataclass(frozen=True)
class Trajectory:
    rewards: tuple[float, ...]
    values: tuple[float, ...]
    terminal: bool = False

    def __post_init__(self):
        rewards = tuple(float(r) for r in self.rewards)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "values", values)
        if len(values) != len(rewards) + 1:
            raise ValueError(
                f"expected len(values) == len(rewards) + 1, "
                f"got {len(values)} and {len(rewards)}"
            )
        if not (np.isfinite(rewards).all() and np.isfinite(values).all()):
            raise ValueError("rewards and values must all be finite")

    def __len__(self) -> int:
        return len(self.rewards)

    def bootstrapped_values(self) -> np.ndarray:
        """Value estimates with V_T zeroed when the trajectory is terminal."""
        v = np.array(self.values, dtype=float)
        if self.terminal:
            v[-1] = 0.0
        return v


@dataclass(frozen=True)
class EstimatorParams:
    gamma: float
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")


def td_residuals(traj: Trajectory, gamma: float) -> np.ndarray:
    """delta_t = R_t + gamma * V_{t+1} - V_t for t = 0..T-1."""
    v = traj.bootstrapped_values()
    r = np.array(traj.rewards, dtype=float)
    return r + gamma * v[1:] - v[:-1]


def gae_advantages(traj: Trajectory, params: EstimatorParams) -> np.ndarray:
    """Generalized advantage estimates via the backward recursion.

    A_t = delta_t + gamma * lambda * A_{t+1}, with A_T = 0; equal to the
    truncated (gamma*lambda)^l - weighted sum of TD residuals.
    """
    delta = td_residuals(traj, params.gamma)
    decay = params.gamma * params.lam
    adv = np.empty_like(delta)
    acc = 0.0
    for t in range(len(delta) - 1, -1, -1):
        acc = delta[t] + decay * acc
        adv[t] = acc
    return adv


def n_step_return(traj: Trajectory, t: int, n: int, gamma: float) -> float:
    """n-step return from step t, truncated to the trajectory horizon.

    sum_{k=0}^{n'-1} gamma^k R_{t+k} + gamma^n' V_{t+n'} with n' = min(n, T-t).
    """
    horizon = len(traj)
    if not 0 <= t < horizon:
        raise IndexOutOfRange(f"t={t} outside trajectory of length {horizon}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n_eff = min(n, horizon - t)
    v = traj.bootstrapped_values()
    total = 0.0
    for k in range(n_eff):
        total += gamma ** k * traj.rewards[t + k]
    return total + gamma ** n_eff * v[t + n_eff]


def td_lambda_returns(traj: Trajectory, params: EstimatorParams) -> np.ndarray:
    """Lambda-returns G_t for t = 0..T-1.

    G_t = (1 - lambda) * sum_{n=1}^{T-t-1} lambda^{n-1} G_{t:t+n}
          + lambda^{T-t-1} * G_{t:T-t}
    """
    horizon = len(traj)
    lam = params.lam
    out = np.empty(horizon, dtype=float)
    for t in range(horizon):
        remaining = horizon - t
        total = 0.0
        for n in range(1, remaining):
            total += (1.0 - lam) * lam ** (n - 1) * n_step_return(traj, t, n, params.gamma)
        total += lam ** (remaining - 1) * n_step_return(traj, t, remaining, params.gamma)
        out[t] = total
    return out
