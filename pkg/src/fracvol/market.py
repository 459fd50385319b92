"""Market layer: volatility projection, asset prices, and the measure-change objects.

Prices use the exact exponential solution of the lognormal dynamics with the
volatility and the market price of risk evaluated at the left grid point of
each step, which keeps every discrete sum adapted to the driving increments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import SamplePath, TimeGrid


class ViabilityBreachError(RuntimeError):
    """Raised when a volatility component falls at or below its admissible floor."""


@dataclass(frozen=True, eq=False)
class MarketParams:
    """Rate, per-asset drifts, initial prices, and the volatility projections.

    Row k of `projections` is the vector h_k defining volatility component k as
    <h_k, U(t)>; `anchor_indices` locate the coordinate used to anchor the
    shifted constraint set, and each h_k must be nonzero there.
    """

    rate: float
    drifts: np.ndarray
    initial_prices: np.ndarray
    projections: np.ndarray
    anchor_indices: tuple[int, ...]
    initial_riskfree: float = 1.0

    def __post_init__(self):
        drifts = np.atleast_1d(np.asarray(self.drifts, dtype=float))
        prices = np.atleast_1d(np.asarray(self.initial_prices, dtype=float))
        proj = np.atleast_2d(np.asarray(self.projections, dtype=float))
        indices = tuple(int(i) for i in self.anchor_indices)
        object.__setattr__(self, "drifts", drifts)
        object.__setattr__(self, "initial_prices", prices)
        object.__setattr__(self, "projections", proj)
        object.__setattr__(self, "anchor_indices", indices)
        d = proj.shape[0]
        if proj.shape != (d, d):
            raise ValueError(f"projections must be square, got shape {proj.shape}")
        if drifts.shape != (d,) or prices.shape != (d,):
            raise ValueError("drifts and initial_prices must have one entry per asset")
        if not (self.rate > 0):
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not np.all(prices > 0):
            raise ValueError("initial prices must be positive")
        if self.initial_riskfree <= 0:
            raise ValueError("initial risk-free price must be positive")
        if len(indices) != d:
            raise ValueError("need one anchor index per projection vector")
        for k, ik in enumerate(indices):
            if not 0 <= ik < d:
                raise ValueError(f"anchor index {ik} out of range for dimension {d}")
            if proj[k, ik] == 0:
                raise ValueError(f"projection {k} vanishes at its anchor index {ik}")
            if not np.any(proj[k] != 0):
                raise ValueError(f"projection {k} must be nonzero")

    @property
    def dims(self) -> int:
        return self.projections.shape[0]


def vol_from_state(state: SamplePath, params: MarketParams) -> SamplePath:
    """Volatility path: component k at time t is <h_k, U(t)>."""
    if state.dims != params.dims:
        raise ValueError(
            f"state has {state.dims} components, market expects {params.dims}"
        )
    return SamplePath(state.grid, state.values @ params.projections.T)


def riskfree_price(t, params: MarketParams):
    """Risk-free account value initial_riskfree * exp(rate * t)."""
    return params.initial_riskfree * np.exp(params.rate * np.asarray(t, dtype=float))


def simulate_prices(vol: SamplePath, w_path: SamplePath, params: MarketParams) -> SamplePath:
    """Exact exponential price path driven by the Brownian path.

    log S_k(t_i) = log S_k(0) + sum_{j<i} (b_k - V_k(t_j)^2 / 2) dt + V_k(t_j) dW_k(t_j);
    strictly positive by construction.
    """
    if vol.grid != w_path.grid:
        raise ValueError("volatility and driver must share the grid")
    if np.any(w_path.values[0] != 0.0):
        raise ValueError("driver must start at 0")
    dt = vol.grid.dt
    v_left = vol.values[:-1]
    log_incr = (params.drifts - 0.5 * v_left**2) * dt + v_left * w_path.increments()
    log_path = np.vstack([np.zeros(vol.dims), np.cumsum(log_incr, axis=0)])
    return SamplePath(vol.grid, params.initial_prices * np.exp(log_path))


def theta(v_t, params: MarketParams, xi_floor: float | None = None) -> np.ndarray:
    """Market price of risk (rate - b_k) / V_k at one time point.

    When `xi_floor` is given, any component at or below half the floor is a
    viability breach: the measure-change weights would lose their integrability
    and silently blow up the variance, so that state is rejected loudly.
    """
    v = np.asarray(v_t, dtype=float)
    floor = 0.5 * xi_floor if xi_floor is not None else 0.0
    if np.any(v <= floor):
        raise ViabilityBreachError(
            f"volatility {v} at or below the admissible floor {floor:g}"
        )
    return (params.rate - params.drifts) / v


def stochastic_exponential(
    grid: TimeGrid,
    theta_dot_dw: np.ndarray,
    theta_sq_dt: np.ndarray,
    q: float = 1.0,
) -> SamplePath:
    """Exponential martingale path exp(q M(t) - q^2 <M>_t / 2) from step data.

    `theta_dot_dw` holds the per-step increments <theta_j, dW_j> and
    `theta_sq_dt` the per-step quadratic variation |theta_j|^2 dt.
    """
    theta_dot_dw = np.asarray(theta_dot_dw, dtype=float)
    theta_sq_dt = np.asarray(theta_sq_dt, dtype=float)
    if theta_dot_dw.shape != (grid.steps,) or theta_sq_dt.shape != (grid.steps,):
        raise ValueError("need one increment per grid step")
    log_e = q * np.cumsum(theta_dot_dw) - 0.5 * q * q * np.cumsum(theta_sq_dt)
    return SamplePath(grid, np.concatenate([[1.0], np.exp(log_e)]))


def discount_factor(t: float, params: MarketParams) -> float:
    """Exact exp(-rate * t); never a discretized account equation."""
    return math.exp(-params.rate * t)
