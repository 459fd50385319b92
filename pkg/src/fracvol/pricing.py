"""European claim pricing at time 0 by two independent Monte Carlo estimators.

Both estimators simulate the full pipeline per path: draw the mixing variable,
draw Brownian increments, build the long-memory driver through the kernel
matrix, advance the state equation by explicit Euler (with a per-step
projection onto the shifted constraint set by default, which keeps the
volatility above its floor and the measure-change weights integrable), read
off the volatility, and evolve prices by their exact exponential solution.

* The physical-measure estimator weights each discounted payoff with the
  terminal exponential martingale of the market price of risk.
* The risk-neutral estimator draws the shifted increments directly and
  reconstructs the physical increments step by step (the market price of risk
  at the left grid point feeds back into the driver), so discounted prices are
  driftless by construction.

Path draws are keyed by (seed, path index, component), so the two estimators
consume identical uniforms for the same seed: with equal drifts and rate they
coincide path for path, and in general they are common-random-number coupled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coefficients import (
    ConstantXi,
    ModelCoefficients,
    SingularXi,
    XiLaw,
    eval_mu,
    eval_sigma,
    sigma_factors,
    xi_inverse_cdf,
    XI_STREAM,
)
from .grids import SamplePath
from .rde import euler_paths
from .rng import RandomSource
from .scenario import Scenario
from .viability import check_viability_conditions, project_into
from .volterra import KernelMatrix, build_kernel_matrix, transform_increments

MAX_BREACH_FRACTION = 1e-3


class BreachRateError(RuntimeError):
    """Raised when too many paths hit the volatility floor to trust the estimate."""


def _check_strike(strike: float) -> None:
    if strike < 0:
        raise ValueError(f"strike must be nonnegative, got {strike}")


@dataclass(frozen=True)
class Call:
    asset: int
    strike: float

    def __post_init__(self):
        _check_strike(self.strike)


@dataclass(frozen=True)
class Put:
    asset: int
    strike: float

    def __post_init__(self):
        _check_strike(self.strike)


@dataclass(frozen=True, eq=False)
class Basket:
    weights: np.ndarray
    strike: float

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("basket weights must be finite")
        _check_strike(self.strike)


def payoff_values(payoff, terminal: np.ndarray) -> np.ndarray:
    """Payoff of each row of terminal prices (paths, d)."""
    terminal = np.atleast_2d(terminal)
    if isinstance(payoff, Call):
        return np.maximum(terminal[:, payoff.asset] - payoff.strike, 0.0)
    if isinstance(payoff, Put):
        return np.maximum(payoff.strike - terminal[:, payoff.asset], 0.0)
    if isinstance(payoff, Basket):
        return np.maximum(terminal @ payoff.weights - payoff.strike, 0.0)
    if callable(payoff):
        return np.asarray(payoff(terminal), dtype=float)
    raise TypeError(f"unsupported payoff {payoff!r}")


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo run parameters.

    `seed` of None means "use the scenario's seed".  The batch size only
    controls memory and the float reduction layout; path draws themselves are
    independent of batching.

    `project` keeps the state inside its shifted constraint set by a Euclidean
    projection after every Euler step.  Pricing needs the volatility bounded
    away from zero for the measure-change weights to be integrable, so hard
    feasibility is the default here; the floor guard then only fires if the
    projection itself misbehaves.
    """

    paths: int
    seed: int | None = None
    batch_size: int = 4096
    threads: int = 1
    check_conditions: bool = True
    project: bool = True

    def __post_init__(self):
        if self.paths < 2:
            raise ValueError("need at least 2 paths for a standard error")
        if self.batch_size < 1 or self.threads < 1:
            raise ValueError("batch_size and threads must be positive")


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    paths: int
    seed: int
    breached: int = 0

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "paths": self.paths,
            "seed": self.seed,
            "breached": self.breached,
        }


def xi_draws(law: XiLaw, seed: int, start: int, count: int) -> np.ndarray:
    """Mixing-variable draws for paths [start, start + count)."""
    if isinstance(law, ConstantXi):
        return np.full(count, law.value)
    base = RandomSource(seed)
    u = np.empty(count)
    for b in range(count):
        u[b] = base.for_path(start + b).stream(XI_STREAM).uniforms(1)[0]
    return xi_inverse_cdf(law, u)


def w_increments(scenario: Scenario, seed: int, start: int, count: int) -> np.ndarray:
    """Brownian increments (count, n, d) for paths [start, start + count)."""
    n = scenario.grid.steps
    d = scenario.dims
    sq_dt = math.sqrt(scenario.grid.dt)
    base = RandomSource(seed)
    out = np.empty((count, n, d))
    for b in range(count):
        src = base.for_path(start + b)
        for k in range(d):
            out[b, :, k] = src.stream(k).normals(n)
    out *= sq_dt
    return out


def _euler_step(scenario, xi, x, db, dt):
    c = scenario.coefficients
    mu = eval_mu(c, xi, x)
    if isinstance(c, ModelCoefficients):
        diffusion = (sigma_factors(c, xi, x) * db) @ c.directions
    else:
        diffusion = np.einsum("...ij,...j->...i", eval_sigma(c, xi, x), db)
    return x + mu * dt + diffusion


def _constraint_data(scenario: Scenario, xi: np.ndarray):
    """Half-space data of the shifted sets K(xi), one offset row per path.

    The anchors scale linearly in xi, so the offsets are xi times the offsets
    of the unit-shift set while the normals are shared.
    """
    base = scenario.polyhedron(1.0)
    return base.normals, xi[:, None] * base.offsets


def _physical_batch(
    scenario: Scenario, km: KernelMatrix, seed: int, start: int, count: int, project: bool
):
    """Terminal prices, terminal martingale weights, and breach mask for a batch."""
    grid = scenario.grid
    dt = grid.dt
    params = scenario.market
    xi = xi_draws(scenario.xi, seed, start, count)
    dw = w_increments(scenario, seed, start, count)
    b_values = transform_increments(dw, km)
    db = np.diff(b_values, axis=1)
    constraint = _constraint_data(scenario, xi) if project else None
    states = euler_paths(
        scenario.coefficients, xi, db, scenario.initial_state, dt, project_onto=constraint
    )
    vol = states @ params.projections.T
    v_left = vol[:, :-1, :]
    floor = 0.5 * xi[:, None, None]
    breached = np.any(v_left <= floor, axis=(1, 2))
    v_safe = np.where(v_left <= floor, 1.0, v_left)

    th = (params.rate - params.drifts) / v_safe
    log_weight = np.sum(th * dw, axis=(1, 2)) - 0.5 * dt * np.sum(th * th, axis=(1, 2))
    log_incr = (params.drifts - 0.5 * v_left**2) * dt + v_left * dw
    with np.errstate(over="ignore"):  # breached paths may overflow; discarded later
        weight = np.exp(log_weight)
        terminal = params.initial_prices * np.exp(np.sum(log_incr, axis=1))
    return terminal, weight, breached


def _riskneutral_batch(
    scenario: Scenario, km: KernelMatrix, seed: int, start: int, count: int, project: bool
):
    """Terminal prices under the risk-neutral coupling, plus breach mask.

    The shifted increments are i.i.d. Gaussian; the physical increments are
    recovered causally (left-point market price of risk) and feed the kernel
    reconstruction of the driver one row at a time.
    """
    grid = scenario.grid
    n, d = grid.steps, scenario.dims
    dt = grid.dt
    params = scenario.market
    xi = xi_draws(scenario.xi, seed, start, count)
    dw_star = w_increments(scenario, seed, start, count)
    dw = np.empty_like(dw_star)
    constraint = _constraint_data(scenario, xi) if project else None

    x = np.broadcast_to(scenario.initial_state, (count, d)).copy()
    b_prev = np.zeros((count, d))
    s_log = np.zeros((count, d))
    breached = np.zeros(count, dtype=bool)
    floor = 0.5 * xi[:, None]
    kernel_rows = km.entries
    for i in range(n):
        v_i = x @ params.projections.T
        breached |= np.any(v_i <= floor, axis=1)
        v_safe = np.where(v_i <= floor, 1.0, v_i)
        th_i = (params.rate - params.drifts) / v_safe
        th_i[breached] = 0.0  # freeze breached paths; they are discarded later
        dw[:, i] = dw_star[:, i] + th_i * dt
        b_next = np.tensordot(kernel_rows[i, : i + 1], dw[:, : i + 1], axes=([0], [1]))
        db_step = b_next - b_prev
        db_step[breached] = 0.0
        x = _euler_step(scenario, xi, x, db_step, dt)
        if constraint is not None:
            x = project_into(x, constraint[0], constraint[1])
        b_prev = b_next
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"state became non-finite at step {i + 1}")
        s_log += (params.rate - 0.5 * v_safe**2) * dt + v_safe * dw_star[:, i]
    with np.errstate(over="ignore"):  # breached paths may overflow; discarded later
        terminal = params.initial_prices * np.exp(s_log)
    return terminal, np.ones(count), breached


def _run_batches(scenario, mc, batch_fn):
    seed = scenario.seed if mc.seed is None else mc.seed
    km = build_kernel_matrix(scenario.grid, scenario.hurst)
    ranges = [
        (start, min(mc.batch_size, mc.paths - start))
        for start in range(0, mc.paths, mc.batch_size)
    ]
    if mc.threads > 1:
        with ThreadPoolExecutor(max_workers=mc.threads) as pool:
            futures = [
                pool.submit(batch_fn, scenario, km, seed, start, count, mc.project)
                for start, count in ranges
            ]
            parts = [f.result() for f in futures]
    else:
        parts = [
            batch_fn(scenario, km, seed, start, count, mc.project)
            for start, count in ranges
        ]
    terminal = np.concatenate([p[0] for p in parts])
    weight = np.concatenate([p[1] for p in parts])
    breached = np.concatenate([p[2] for p in parts])
    return terminal, weight, breached, seed


def _check_scenario(scenario: Scenario) -> None:
    """Reject scenarios whose boundary conditions fail the cone-mode check."""
    law = scenario.xi
    if isinstance(law, SingularXi):
        probes = (law.cutoff, 0.5 * law.cutoff)
    else:
        probes = (law.value,)
    for xi in probes:
        report = check_viability_conditions(
            scenario.coefficients,
            scenario.polyhedron(xi),
            xi,
            mode="cone",
            samples_per_face=64,
        )
        if not report.passed:
            raise ValueError(
                "scenario fails the cone-mode boundary conditions at xi="
                f"{xi:g}:\n{report.format_table()}"
            )


def _assemble(payoff, scenario, terminal, weight, breached, seed) -> MCResult:
    total = terminal.shape[0]
    n_breached = int(np.count_nonzero(breached))
    if n_breached > MAX_BREACH_FRACTION * total:
        raise BreachRateError(
            f"{n_breached} of {total} paths breached the volatility floor "
            f"(limit {MAX_BREACH_FRACTION:.1%}); the estimate is not trustworthy"
        )
    keep = ~breached
    discount = math.exp(-scenario.market.rate * scenario.grid.horizon)
    values = discount * weight[keep] * payoff_values(payoff, terminal[keep])
    estimate = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return MCResult(estimate, stderr, int(values.size), int(seed), n_breached)


def price_physical_weighted(payoff, scenario: Scenario, mc: MCConfig) -> MCResult:
    """Average of martingale-weighted discounted payoffs under the physical draws."""
    if mc.check_conditions:
        _check_scenario(scenario)
    terminal, weight, breached, seed = _run_batches(scenario, mc, _physical_batch)
    return _assemble(payoff, scenario, terminal, weight, breached, seed)


def price_riskneutral(payoff, scenario: Scenario, mc: MCConfig) -> MCResult:
    """Average of discounted payoffs under the directly simulated driftless measure."""
    if mc.check_conditions:
        _check_scenario(scenario)
    terminal, weight, breached, seed = _run_batches(scenario, mc, _riskneutral_batch)
    return _assemble(payoff, scenario, terminal, weight, breached, seed)


def agreement_zscore(a: MCResult, b: MCResult) -> float:
    """z-score of the difference of two estimates with independent-error bars."""
    return (a.estimate - b.estimate) / math.hypot(a.stderr, b.stderr)


def physical_terminal_sample(scenario: Scenario, mc: MCConfig):
    """Terminal prices, martingale weights, and breach mask for diagnostics.

    Exposes the raw physical-measure sample so that moment identities (weight
    mean one, weighted discounted prices matching spot) can be tested without
    re-simulating per payoff.
    """
    terminal, weight, breached, _ = _run_batches(scenario, mc, _physical_batch)
    return terminal, weight, breached


def bs_reference_price(
    s0: float, strike: float, rate: float, sigma: float, maturity: float, kind: str = "call"
) -> float:
    """Closed-form lognormal reference price for the constant-volatility case."""
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    if sigma <= 0 or maturity <= 0:
        raise ValueError("sigma and maturity must be positive")
    if strike < 0:
        raise ValueError("strike must be nonnegative")
    if strike == 0:
        return float(s0) if kind == "call" else 0.0
    sq = sigma * math.sqrt(maturity)
    d1 = (math.log(s0 / strike) + (rate + 0.5 * sigma**2) * maturity) / sq
    d2 = d1 - sq
    df = math.exp(-rate * maturity)
    phi = _norm_cdf
    if kind == "call":
        return s0 * phi(d1) - strike * df * phi(d2)
    return strike * df * phi(-d2) - s0 * phi(-d1)


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def simulate_scenario_paths(
    scenario: Scenario, n_paths: int, project: bool = False
) -> list[dict]:
    """Full per-path pipeline output for plotting and inspection.

    Returns one dict per path with keys xi, w, b, state, vol, prices, margin
    (the slack of the state inside its shifted constraint set at each grid
    time).  Intended for small path counts; pricing uses the batched engine.
    """
    grid = scenario.grid
    params = scenario.market
    km = build_kernel_matrix(grid, scenario.hurst)
    out = []
    for p in range(n_paths):
        xi = float(xi_draws(scenario.xi, scenario.seed, p, 1)[0])
        dw = w_increments(scenario, scenario.seed, p, 1)
        b_values = transform_increments(dw, km)
        poly = scenario.polyhedron(xi)
        states = euler_paths(
            scenario.coefficients,
            xi,
            np.diff(b_values, axis=1),
            scenario.initial_state,
            grid.dt,
            project_onto=poly if project else None,
        )[0]
        w_path = SamplePath(grid, np.vstack([np.zeros(scenario.dims), np.cumsum(dw[0], axis=0)]))
        vol = states @ params.projections.T
        v_left = vol[:-1]
        log_incr = (params.drifts - 0.5 * v_left**2) * grid.dt + v_left * dw[0]
        prices = params.initial_prices * np.exp(
            np.vstack([np.zeros(scenario.dims), np.cumsum(log_incr, axis=0)])
        )
        margin = np.min(
            poly.offsets - states @ poly.normals.T, axis=1
        )
        out.append(
            {
                "xi": xi,
                "w": w_path.values,
                "b": b_values[0],
                "state": states,
                "vol": vol,
                "prices": prices,
                "margin": margin,
            }
        )
    return out
