"""Comparison schemes and a shared allocation evaluator.

``power_only_closed_loop`` keeps the equal compute/backhaul split and only
optimizes transmit power for the sum cost.  ``communication_oriented``
ignores control altogether: it splits compute to minimize total computation
time and water-fills power for throughput, so at low power budgets distant
loops routinely end up unstabilizable.
"""

from __future__ import annotations

import math

import numpy as np

from .compute import RegionLabel, classify_region, min_compute_time, optimal_split
from .control import LN2
from .errors import NoConvergence
from .solver import (
    Allocation,
    LoopAllocation,
    Scenario,
    SolverConfig,
    _feasible_power_init,
    _LoopData,
    _power_objective,
    _spg,
    project_budget_simplex,
)


def water_filling(gains: np.ndarray, p_total: float) -> np.ndarray:
    """Throughput-maximizing power split over parallel channels.

    Exact active-set solution of max sum log(1 + g_k p_k): active channels
    share a common water level mu with p_k = mu - 1/g_k.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains <= 0.0) or p_total <= 0.0:
        raise ValueError("gains and the power budget must be positive")
    inv = 1.0 / gains
    order = np.argsort(inv)
    inv_sorted = inv[order]
    k = gains.size
    active = k
    while active > 0:
        mu = (p_total + inv_sorted[:active].sum()) / active
        if mu > inv_sorted[active - 1]:
            break
        active -= 1
    p = np.zeros(k)
    p[order[:active]] = mu - inv_sorted[:active]
    return p


def power_only_closed_loop(scenario: Scenario, config: SolverConfig | None = None) -> Allocation:
    """Equal compute/backhaul split; power alone optimized for the sum cost."""
    cfg = config or SolverConfig()
    data = _LoopData(scenario)
    k = data.k
    b = scenario.budgets
    f = np.full(k, b.f_max_cycles / k)
    r = np.full(k, b.r_max_bits / k)
    t_commu = data.t_cycle - data.true_min_times(f, r)
    p0 = _feasible_power_init(data, t_commu, "power-only baseline")
    fun = _power_objective(data, t_commu)
    project = lambda x: project_budget_simplex(x, 1.0)  # noqa: E731
    x, _, _, _, _ = _spg(
        fun, project, p0 / b.p_max_w, cfg.inner_tol, cfg.inner_max_iters, "power-only baseline"
    )
    p = x * b.p_max_w
    e = data.bandwidth * t_commu * data.spectral(p)
    l, _ = data.lqr_terms(e)
    loops = tuple(
        LoopAllocation(
            p_w=float(p[i]),
            f_cycles=float(f[i]),
            r_bits=float(r[i]),
            t_commu_s=float(t_commu[i]),
            lqr_cost=float(l[i]),
            split=optimal_split(float(f[i]), float(r[i]), float(data.d_bits[i]), scenario.compute),
        )
        for i in range(k)
    )
    return Allocation(loops=loops, sum_lqr=float(l.sum()))


def _sum_time_objective(data: _LoopData, r_eq: float):
    """Total true computation time as a function of normalized compute."""
    params = data.scenario.compute
    a, beta, rho = params.alpha, params.beta, params.rho
    delay = params.relay_delay
    f_max = data.scenario.budgets.f_max_cycles

    def value_grad(x):
        f = x * f_max
        total = 0.0
        grad = np.zeros(data.k)
        for i in range(data.k):
            d = float(data.d_bits[i])
            fi = float(f[i])
            region = classify_region(fi, r_eq, d, params)
            if region is RegionLabel.S1:
                den = beta * r_eq + (1.0 - rho) * fi
                total += beta * d / den + delay
                grad[i] = -(1.0 - rho) * beta * d / (den * den)
            elif region is RegionLabel.S2:
                den = rho * fi + (a - beta) * r_eq
                num = rho * a * d - rho * delay * fi + beta * delay * r_eq
                total += num / den + delay
                grad[i] = (-rho * delay * den - rho * num) / (den * den)
            elif region is RegionLabel.S3:
                den = fi + a * r_eq
                num = a * d - delay * fi
                total += num / den + delay
                grad[i] = (-delay * den - num) / (den * den)
            else:
                total += a * d / fi
                grad[i] = -a * d / (fi * fi)
        return total, grad * f_max

    return value_grad


def communication_oriented(scenario: Scenario, config: SolverConfig | None = None) -> Allocation:
    """Equal backhaul split, compute minimizing total computation time,
    power water-filled for throughput; loop costs evaluated afterwards.

    Loops whose delivered entropy falls at or below their intrinsic rate
    come out with an infinite cost rather than an error.
    """
    cfg = config or SolverConfig()
    data = _LoopData(scenario)
    k = data.k
    b = scenario.budgets
    r_eq = b.r_max_bits / k
    fun = _sum_time_objective(data, r_eq)
    project = lambda x: project_budget_simplex(x, 1.0)  # noqa: E731
    x0 = np.full(k, 1.0 / k)
    try:
        x, _, _, _, _ = _spg(fun, project, x0, cfg.inner_tol, cfg.inner_max_iters, "compute split")
    except NoConvergence:
        x = x0  # the equal split is a valid, if unpolished, fallback
    f = x * b.f_max_cycles
    p = water_filling(data.gamma, b.p_max_w)
    r = np.full(k, r_eq)
    t_comp = data.true_min_times(f, r)
    t_commu = data.t_cycle - t_comp
    loops = []
    total = 0.0
    for i in range(k):
        if t_commu[i] <= 0.0:
            cost = math.inf
        else:
            e = data.bandwidth * t_commu[i] * math.log1p(data.gamma[i] * p[i]) / LN2
            cost = data.lqr_single(i, e)
        total += cost
        loops.append(
            LoopAllocation(
                p_w=float(p[i]),
                f_cycles=float(f[i]),
                r_bits=float(r[i]),
                t_commu_s=float(max(t_commu[i], 0.0)),
                lqr_cost=cost,
                split=optimal_split(float(f[i]), float(r[i]), float(data.d_bits[i]), scenario.compute),
            )
        )
    return Allocation(loops=tuple(loops), sum_lqr=total)


def evaluate_allocation(scenario: Scenario, alloc: Allocation) -> float:
    """Sum LQR cost of an allocation recomputed from first principles.

    Ignores any stored costs and windows: takes the true minimal computation
    time at each loop's (f, r), gives the loop the full cycle remainder to
    communicate, and inverts the entropy curve.  Infinite when any loop
    cannot be stabilized.
    """
    data = _LoopData(scenario)
    total = 0.0
    for i, la in enumerate(alloc.loops):
        t_commu = data.t_cycle[i] - min_compute_time(
            la.f_cycles, la.r_bits, float(data.d_bits[i]), scenario.compute
        )
        if t_commu <= 0.0:
            return math.inf
        e = data.bandwidth * t_commu * math.log1p(data.gamma[i] * max(la.p_w, 0.0)) / LN2
        cost = data.lqr_single(i, e)
        if not math.isfinite(cost):
            return math.inf
        total += cost
    return total
