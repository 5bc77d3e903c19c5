"""Independent validators: global grid search, closed-loop Monte Carlo,
and a numerical convexity probe.

The grid search exhausts small instances of the full allocation problem
without touching the solver machinery.  The Monte Carlo simulator runs an
actual quantized control loop; its uniform quantizer is far from an optimal
code, so it validates the direction and floor of the entropy-cost curve,
not its tightness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compute import min_compute_time_batch, optimal_split
from .control import LN2, LoopControlSpec
from .errors import UnsupportedStructure
from .solver import Allocation, LoopAllocation, Scenario, _LoopData


def grid_search_global(scenario: Scenario, grid_n: int = 60) -> tuple[Allocation, float]:
    """Exhaustive minimum of the allocation problem for one or two loops.

    Grids loop 1's (p, f, r) over the budgets; with two loops the remainder
    of each budget goes to loop 2, since every loop's cost is non-increasing
    in every resource.  Costs use the true minimal computation time.
    """
    if scenario.k > 2:
        raise ValueError("the grid oracle only handles one or two loops")
    if grid_n > 100:
        raise ValueError("grid_n above 100 is pointlessly slow")
    data = _LoopData(scenario)
    b = scenario.budgets
    axis = np.linspace(0.0, 1.0, grid_n + 1)
    pg, fg, rg = (m.ravel() for m in np.meshgrid(axis, axis, axis, indexing="ij"))

    def loop_costs(i: int, p, f, r):
        with np.errstate(all="ignore"):
            t_commu = data.t_cycle[i] - min_compute_time_batch(
                f, r, float(data.d_bits[i]), scenario.compute
            )
            e = data.bandwidth * t_commu * np.log1p(data.gamma[i] * p) / LN2
            good = (t_commu > 0.0) & (e > data.h[i])
            cost = np.full(e.shape, np.inf)
            if good.any():
                w = 2.0 * (e[good] - data.h[i]) / data.n[i]
                cost[good] = data.l_min[i] + data.c[i] / np.expm1(w * LN2)
        return cost

    total = loop_costs(0, pg * b.p_max_w, fg * b.f_max_cycles, rg * b.r_max_bits)
    if scenario.k == 2:
        total = total + loop_costs(
            1, (1.0 - pg) * b.p_max_w, (1.0 - fg) * b.f_max_cycles, (1.0 - rg) * b.r_max_bits
        )
    best = int(np.argmin(total))
    objective = float(total[best])
    shares = [(pg[best], fg[best], rg[best])]
    if scenario.k == 2:
        shares.append((1.0 - pg[best], 1.0 - fg[best], 1.0 - rg[best]))
    loops = []
    for i, (sp, sf, sr) in enumerate(shares):
        p_i, f_i, r_i = sp * b.p_max_w, sf * b.f_max_cycles, sr * b.r_max_bits
        t_comp = float(
            min_compute_time_batch(np.array([f_i]), np.array([r_i]), float(data.d_bits[i]), scenario.compute)[0]
        )
        t_commu = float(data.t_cycle[i]) - t_comp
        cost = float(loop_costs(i, np.array([p_i]), np.array([f_i]), np.array([r_i]))[0])
        split = None
        if f_i > 0.0 or r_i > 0.0:
            split = optimal_split(f_i, r_i, float(data.d_bits[i]), scenario.compute)
        loops.append(
            LoopAllocation(
                p_w=float(p_i),
                f_cycles=float(f_i),
                r_bits=float(r_i),
                t_commu_s=max(t_commu, 0.0),
                lqr_cost=cost,
                split=split,
            )
        )
    return Allocation(loops=tuple(loops), sum_lqr=objective), objective


@dataclass(frozen=True)
class McResult:
    empirical_cost: float
    diverged: bool
    cycles: int


def _scalar_lqr_gain(a: float, b: float, q: float, r: float) -> float:
    s = q
    for _ in range(10_000):
        s_new = q + a * a * s - (a * b * s) ** 2 / (r + b * b * s)
        if abs(s_new - s) < 1e-12:
            break
        s = s_new
    return a * b * s / (r + b * b * s)


def monte_carlo_loop(
    loop: LoopControlSpec,
    bits_per_cycle: float,
    n_cycles: int,
    seed: int,
) -> McResult:
    """Empirical LQR cost of a quantized certainty-equivalent control loop.

    Per cycle the noisy state reading is quantized by a uniform mid-rise
    quantizer over an adaptive range [-L, L] and the control is -gain
    times the reconstruction.  The range follows a worst-case containment
    recursion, L <- |a| L / levels + 4 sigma_v, re-inflating whenever a
    reading escapes it; fractional bit budgets time-share neighboring
    power-of-two level counts.  Diagonal plants run one scalar loop per
    dimension with the bit budget split proportionally to each dimension's
    entropy rate.  Divergence (state beyond the overflow bound) is reported
    in the result, not raised.
    """
    if bits_per_cycle <= 0.0:
        raise ValueError("the bit budget must be positive")
    n = loop.n
    a_diag = np.diagonal(loop.a).astype(float)
    if np.count_nonzero(loop.a - np.diag(a_diag)) != 0:
        raise UnsupportedStructure("the simulator needs a scalar or diagonal plant")
    b_diag = np.diagonal(loop.b_in).astype(float) if loop.b_in.shape == (n, n) else np.ones(n)
    q_diag = np.diagonal(loop.q_w).astype(float)
    r_diag = np.diagonal(loop.r_w).astype(float) if loop.r_w.shape == (n, n) else np.zeros(n)

    h_dims = np.abs(np.log2(np.abs(a_diag)))
    weights = h_dims / h_dims.sum() if h_dims.sum() > 0 else np.full(n, 1.0 / n)
    rng = np.random.default_rng(seed)
    sigma_v = math.sqrt(loop.sigma_v2)
    sigma_w = math.sqrt(loop.sigma_w2)
    warmup = max(n_cycles // 10, 1)

    cost_sum = 0.0
    diverged = False
    ran = n_cycles
    overflow = 1e8 * max(sigma_v, 1e-9)

    for dim in range(n):
        a, b = float(a_diag[dim]), float(b_diag[dim])
        gain = _scalar_lqr_gain(a, b, float(q_diag[dim]), float(r_diag[dim]))
        bits = bits_per_cycle * float(weights[dim])
        slack = 4.0 * (sigma_v + abs(a) * sigma_w)  # noise allowance per cycle
        span = max(slack, 1e-12)
        x = rng.normal(0.0, sigma_v)
        credit = 0.0
        dim_cost = 0.0
        dim_cycles = 0
        for t in range(n_cycles):
            credit += bits
            used = min(math.floor(credit), 30)  # whole bits spent this cycle
            credit -= used
            levels = 2 ** int(used)
            y = x + rng.normal(0.0, sigma_w) if sigma_w > 0.0 else x
            if abs(y) > span:
                span = 1.1 * abs(y)  # reading escaped, re-capture it
            if levels >= 2:
                delta = 2.0 * span / levels
                idx = min(max(math.floor(y / delta), -levels // 2), levels // 2 - 1)
                x_hat = (idx + 0.5) * delta
            else:
                x_hat = 0.0
            u = -gain * x_hat
            if t >= warmup:
                dim_cost += q_diag[dim] * x * x + r_diag[dim] * u * u
                dim_cycles += 1
            x = a * x + b * u + rng.normal(0.0, sigma_v)
            span = abs(a) * span / max(levels, 1) + slack
            if not math.isfinite(x) or abs(x) > overflow:
                diverged = True
                ran = min(ran, t + 1)
                break
        if dim_cycles > 0:
            cost_sum += dim_cost / dim_cycles
        if diverged:
            break

    cost = math.inf if diverged else cost_sum
    return McResult(empirical_cost=cost, diverged=diverged, cycles=ran)


@dataclass(frozen=True)
class ProbeReport:
    passed: bool
    violations: int
    samples: int
    max_violation: float


def convexity_probe(fn, box, n_samples: int = 500, seed: int = 0) -> ProbeReport:
    """Random midpoint convexity test of fn over an axis-aligned box.

    Draws point pairs (a, b), checks fn((a+b)/2) <= (fn(a)+fn(b))/2 up to
    1e-9 of the values' scale, and reports violation counts.  Pairs where
    fn is not finite are skipped.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples for a meaningful probe")
    box = np.asarray(box, dtype=float)
    lo, hi = box[:, 0], box[:, 1]
    rng = np.random.default_rng(seed)
    violations = 0
    tested = 0
    worst = 0.0
    for _ in range(50 * n_samples):  # draw cap for mostly-infeasible boxes
        if tested >= n_samples:
            break
        a = lo + (hi - lo) * rng.random(lo.size)
        c = lo + (hi - lo) * rng.random(lo.size)
        fa, fc = fn(a), fn(c)
        fm = fn(0.5 * (a + c))
        if not all(map(math.isfinite, (fa, fc, fm))):
            continue
        tested += 1
        scale = max(1.0, abs(fa), abs(fc))
        gap = fm - 0.5 * (fa + fc)
        if gap > 1e-9 * scale:
            violations += 1
            worst = max(worst, gap / scale)
    return ProbeReport(
        passed=violations == 0, violations=violations, samples=tested, max_violation=worst
    )
