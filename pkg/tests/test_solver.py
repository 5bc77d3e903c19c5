import math

import numpy as np
import pytest

from sc3opt import (
    Allocation,
    Budgets,
    ComputeParams,
    Infeasible,
    LinkParams,
    LoopAllocation,
    Scenario,
    SolverConfig,
    Unstabilizable,
    check_allocation,
    closed_form_lqr,
    generate_scenario,
    make_anchors,
    min_compute_time,
    sca_solve,
    solve_inner,
)
from sc3opt.solver import project_budget_simplex
from conftest import make_loop, symmetric_two_loop_scenario, tight_single_loop_scenario


def test_project_budget_simplex():
    inside = np.array([0.2, 0.3])
    assert np.allclose(project_budget_simplex(inside, 1.0), inside)
    assert np.allclose(project_budget_simplex(np.array([-0.5, 0.25]), 1.0), [0.0, 0.25])
    out = project_budget_simplex(np.array([0.9, 0.9]), 1.0)
    assert out.sum() == pytest.approx(1.0)
    assert np.allclose(out, [0.5, 0.5])
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.normal(0, 1, size=6)
        x = project_budget_simplex(v, 1.0)
        assert x.min() >= 0.0 and x.sum() <= 1.0 + 1e-12
        # projection is no farther than any random feasible candidate
        w = rng.random(6)
        w = w / max(w.sum(), 1.0)
        assert np.linalg.norm(x - v) <= np.linalg.norm(w - v) + 1e-12


def test_single_loop_corner_solution():
    sc = tight_single_loop_scenario()
    alloc, trace = sca_solve(sc)
    la = alloc.loops[0]
    b = sc.budgets
    # a single loop has no cross-loop freedom: one or two rounds settle it
    assert trace.converged and len(trace.iterations) - 1 <= 2
    assert la.p_w == pytest.approx(b.p_max_w, rel=1e-6)
    assert la.f_cycles == pytest.approx(b.f_max_cycles, rel=1e-6)
    assert alloc.sum_lqr == pytest.approx(
        closed_form_lqr(la.p_w, la.f_cycles, la.r_bits, sc.loops[0], sc.compute, sc.link),
        rel=1e-9,
    )
    # a line search away from the corner never improves the cost
    def cost_or_inf(p, f, r):
        try:
            return closed_form_lqr(p, f, r, sc.loops[0], sc.compute, sc.link)
        except Unstabilizable:
            return math.inf

    for shrink in (0.5, 0.8, 0.95):
        assert cost_or_inf(shrink * la.p_w, la.f_cycles, la.r_bits) >= alloc.sum_lqr - 1e-12
        assert cost_or_inf(la.p_w, shrink * la.f_cycles, la.r_bits) >= alloc.sum_lqr - 1e-12


def test_symmetric_two_loops_split_equally():
    sc = symmetric_two_loop_scenario()
    alloc, _ = sca_solve(sc)
    a, b = alloc.loops
    assert abs(a.p_w - b.p_w) <= 0.005 * (a.p_w + b.p_w)
    assert abs(a.f_cycles - b.f_cycles) <= 0.005 * (a.f_cycles + b.f_cycles)
    assert abs(a.r_bits - b.r_bits) <= 0.005 * (a.r_bits + b.r_bits)


def test_trace_monotone_and_bounded():
    for seed in range(3):
        sc = generate_scenario(seed)
        alloc, trace = sca_solve(sc)
        objs = trace.objectives
        assert all(b <= a + 1e-9 * a for a, b in zip(objs, objs[1:]))
        assert trace.converged
        assert len(objs) - 1 <= 10
        assert alloc.sum_lqr == pytest.approx(objs[-1], rel=1e-9)


def test_warm_start_converges_immediately():
    sc = generate_scenario(1)
    alloc, _ = sca_solve(sc)
    p = np.array([la.p_w for la in alloc.loops])
    f = np.array([la.f_cycles for la in alloc.loops])
    r = np.array([la.r_bits for la in alloc.loops])
    _, trace = sca_solve(sc, init=(p, f, r))
    assert trace.converged
    assert len(trace.iterations) - 1 <= 2
    first, last = trace.objectives[0], trace.objectives[-1]
    assert (first - last) / first < 5e-5


def test_solve_inner_feasible_under_true_latency():
    sc = generate_scenario(2)
    k = sc.k
    f = np.full(k, sc.budgets.f_max_cycles / k)
    r = np.full(k, sc.budgets.r_max_bits / k)
    anchors = make_anchors(sc, f, r)
    alloc = solve_inner(sc, anchors)
    report = check_allocation(sc, alloc)
    assert report.ok, report.violations
    final, _ = sca_solve(sc)
    assert final.sum_lqr <= alloc.sum_lqr * (1 + 1e-6)


def test_surrogate_cost_dominates_true_cost_along_iterates():
    # at any point the majorized windows are shorter, so the per-loop cost
    # computed through the surrogate is never below the true-latency cost,
    # and the two coincide at the anchor itself
    sc = generate_scenario(1)
    alloc, trace = sca_solve(sc)
    for rec in trace.iterations[1:]:
        f0 = np.array([a[0] for a in rec.anchors])
        r0 = np.array([a[1] for a in rec.anchors])
        anchors = make_anchors(sc, f0, r0)
        inner = solve_inner(sc, anchors)
        surr_cost = inner.sum_lqr
        true_cost = sum(
            closed_form_lqr(la.p_w, la.f_cycles, la.r_bits, loop, sc.compute, sc.link)
            for loop, la in zip(sc.loops, inner.loops)
        )
        assert surr_cost >= true_cost - 1e-9 * true_cost
    # at the anchor point itself, surrogate and true windows coincide
    from sc3opt.surrogate import SurrogateAnchor, convex_compute_time

    for loop, la in zip(sc.loops, alloc.loops):
        anchor = SurrogateAnchor.at(la.f_cycles, la.r_bits, loop.data_bits, sc.compute)
        surr = float(convex_compute_time(anchor.f0, anchor.r0, anchor, loop.data_bits, sc.compute))
        true = min_compute_time(anchor.f0, anchor.r0, loop.data_bits, sc.compute)
        assert surr == pytest.approx(true, rel=1e-9)


def test_check_allocation_flags_violations():
    sc = generate_scenario(0)
    alloc, _ = sca_solve(sc)
    assert check_allocation(sc, alloc).ok

    inflated = Allocation(
        loops=tuple(
            LoopAllocation(
                p_w=la.p_w,
                f_cycles=la.f_cycles,
                r_bits=la.r_bits,
                t_commu_s=la.t_commu_s + 0.02,  # busts the cycle budget
                lqr_cost=la.lqr_cost,
                split=la.split,
            )
            for la in alloc.loops
        ),
        sum_lqr=alloc.sum_lqr,
    )
    rep = check_allocation(sc, inflated)
    assert not rep.ok and any("cycle time" in v for v in rep.violations)

    greedy = Allocation(
        loops=tuple(
            LoopAllocation(
                p_w=la.p_w * 10.0,
                f_cycles=la.f_cycles,
                r_bits=la.r_bits,
                t_commu_s=la.t_commu_s,
                lqr_cost=la.lqr_cost,
                split=la.split,
            )
            for la in alloc.loops
        ),
        sum_lqr=alloc.sum_lqr,
    )
    rep = check_allocation(sc, greedy)
    assert not rep.ok and any("power" in v for v in rep.violations)


def test_closed_form_lqr_composition(link):
    loop = make_loop(h=1.0, n=1, l_min=0.5, c=1.0, distance_m=100.0)
    compute = ComputeParams(alpha=100.0, beta=50.0, rho=0.25, tau=5e-3)
    # with an explicit window this is just entropy composed with the curve
    value = closed_form_lqr(10.0, 5e9, 1e7, loop, compute, link, t_commu_s=0.001)
    e = 5.0 * math.log2(1 + 1e5)
    assert value == pytest.approx(0.5 + 1.0 / (2.0 ** (2.0 * (e - 1.0)) - 1.0))
    # huge entropy budgets pin the cost to its floor
    saturated = closed_form_lqr(10.0, 5e9, 1e7, loop, compute, link, t_commu_s=0.05)
    assert saturated == pytest.approx(0.5)
    with pytest.raises(Unstabilizable):
        closed_form_lqr(10.0, 5e9, 1e7, loop, compute, link, t_commu_s=0.0)


def test_infeasible_reports_failing_loops():
    # an intrinsic rate far beyond what the channel can carry
    sc = Scenario(
        loops=(make_loop(h=1e4, distance_m=5000.0),),
        compute=ComputeParams(alpha=100.0, beta=50.0, rho=0.25, tau=5e-3),
        link=LinkParams(bandwidth_hz=5000.0, gamma0=1e-6, noise_power_w=1e-14, uav_height_m=100.0),
        budgets=Budgets(p_max_w=10.0, f_max_cycles=5e9, r_max_bits=5e7),
    )
    with pytest.raises(Infeasible) as err:
        sca_solve(sc)
    assert err.value.report
    assert err.value.report[0]["loop"] == 0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_outer_iters=0)


def test_scenario_validation():
    compute = ComputeParams(alpha=100.0, beta=50.0, rho=0.25, tau=5e-3)
    link = LinkParams(bandwidth_hz=5000.0, gamma0=1e-6, noise_power_w=1e-14, uav_height_m=100.0)
    with pytest.raises(ValueError):
        Scenario(loops=(), compute=compute, link=link, budgets=Budgets(1.0, 1e9, 1e7))
    with pytest.raises(ValueError):
        Budgets(p_max_w=0.0, f_max_cycles=1e9, r_max_bits=1e7)
    with pytest.raises(ValueError):
        make_loop(data_bits=0.0)
