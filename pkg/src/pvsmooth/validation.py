"""Independent verification of solved dispatches and tiny-instance oracles.

Nothing in this module touches the LP machinery: constraints are recomputed
from the raw series with plain numpy, and the brute-force optimizer
enumerates discretized dispatches directly. Disagreement between these
checks and the solver is how formulation or solver bugs surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .economics import BatterySpec, DieselSpec, EconomicParams, compute_factors
from .formulation import HOURS_PER_YEAR, ConstraintConfig, DispatchSolution
from .pvmodel import PowerSeries

RESIDUAL_TOL = 1e-6

CONSTRAINT_NAMES = (
    "balance",
    "ramp",
    "soc_recursion",
    "soc_bounds",
    "power_bounds",
    "grid_cap",
    "fuel_cap",
)


@dataclass(frozen=True)
class ValidationReport:
    """Worst residual per constraint family, in kW or kWh as appropriate.

    ``worst_step`` holds the position within the dispatch series (not the
    original trace index) where the residual peaks, or None when the family
    has no per-step structure or does not apply.
    """

    residuals: dict
    worst_step: dict
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "tolerance": self.tolerance,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "worst_step": {k: (None if v is None else int(v)) for k, v in self.worst_step.items()},
        }


def _max_at(values: np.ndarray) -> tuple[float, int | None]:
    if len(values) == 0:
        return 0.0, None
    k = int(np.argmax(values))
    return float(values[k]), k


def check_dispatch(
    sol: DispatchSolution,
    pv: PowerSeries,
    cfg: ConstraintConfig,
    batt: BatterySpec,
    diesel: DieselSpec | None = None,
    tolerance: float = RESIDUAL_TOL,
) -> ValidationReport:
    """Recompute every dispatch constraint from the series themselves."""
    n = len(sol.p_grid)
    for name in ("p_batt", "e_batt"):
        if len(getattr(sol, name)) != n:
            raise ValueError(f"{name} has {len(getattr(sol, name))} steps, expected {n}")
    for name in ("p_curt", "p_diesel"):
        if len(getattr(sol, name)) not in (0, n):
            raise ValueError(f"{name} has {len(getattr(sol, name))} steps, expected 0 or {n}")
    if len(sol.steps) != n:
        raise ValueError(f"steps has {len(sol.steps)} entries, expected {n}")

    p_pv = pv.values[sol.steps]
    p_curt = sol.p_curt if len(sol.p_curt) else np.zeros(n)
    p_diesel = sol.p_diesel if len(sol.p_diesel) else np.zeros(n)
    h = pv.step_hours

    residuals: dict = {}
    worst: dict = {}

    balance = np.abs(sol.p_grid - (p_pv + sol.p_batt - p_curt + p_diesel))
    residuals["balance"], worst["balance"] = _max_at(balance)

    # ramp applies between consecutive retained steps of the same trace block
    adjacent = np.diff(sol.steps) == 1
    jumps = np.abs(np.diff(sol.p_grid))[adjacent]
    if math.isfinite(cfg.fluctuation_limit) and len(jumps):
        excess = np.maximum(jumps - cfg.fluctuation_limit, 0.0)
        val, k = _max_at(excess)
        residuals["ramp"] = val
        worst["ramp"] = None if k is None else int(np.flatnonzero(adjacent)[k]) + 1
    else:
        residuals["ramp"], worst["ramp"] = 0.0, None

    soc = np.abs(sol.e_batt[1:] - sol.e_batt[:-1] + h * sol.p_batt[:-1])
    val, k = _max_at(soc)
    residuals["soc_recursion"] = val
    worst["soc_recursion"] = None if k is None else k + 1

    band = np.maximum(
        batt.soc_min_fraction * sol.e_batt_max - sol.e_batt,
        sol.e_batt - sol.e_batt_max,
    )
    residuals["soc_bounds"], worst["soc_bounds"] = _max_at(np.maximum(band, 0.0))

    power = np.abs(sol.p_batt) - sol.p_batt_max
    power = np.maximum(power, -p_curt)  # curtailment must be >= 0
    power = np.maximum(power, p_curt - p_pv)  # and below available PV
    power = np.maximum(power, -p_diesel)
    power = np.maximum(power, p_diesel - sol.p_diesel_max)
    sizing_neg = -min(sol.p_batt_max, sol.e_batt_max, sol.p_diesel_max, 0.0)
    val, k = _max_at(np.maximum(power, 0.0))
    residuals["power_bounds"] = max(val, sizing_neg)
    worst["power_bounds"] = k

    grid = np.maximum(sol.p_grid - cfg.grid_cap, -sol.p_grid)
    residuals["grid_cap"], worst["grid_cap"] = _max_at(np.maximum(grid, 0.0))

    if diesel is not None and len(sol.p_diesel):
        cap = (diesel.annual_fuel_cap_liters / diesel.fuel_per_kwh) * (
            pv.total_hours / HOURS_PER_YEAR
        )
        residuals["fuel_cap"] = max(float(h * p_diesel.sum() - cap), 0.0)
    else:
        residuals["fuel_cap"] = 0.0
    worst["fuel_cap"] = None

    passed = all(residuals[name] <= tolerance for name in CONSTRAINT_NAMES)
    return ValidationReport(residuals=residuals, worst_step=worst, tolerance=tolerance, passed=passed)


@dataclass(frozen=True)
class OracleResult:
    """Best feasible discretized dispatch found by exhaustive search."""

    objective: float
    p_batt: np.ndarray
    p_curt: np.ndarray
    p_diesel: np.ndarray
    p_grid: np.ndarray
    p_batt_max: float
    e_batt_max: float
    p_diesel_max: float


MAX_ORACLE_STEPS = 4
MAX_ORACLE_COMBOS = 60_000_000


def _minimal_energy_rating(
    d_cum: np.ndarray, x_min: float, mode: str, r: float | None
) -> np.ndarray:
    """Cost-minimal E_bMAX for fixed cumulative discharge trajectories.

    ``d_cum`` has shape (n_steps, ...); entry k is the energy discharged
    before step k (row 0 is zero). Infeasible fixed-fraction combinations
    come back as +inf.
    """
    d_max = np.max(d_cum, axis=0)
    d_min = np.min(d_cum, axis=0)
    if mode == "free-bounded":
        return (d_max - d_min) / (1.0 - x_min)
    need = np.zeros_like(d_max)
    # initial energy pinned at r * E: D_k <= (r - x_min) E and D_k >= -(1 - r) E
    with np.errstate(divide="ignore", invalid="ignore"):
        if r - x_min > 0:
            need = np.maximum(need, d_max / (r - x_min))
        else:
            need = np.where(d_max > 1e-12, np.inf, need)
        if 1.0 - r > 0:
            need = np.maximum(need, -d_min / (1.0 - r))
        else:
            need = np.where(d_min < -1e-12, np.inf, need)
    return need


def brute_force_optimum(
    pv: PowerSeries,
    case_id: str,
    batt: BatterySpec,
    econ: EconomicParams,
    cfg: ConstraintConfig,
    diesel: DieselSpec | None = None,
    *,
    power_step_kw: float = 10.0,
    energy_step_kwh: float = 10.0,
    p_batt_window: tuple[float, float] | None = None,
    p_diesel_limit_kw: float | None = None,
) -> OracleResult | None:
    """Exhaustively optimize a tiny instance on a kW grid.

    Battery power, curtailment and diesel power are enumerated per step on a
    ``power_step_kw`` grid; for each dispatch the sizing variables are set to
    their cost-minimal values in closed form (max |P_b|, max P_D, and the
    smallest energy rating containing the stored-energy excursion), so
    ``energy_step_kwh`` is accepted for interface completeness but never
    drives a search dimension. Returns None when no enumerated point is
    feasible. ``p_batt_window`` bounds the battery search grid; callers
    asserting optimality gaps must pick it wide enough to cover the LP
    optimum.
    """
    if energy_step_kwh <= 0 or power_step_kw <= 0:
        raise ValueError("grid steps must be > 0")
    steps = pv.retained_indices()
    p_pv = pv.retained_values()
    n = len(steps)
    if n > MAX_ORACLE_STEPS:
        raise ValueError(f"oracle horizon limited to {MAX_ORACLE_STEPS} steps, got {n}")
    has_curt = case_id in ("B", "D")
    has_diesel = case_id in ("C", "D")
    if has_diesel and diesel is None:
        raise ValueError(f"case {case_id} needs a diesel spec")

    h = pv.step_hours
    s = power_step_kw
    if p_batt_window is None:
        w = s * math.ceil((float(np.max(p_pv)) + cfg.fluctuation_limit) / s)
        p_batt_window = (-w, w)

    def grid(lo: float, hi: float) -> np.ndarray:
        k0 = math.ceil(lo / s - 1e-9)
        k1 = math.floor(hi / s + 1e-9)
        return s * np.arange(k0, k1 + 1)

    axes = [grid(p_batt_window[0], p_batt_window[1]) for _ in range(n)]
    n_b = n
    if has_curt:
        axes += [grid(0.0, float(p_pv[i])) for i in range(n)]
    if has_diesel:
        d_hi = p_diesel_limit_kw
        if d_hi is None:
            d_hi = float(np.max(p_pv)) + cfg.fluctuation_limit
        axes += [grid(0.0, d_hi) for _ in range(n)]

    sizes = [len(a) for a in axes]
    combos = math.prod(sizes)
    if combos > MAX_ORACLE_COMBOS:
        raise ValueError(f"{combos} grid combinations exceed the enumeration guard")

    annualization = cfg.annualization
    if annualization is None:
        annualization = HOURS_PER_YEAR / pv.total_hours
    factors = compute_factors(batt, econ, diesel if has_diesel else None,
                              om_full_horizon=cfg.om_full_horizon)
    rev = econ.energy_price * h * annualization * factors.revenue_multiplier
    if cfg.undiscounted_diesel_costs:
        beta_t = batt.capital_power / batt.eff_power
        gamma_t = batt.capital_energy / batt.eff_energy
    else:
        beta_t = factors.beta / batt.eff_power
        gamma_t = factors.gamma / batt.eff_energy
    sigma_t = 0.0
    fuel_t = 0.0
    emission = 0.0
    fuel_cap = math.inf
    if has_diesel:
        sigma_t = factors.sigma / diesel.efficiency
        fuel_t = diesel.fuel_per_kwh * diesel.fuel_price * h * annualization
        if not cfg.undiscounted_diesel_costs:
            fuel_t *= factors.revenue_multiplier
        emission = diesel.emission_charge_total
        fuel_cap = (diesel.annual_fuel_cap_liters / diesel.fuel_per_kwh) * (
            pv.total_hours / HOURS_PER_YEAR
        )

    adjacent = np.diff(steps) == 1
    lim = cfg.fluctuation_limit

    # iterate a python loop over enough leading axes to keep each broadcast
    # block under ~1e6 points, then vectorize the trailing axes
    split = len(axes)
    block = 1
    while split > 0 and block * sizes[split - 1] <= 1_000_000:
        split -= 1
        block *= sizes[split]
    inner_nd = len(axes) - split
    shaped = [
        a.reshape((1,) * (k - split) + (-1,) + (1,) * (len(axes) - k - 1))
        for k, a in enumerate(axes)
        if k >= split
    ]
    best_val = -math.inf
    best_idx: tuple | None = None

    for lead in np.ndindex(*sizes[:split]):
        all_axes = [
            np.asarray(axes[k][lead[k]]).reshape((1,) * inner_nd) for k in range(split)
        ]
        all_axes.extend(shaped)
        bat = all_axes[:n_b]
        cur = all_axes[n_b : n_b + n] if has_curt else [0.0] * n
        dsl = all_axes[-n:] if has_diesel else [0.0] * n

        p_g = [p_pv[i] + bat[i] - cur[i] + dsl[i] for i in range(n)]
        feas = np.ones((1,) * inner_nd, dtype=bool)
        for i in range(n):
            feas = feas & (p_g[i] >= -1e-9) & (p_g[i] <= cfg.grid_cap + 1e-9)
        if math.isfinite(lim):
            for i in range(1, n):
                if adjacent[i - 1]:
                    feas = feas & (np.abs(p_g[i] - p_g[i - 1]) <= lim + 1e-9)
        if has_diesel and math.isfinite(fuel_cap):
            d_sum = sum(dsl)
            feas = feas & (h * d_sum <= fuel_cap + 1e-9)

        # cumulative discharged energy before each step
        d_cum = [np.zeros((1,) * inner_nd)]
        for i in range(1, n):
            d_cum.append(d_cum[-1] + h * bat[i - 1])
        d_stack = np.stack([np.broadcast_to(d, np.broadcast_shapes(*[x.shape for x in d_cum]))
                            for d in d_cum])
        if cfg.cyclic_soc:
            feas = feas & (d_stack[-1] <= 1e-9)
        e_need = _minimal_energy_rating(
            d_stack, batt.soc_min_fraction, cfg.initial_soc_mode, cfg.initial_soc_fraction
        )
        feas = feas & np.isfinite(e_need)

        if not np.any(feas):
            continue

        p_b_abs = np.abs(bat[0])
        for b in bat[1:]:
            p_b_abs = np.maximum(p_b_abs, np.abs(b))
        p_b_abs = np.broadcast_to(p_b_abs, feas.shape)
        obj = rev * sum(np.broadcast_to(g, feas.shape).astype(float) for g in p_g)
        obj = obj - beta_t * p_b_abs - gamma_t * np.broadcast_to(e_need, feas.shape)
        if has_diesel:
            d_max = np.broadcast_to(dsl[0], feas.shape).astype(float)
            for d in dsl[1:]:
                d_max = np.maximum(d_max, d)
            d_sum = sum(np.broadcast_to(d, feas.shape).astype(float) for d in dsl)
            # fuel_t is already a per-kW-of-P_D cost (the h inside covers energy)
            obj = obj - sigma_t * d_max - fuel_t * d_sum - emission
        obj = np.where(feas, obj, -math.inf)
        k_best = int(np.argmax(obj))
        if obj.flat[k_best] > best_val:
            best_val = float(obj.flat[k_best])
            best_idx = tuple(lead) + np.unravel_index(k_best, feas.shape)

    if best_idx is None:
        return None

    picks = [float(axes[k][best_idx[k]]) for k in range(len(axes))]
    b = np.array(picks[:n_b])
    c = np.array(picks[n_b : n_b + n]) if has_curt else np.zeros(0)
    d = np.array(picks[-n:]) if has_diesel else np.zeros(0)
    g = p_pv + b - (c if len(c) else 0.0) + (d if len(d) else 0.0)
    d_cum = np.concatenate([[0.0], h * np.cumsum(b[:-1])])
    e_max = float(
        _minimal_energy_rating(
            d_cum.reshape(-1, 1), batt.soc_min_fraction,
            cfg.initial_soc_mode, cfg.initial_soc_fraction,
        )[0]
    )
    return OracleResult(
        objective=best_val,
        p_batt=b,
        p_curt=c,
        p_diesel=d,
        p_grid=g,
        p_batt_max=float(np.max(np.abs(b))) if len(b) else 0.0,
        e_batt_max=e_max,
        p_diesel_max=float(np.max(d)) if len(d) else 0.0,
    )


def oracle_gap_bound(
    pv: PowerSeries,
    case_id: str,
    batt: BatterySpec,
    econ: EconomicParams,
    cfg: ConstraintConfig,
    diesel: DieselSpec | None = None,
    *,
    power_step_kw: float = 10.0,
) -> float:
    """Worst objective loss from snapping an optimal dispatch to the grid.

    Moving every enumerated coordinate by at most half a grid step moves each
    P_G by at most half a step per decision stream, the power rating by half
    a step, the stored-energy excursion by n*h*step, and the diesel terms
    accordingly; summing the products with the objective coefficients bounds
    the LP-minus-oracle gap whenever the snapped point stays feasible.
    """
    n = int(np.count_nonzero(pv.active))
    h = pv.step_hours
    s = power_step_kw
    annualization = cfg.annualization
    if annualization is None:
        annualization = HOURS_PER_YEAR / pv.total_hours
    has_diesel = case_id in ("C", "D")
    factors = compute_factors(batt, econ, diesel if has_diesel else None,
                              om_full_horizon=cfg.om_full_horizon)
    rev = econ.energy_price * h * annualization * factors.revenue_multiplier
    streams = 1 + (1 if case_id in ("B", "D") else 0) + (1 if has_diesel else 0)
    if cfg.undiscounted_diesel_costs:
        beta_t = batt.capital_power / batt.eff_power
        gamma_t = batt.capital_energy / batt.eff_energy
    else:
        beta_t = factors.beta / batt.eff_power
        gamma_t = factors.gamma / batt.eff_energy
    bound = rev * n * streams * s / 2.0
    bound += beta_t * s / 2.0
    bound += gamma_t * n * h * s / (1.0 - batt.soc_min_fraction)
    if has_diesel:
        fuel_t = diesel.fuel_per_kwh * diesel.fuel_price * h * annualization
        if not cfg.undiscounted_diesel_costs:
            fuel_t *= factors.revenue_multiplier
        bound += factors.sigma / diesel.efficiency * s / 2.0
        bound += fuel_t * n * s / 2.0
    return bound


@dataclass(frozen=True)
class CaseComparison:
    """Cross-case summary shaped like a sizing-and-revenue results table."""

    net_benefits: dict
    decrements: dict  # fraction of the unconstrained baseline revenue lost
    baseline_net_benefit: float
    battery_power_kw: dict
    battery_energy_kwh: dict
    diesel_power_kw: dict
    max_curtailed_kw: dict

    def as_dict(self) -> dict:
        return {
            "baseline_net_benefit": self.baseline_net_benefit,
            "cases": {
                cid: {
                    "net_benefit": self.net_benefits[cid],
                    "decrement_vs_baseline": self.decrements[cid],
                    "battery_power_kw": self.battery_power_kw[cid],
                    "battery_energy_kwh": self.battery_energy_kwh[cid],
                    "diesel_power_kw": self.diesel_power_kw[cid],
                    "max_curtailed_kw": self.max_curtailed_kw[cid],
                }
                for cid in self.net_benefits
            },
        }

    def as_text(self) -> str:
        cases = list(self.net_benefits)
        rows = [
            ("Net benefit ($)", [f"{self.net_benefits[c]:.2f}" for c in cases]),
            ("Decrement vs baseline (%)", [f"{100 * self.decrements[c]:.2f}" for c in cases]),
            ("Battery power rating (kW)", [f"{self.battery_power_kw[c]:.1f}" for c in cases]),
            ("Battery energy rating (kWh)", [f"{self.battery_energy_kwh[c]:.1f}" for c in cases]),
            ("Diesel rating (kW)", [f"{self.diesel_power_kw[c]:.1f}" for c in cases]),
            ("Max curtailed power (kW)", [f"{self.max_curtailed_kw[c]:.1f}" for c in cases]),
        ]
        label_w = max(len(r[0]) for r in rows)
        col_w = max(10, *(len(v) for _, vals in rows for v in vals))
        head = " " * label_w + "".join(f"{c:>{col_w + 2}}" for c in cases)
        lines = [head]
        for label, vals in rows:
            lines.append(f"{label:<{label_w}}" + "".join(f"{v:>{col_w + 2}}" for v in vals))
        return "\n".join(lines)


NESTING_REL_TOL = 1e-6

#: case pairs whose feasible sets nest: the first cannot out-earn the second
NESTED_PAIRS = (("A", "B"), ("A", "C"), ("B", "D"), ("C", "D"))


def compare_cases(
    results: dict[str, DispatchSolution], baseline: DispatchSolution
) -> CaseComparison:
    """Summarize solved cases against the no-smoothing baseline.

    Raises on a nesting violation (a case with a strictly larger feasible
    set earning strictly less beyond tolerance): that is a solver or
    formulation bug, not a modelling outcome.
    """
    base = baseline.net_benefit
    for lo, hi in NESTED_PAIRS:
        if lo in results and hi in results:
            lo_v = results[lo].net_benefit
            hi_v = results[hi].net_benefit
            if lo_v > hi_v + NESTING_REL_TOL * (1.0 + abs(hi_v)):
                raise ValueError(
                    f"nesting violation: case {lo} earns {lo_v:.6g} > case {hi} {hi_v:.6g}"
                )
    scale = abs(base) if base != 0.0 else 1.0
    return CaseComparison(
        net_benefits={c: r.net_benefit for c, r in results.items()},
        decrements={c: (base - r.net_benefit) / scale for c, r in results.items()},
        baseline_net_benefit=base,
        battery_power_kw={c: r.p_batt_max for c, r in results.items()},
        battery_energy_kwh={c: r.e_batt_max for c, r in results.items()},
        diesel_power_kw={c: r.p_diesel_max for c, r in results.items()},
        max_curtailed_kw={
            c: (float(np.max(r.p_curt)) if len(r.p_curt) else 0.0) for c, r in results.items()
        },
    )
