#!/usr/bin/env python3
"""Full-size acceptance run: quoted operating points, oracle agreement and reciprocity.

Random draws cover passive and gain cavities (kappa1 in [-8, 3]).

Exit code is nonzero when any check fails. NRLIGHT_THREADS sets the process count
for the oracle loop.
"""

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = str(ROOT / "src")
if SRC_PATH not in sys.path:
    sys.path.insert(0, SRC_PATH)

from nrlight.config import load_runtime_env  # noqa: E402
from nrlight.dynamics import observed_output, settle  # noqa: E402
from nrlight.errors import NrlightError  # noqa: E402
from nrlight.experiments.runner import run_scenario  # noqa: E402
from nrlight.mean_field import pt_balance  # noqa: E402
from nrlight.models import Direction, StateVector, SweepAxis, SystemParams, VerdictKind  # noqa: E402
from nrlight.observables import isolation_ratio, transmission  # noqa: E402
from nrlight.steady import bistable_window, enumerate_branches, linear_solve  # noqa: E402

ORACLE_MATCH = 1e-6
SETTLE_T_MAX = 1000.0


def lowest_T(params: SystemParams, direction: Direction) -> float:
    return transmission(params, direction, enumerate_branches(params, direction)[0]).T


def check_operating_point() -> Tuple[bool, str]:
    """Steady-branch transmission at the balanced point, plus what a time-domain run sees there."""
    params = SystemParams()
    t_left = lowest_T(params, Direction.BACKWARD)
    t_right = lowest_T(params, Direction.FORWARD)
    ratio = isolation_ratio(t_left, t_right)
    attractors = sum(1 for d in Direction for branch in enumerate_branches(params, d) if branch.is_stable)
    observed = {d: observed_output(params, d) for d in Direction}
    seen = ", ".join(f"{d.value} {o.kind.value} T={o.T!r}" for d, o in observed.items())
    ok = t_left >= 0.98 and abs(ratio - 27.0) <= 3.0
    return ok, f"steady T_L={t_left:.4f} T_R={t_right:.3e} isolation={ratio:.2f} dB; {attractors} stable branch(es); observed: {seen}"


def check_passive_isolation() -> Tuple[bool, str]:
    passive = SystemParams(g=4.0, J=4.0, kappa1=1.0, kappa_e=3.0)
    best = (-math.inf, 0.0, 0.0)
    for eps_sq in np.linspace(0.005, 0.75, 150):
        point = passive.along(SweepAxis.EPS_P_SQ, float(eps_sq))
        t_left = lowest_T(point, Direction.BACKWARD)
        ratio = isolation_ratio(t_left, lowest_T(point, Direction.FORWARD))
        best = max(best, (ratio, float(eps_sq), t_left))
    ratio, where, t_left = best
    ok = abs(ratio - 30.0) <= 4.0 and abs(t_left - 0.3) <= 0.1
    return ok, f"max isolation {ratio:.2f} dB at eps_p^2={where:.3f}, T_L={t_left:.3f}"


def check_loop_widths() -> Tuple[bool, str]:
    passive = SystemParams(J=4.0, kappa1=1.0, kappa_e=3.0)
    widths = []
    for g in (2.0, 3.0, 4.0, 5.0, 6.0, 7.0):
        window = bistable_window(passive.replace(g=g), Direction.FORWARD)
        widths.append(window[1] - window[0] if window else 0.0)
    monotone = all(after >= before - 1e-12 for before, after in zip(widths, widths[1:]))
    absent = bistable_window(passive.replace(g=2.0, J=6.0), Direction.FORWARD) is None
    return monotone and absent, "widths " + ", ".join(f"{w:.4f}" for w in widths) + f"; J=3g monostable: {absent}"


def check_reversal() -> Tuple[bool, str]:
    result = run_scenario("fig7", use_cache=False)
    lowest = [row for row in result.rows if row.branch == 0]
    forward = {row.axis1: row for row in lowest if row.direction is Direction.FORWARD}
    backward = {row.axis1: row for row in lowest if row.direction is Direction.BACKWARD}
    point = min(forward, key=lambda v: abs(v - 0.5))
    t_right, t_left = forward[point].T or 0.0, backward[point].T or 0.0
    reversed_ok = t_right > t_left
    strong = t_left > 0 and isolation_ratio(t_left, t_right) <= -25.0
    monostable = all(
        sum(1 for row in result.rows if row.axis1 == v and row.direction is d) == 1
        for v in forward
        if v > 1.5
        for d in Direction
    )
    attractors = sum(1 for row in result.rows if row.stable)
    steps = {entry["direction"]: entry["steps"] for entry in result.metadata["hysteresis"]}
    detail = f"eps_p^2={point:.3f}: steady T_R={t_right:.3f} T_L={t_left:.2e}; {attractors} stable row(s); scan steps {steps}"
    return reversed_ok and strong and monostable, detail + f"; monostable above 1.5: {monostable}"


def check_balance() -> Tuple[bool, str]:
    result = run_scenario("fig4b", {"points": 2, "values2": [3.0], "hysteresis": False}, use_cache=False)
    recorded = result.metadata["pt_balance"]
    ok = abs(pt_balance(SystemParams())) <= 1e-12 and abs(recorded) <= 1e-12
    return ok, f"pt_balance={recorded!r}"


def draw_params(rng: np.random.Generator, g_zero: bool = False) -> SystemParams:
    return SystemParams(
        g=0.0 if g_zero else float(rng.uniform(0.5, 5.0)),
        J=float(rng.uniform(0.0, 6.0)),
        kappa1=float(rng.uniform(-8.0, 3.0)),
        kappa_e=float(rng.uniform(1.0, 4.0)),
        gamma=float(rng.uniform(0.05, 0.5)),
        delta1=float(rng.uniform(-1.0, 1.0)),
        delta2=float(rng.uniform(-1.0, 1.0)),
        eps_p=float(rng.uniform(0.05, 1.0)),
    )


def oracle_draw(seed: int) -> Dict[str, object]:
    """One random draw: stable branches must attract, settled states must be branches."""
    rng = np.random.default_rng(seed)
    params = draw_params(rng)
    direction = Direction.FORWARD if rng.random() < 0.5 else Direction.BACKWARD
    try:
        branches = enumerate_branches(params, direction)
    except NrlightError as exc:
        return {"seed": seed, "skipped": exc.code, "failures": []}
    failures: List[str] = []
    for index, branch in enumerate(branches):
        if not branch.is_stable:
            continue
        start = StateVector.from_real(branch.state.to_real() * (1.0 + 1e-4))
        verdict = settle(params, direction, start, branches=branches, t_max=SETTLE_T_MAX)
        if verdict.kind is not VerdictKind.SETTLED or verdict.branch_index != index:
            failures.append(f"stable branch {index} not an attractor ({verdict.kind.value}, {verdict.branch_index})")
    verdict = settle(params, direction, StateVector.ground(), branches=branches, t_max=SETTLE_T_MAX)
    if verdict.kind is VerdictKind.SETTLED:
        if verdict.branch_index is not None and not branches[verdict.branch_index].is_stable:
            failures.append(f"settled onto unstable branch {verdict.branch_index}")
        if not any(abs(verdict.intensity - branch.I1) <= ORACLE_MATCH for branch in branches):
            failures.append(f"settled I1={verdict.intensity!r} matches no cubic root")
    return {"seed": seed, "skipped": None, "failures": failures}


def check_oracle(draws: int, workers: int) -> Tuple[bool, str]:
    seeds = range(1000, 1000 + draws)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(oracle_draw, seeds))
    else:
        outcomes = [oracle_draw(seed) for seed in seeds]
    skipped = sum(1 for o in outcomes if o["skipped"])
    failed = [o for o in outcomes if o["failures"]]
    for outcome in failed[:10]:
        print(f"    seed {outcome['seed']}: {'; '.join(outcome['failures'])}")
    return not failed, f"{draws} draws, {len(failed)} failed, {skipped} skipped by solver errors"


def check_reciprocity(draws: int) -> Tuple[bool, str]:
    rng = np.random.default_rng(2024)
    worst = 0.0
    skipped = 0
    for _ in range(draws):
        params = draw_params(rng, g_zero=True)
        try:
            t_right = transmission(params, Direction.FORWARD, linear_solve(params, Direction.FORWARD)).T
            t_left = transmission(params, Direction.BACKWARD, linear_solve(params, Direction.BACKWARD)).T
        except NrlightError:
            skipped += 1
            continue
        worst = max(worst, abs(t_left - t_right))
    return worst < 1e-12, f"{draws} draws, max |T_L - T_R| = {worst:.2e}, {skipped} skipped"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--draws", type=int, default=1000)
    parser.add_argument("--skip-oracle", action="store_true")
    args = parser.parse_args()
    workers = max(load_runtime_env().threads, 1)

    checks = [
        ("operating point", check_operating_point),
        ("passive isolation", check_passive_isolation),
        ("loop widths", check_loop_widths),
        ("direction reversal", check_reversal),
        ("pt balance", check_balance),
        ("reciprocity", lambda: check_reciprocity(args.draws)),
    ]
    if not args.skip_oracle:
        checks.append(("oracle", lambda: check_oracle(args.draws, workers)))

    failures = 0
    for name, check in checks:
        started = time.perf_counter()
        ok, detail = check()
        elapsed = time.perf_counter() - started
        failures += 0 if ok else 1
        print(f"[{'ok' if ok else 'FAIL'}] {name} ({elapsed:.1f}s): {detail}")
    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
