"""Randomized verification suites. Trial ``i`` always uses seed ``seed + i``."""

from __future__ import annotations

import time

import numpy as np

from .circuits import depth_one_compress
from .deutsch import SolverOptions, consistency_residual, entropy_maximality_gap, solve_fixed_point
from .errors import ConfigError
from .linalg import Operator, projector, trace_norm
from .pathint import path_sum_table, random_model, teleportation_table
from .pctc import maximally_entangled, pctc_evolve, teleportation_oracle
from .rand import random_density, random_pure_state, random_unitary
from .scenarios import brute_force_sat, builtin_scenarios, postselected_sat, run_scenario

DEFAULT_LAYOUTS = ("2|2", "2|4", "4|2", "2,2|2", "3|3", "2,2|4", "4|4", "2|2,2,2", "2,2,2|2")


def parse_layout(text: str) -> tuple[list[int], list[int]]:
    """'2,2|2' -> chronology dims [2, 2], loop dims [2]."""
    try:
        chron, ctc = text.split("|")
        return [int(x) for x in chron.split(",") if x], [int(x) for x in ctc.split(",") if x]
    except ValueError as exc:
        raise ConfigError(f"bad layout {text!r}; expected e.g. '2,2|2'") from exc


def _rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(seed + trial)


def pctc_oracle_suite(trials=100, seed=0, tol=1e-10, layouts=DEFAULT_LAYOUTS) -> dict:
    """pctc_evolve against the explicit teleportation construction."""
    worst = 0.0
    forbidden_mismatch = 0
    for i in range(trials):
        rng = _rng(seed, i)
        chron, ctc = parse_layout(layouts[i % len(layouts)])
        dims = tuple(chron + ctc)
        u = Operator(random_unitary(int(np.prod(dims)), rng), dims)
        d_in = int(np.prod(chron))
        rho = projector(random_pure_state(d_in, rng)) if i % 2 == 0 else random_density(d_in, rng)
        loops = list(range(len(chron), len(dims)))
        a = pctc_evolve(u, rho, loops)
        b = teleportation_oracle(u, rho, loops)
        if a.forbidden != b.forbidden:
            forbidden_mismatch += 1
            continue
        if not a.forbidden:
            worst = max(worst, trace_norm(a.output.matrix - b.output.matrix))
        worst = max(worst, abs(a.success_probability - b.success_probability))
    return {"suite": "pctc-oracle", "trials": trials, "max_deviation": worst,
            "forbidden_mismatches": forbidden_mismatch, "tolerance": tol,
            "passed": worst <= tol and forbidden_mismatch == 0}


# (d_sys, d_ctc, steps); the last rows sit at the enumeration caps
PATHINT_SIZES = ((2, 2, 3), (2, 2, 4), (1, 2, 3), (2, 1, 3), (3, 2, 3), (2, 3, 3),
                 (4, 2, 2), (2, 4, 2), (4, 4, 2), (8, 2, 2), (2, 2, 6), (4, 2, 4),
                 (4, 4, 5), (2, 8, 5), (4, 4, 6), (8, 2, 6))


def pathint_suite(trials=50, seed=0, tol=1e-10, sizes=PATHINT_SIZES) -> dict:
    """Path sums against teleportation amplitudes, with default and rotated EPR states."""
    worst = 0.0
    for i in range(trials):
        rng = _rng(seed, i)
        d_sys, d_ctc, steps = sizes[i % len(sizes)]
        m = random_model(rng, d_sys, d_ctc, steps)
        paths = path_sum_table(m)
        # any maximally entangled state: local unitary on the purification side
        v = random_unitary(d_ctc, rng)
        for epr in (None, np.kron(np.eye(d_ctc), v) @ maximally_entangled(d_ctc)):
            worst = max(worst, float(np.abs(paths - teleportation_table(m, epr)).max()))
    return {"suite": "pathint-equivalence", "trials": trials, "max_deviation": worst,
            "tolerance": tol, "passed": worst <= tol}


def degenerate_loop_unitary(rng, d_ctc: int, d_a: int) -> np.ndarray:
    """Block-diagonal coupling on [CTC, A] whose loop map has several fixed states.

    The loop space splits into blocks; each block couples to A through its
    own random unitary, so coherences between blocks decay while each block
    keeps its own fixed state.
    """
    sizes = []
    left = d_ctc
    while left:
        s = int(rng.integers(1, left + 1))
        sizes.append(s)
        left -= s
    u = np.zeros((d_ctc * d_a, d_ctc * d_a), dtype=complex)
    start = 0
    for s in sizes:
        block = random_unitary(s * d_a, rng)
        idx = np.arange(start * d_a, (start + s) * d_a)
        u[np.ix_(idx, idx)] = block
        start += s
    return u


def deutsch_suite(trials=100, seed=0, tol=1e-8, samples=200, gap_tol=1e-7) -> dict:
    """Consistency residual and entropy maximality for builtins and random instances."""
    worst_res = 0.0
    worst_gap = -np.inf
    failures = []
    opts = SolverOptions(tol=tol)
    for cfg in builtin_scenarios():
        if cfg.model in ("deutsch", "both"):
            rep = run_scenario(cfg)
            rep = rep[-1] if isinstance(rep, tuple) else rep
            worst_res = max(worst_res, rep.consistency_residual)
    for i in range(trials):
        rng = _rng(seed, i)
        d_ctc = int(rng.integers(2, 5))
        d_a = int(rng.integers(2, 4))
        kind = i % 3
        if kind == 0:
            u = random_unitary(d_ctc * d_a, rng)
        elif kind == 1:
            u = degenerate_loop_unitary(rng, d_ctc, d_a)
        else:
            u = np.kron(random_unitary(d_ctc, rng), random_unitary(d_a, rng))
        rho_a = random_density(d_a, rng, rank=int(rng.integers(1, d_a + 1)))
        try:
            sol = solve_fixed_point(u, rho_a, opts)
        except Exception as exc:  # report, don't abort the suite
            failures.append(f"trial {i}: {exc}")
            continue
        worst_res = max(worst_res, consistency_residual(u, sol.rho_ctc, rho_a))
        if sol.directions:  # a unique fixed point has nothing to perturb
            worst_gap = max(worst_gap, entropy_maximality_gap(sol, rng, samples))
    # negative when every probe lost entropy; 0 when no instance had a degenerate fixed set
    worst_gap = float(worst_gap) if np.isfinite(worst_gap) else 0.0
    return {"suite": "deutsch-consistency", "trials": trials, "max_residual": worst_res,
            "max_entropy_excess": worst_gap, "failures": failures, "tolerance": tol,
            "passed": not failures and worst_res <= tol and worst_gap <= gap_tol}


def depth1_suite(trials=50, seed=0, tol=1e-9) -> dict:
    """Depth-one compressed gate chains against sequential application."""
    worst = 1.0
    for i in range(trials):
        rng = _rng(seed, i)
        d = 2 if i % 2 == 0 else 4
        k = int(rng.integers(1, 5 if d == 2 else 4))
        gates = [random_unitary(d, rng) for _ in range(k)]
        rho = projector(random_pure_state(d, rng))
        rep = depth_one_compress(gates, rho)
        if rep.forbidden:
            worst = 0.0
            continue
        worst = min(worst, rep.extra["fidelity_vs_sequential"])
    return {"suite": "depth1", "trials": trials, "min_fidelity": worst, "tolerance": tol,
            "passed": worst >= 1 - tol}


def random_cnf(rng, n: int) -> list[list[int]]:
    m = int(rng.integers(1, 9))
    clauses = []
    for _ in range(m):
        width = int(rng.integers(1, n + 1))
        vars_ = rng.choice(np.arange(1, n + 1), size=width, replace=False)
        clauses.append([int(v) if rng.random() < 0.5 else -int(v) for v in vars_])
    return clauses


def sat_suite(trials=200, seed=0) -> dict:
    """Post-selected SAT against brute-force enumeration on random CNF."""
    mismatches = []
    for i in range(trials):
        rng = _rng(seed, i)
        n = int(rng.integers(1, 5))
        clauses = random_cnf(rng, n)
        expected = brute_force_sat(clauses, n)
        got = postselected_sat(clauses, n)
        uniform = all(abs(p - 1 / len(expected)) < 1e-9 for p in got.distribution.values()) \
            if expected else True
        if got.satisfiable != bool(expected) or got.support != set(expected) or not uniform:
            mismatches.append({"clauses": clauses, "n": n})
    return {"suite": "sat-bruteforce", "trials": trials, "mismatches": len(mismatches),
            "examples": mismatches[:3], "passed": not mismatches}


SUITES = {
    "pctc-oracle": pctc_oracle_suite,
    "pathint-equivalence": pathint_suite,
    "deutsch-consistency": deutsch_suite,
    "depth1": depth1_suite,
    "sat-bruteforce": sat_suite,
}


def run_suite(name: str, **kw) -> dict:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    kw = {k: v for k, v in kw.items() if v is not None}
    start = time.perf_counter()
    out = SUITES[name](**kw)
    out["runtime"] = time.perf_counter() - start
    return out
