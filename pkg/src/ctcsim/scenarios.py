"""Named, reproducible experiments contrasting Deutsch and P-CTC semantics."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import circuits
from .circuits import CtcCircuit, GateOp, SystemLayout, Wire, compile_circuit
from .deutsch import SolverOptions, deutsch_evolve
from .errors import CapExceededError, ConfigError
from .linalg import (
    DensityMatrix,
    Operator,
    density,
    fidelity,
    mutual_information,
    partial_trace,
    permute,
    projector,
    validate_density,
    von_neumann_entropy,
)
from .pctc import QUBIT_BELL, maximally_entangled, pctc_evolve, teleportation_oracle
from .rand import random_density, random_pure_state
from .report import SCHEMA_VERSION, EvolutionReport

MODELS = ("deutsch", "pctc", "both")
KINDS = ("circuit", "depth1", "sat")
MAX_SAT_VARS = 4
MAX_SAT_CLAUSES = 16

_NAMED = {
    "0": np.array([1, 0]),
    "1": np.array([0, 1]),
    "+": np.array([1, 1]) / np.sqrt(2),
    "-": np.array([1, -1]) / np.sqrt(2),
}


@dataclass
class ScenarioConfig:
    """One experiment.

    ``input_state`` describes the chronology wires (all but the first when
    ``reference_entangled``): a label string with one character per wire
    (``0``, ``1``, ``+``, ``-`` or a qudit digit), ``"mixed"``,
    ``{"kind": "random", "seed": s, "pure": bool}`` or
    ``{"kind": "matrix", "matrix": <Operator JSON>}``.

    ``kind`` selects how the circuit is produced: ``circuit`` uses
    ``circuit`` as given, ``depth1`` compresses ``params["gates"]`` and
    ``sat`` builds the post-selection circuit for ``params["clauses"]``.
    """

    name: str
    model: str = "both"
    circuit: CtcCircuit | None = None
    input_state: str | dict = "0"
    reference_entangled: bool = False
    tolerance: float = 1e-9
    seed: int = 0
    kind: str = "circuit"
    params: dict = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "circuit" and self.circuit is None:
            raise ConfigError(f"scenario {self.name!r} has no circuit")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "model": self.model,
            "kind": self.kind,
            "circuit": None if self.circuit is None else self.circuit.to_dict(),
            "input_state": self.input_state,
            "reference_entangled": self.reference_entangled,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "params": self.params,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ScenarioConfig:
        if not isinstance(data, dict) or "name" not in data:
            raise ConfigError("scenario config must be an object with a 'name'")
        circ = data.get("circuit")
        if circ is None and "wires" in data:
            circ = {"wires": data["wires"], "gates": data.get("gates", [])}
        return cls(
            name=str(data["name"]),
            model=data.get("model", "both"),
            circuit=None if circ is None else CtcCircuit.from_dict(circ),
            input_state=data.get("input_state", "0"),
            reference_entangled=bool(data.get("reference_entangled", False)),
            tolerance=float(data.get("tolerance", 1e-9)),
            seed=int(data.get("seed", 0)),
            kind=data.get("kind", "circuit"),
            params=dict(data.get("params") or {}),
            description=data.get("description", ""),
        )


def resolve_input(desc, dims: list[int], seed: int = 0) -> np.ndarray:
    """Density matrix on wires of the given dims from an input-state description."""
    d = math.prod(dims)
    if isinstance(desc, dict):
        kind = desc.get("kind")
        if kind == "random":
            rng = np.random.default_rng(desc.get("seed", seed))
            if desc.get("pure", True):
                return projector(random_pure_state(d, rng))
            return random_density(d, rng)
        if kind == "matrix":
            op = Operator.from_dict(desc["matrix"])
            if op.dim != d:
                raise ConfigError(f"input matrix has dim {op.dim}, wires need {d}")
            return validate_density(op).matrix
        raise ConfigError(f"unknown input_state kind {kind!r}")
    if desc == "mixed":
        return np.eye(d, dtype=complex) / d
    if not isinstance(desc, str) or len(desc) != len(dims):
        raise ConfigError(f"input_state {desc!r} needs one label per wire ({len(dims)} wires)")
    vec = np.ones(1, dtype=complex)
    for label, dw in zip(desc, dims):
        if label in _NAMED and (dw == 2 or label in "01"):
            v = np.zeros(dw, dtype=complex)
            v[: 2] = _NAMED[label]
        elif label.isdigit() and int(label) < dw:
            v = np.zeros(dw, dtype=complex)
            v[int(label)] = 1
        else:
            raise ConfigError(f"cannot prepare label {label!r} on a wire of dim {dw}")
        vec = np.kron(vec, v)
    return projector(vec)


def _sat_oracle(clauses, n: int) -> np.ndarray:
    """Permutation |x, a> -> |x, a xor f(x)> with x1 the most significant wire."""
    dim = 2 ** (n + 1)
    perm = np.zeros((dim, dim), dtype=complex)
    for bits in itertools.product((0, 1), repeat=n):
        f = int(_satisfies(bits, clauses))
        x = int("".join(map(str, bits)) or "0", 2)
        for a in (0, 1):
            perm[2 * x + (a ^ f), 2 * x + a] = 1
    return perm


def _satisfies(bits, clauses) -> bool:
    return all(any((bits[abs(lit) - 1] == 1) == (lit > 0) for lit in clause) for clause in clauses)


def _check_cnf(clauses, n: int):
    if not 1 <= n <= MAX_SAT_VARS:
        raise CapExceededError(f"post-selected SAT supports 1..{MAX_SAT_VARS} variables")
    if len(clauses) > MAX_SAT_CLAUSES:
        raise CapExceededError(f"at most {MAX_SAT_CLAUSES} clauses")
    for clause in clauses:
        for lit in clause:
            if lit == 0 or abs(lit) > n:
                raise ConfigError(f"literal {lit} out of range for {n} variables")


def sat_circuit(clauses, n: int) -> CtcCircuit:
    """Variables on wires 0..n-1, ancilla on wire n, loop qubit on wire n+1.

    Hadamards spread the variables, the oracle writes f(x) into the
    ancilla, and ``X_anc CZ X_anc`` couples it to the loop so that
    ``Tr_CTC`` of the coupling is ``2 |1><1|_anc``.
    """
    _check_cnf(clauses, n)
    layout = SystemLayout(tuple(Wire(2) for _ in range(n + 1)) + (Wire(2, circuits.CTC),))
    gates = [GateOp((k,), "H") for k in range(n)]
    gates.append(GateOp(tuple(range(n + 1)), matrix=Operator(_sat_oracle(clauses, n))))
    gates += [GateOp((n,), "X"), GateOp((n, n + 1), "CZ"), GateOp((n,), "X")]
    return CtcCircuit(layout, tuple(gates))


def _gate_list(specs) -> list[Operator]:
    out = []
    for g in specs:
        if isinstance(g, str):
            out.append(circuits.gate(g))
        elif "matrix" in g:
            out.append(Operator.from_dict(g["matrix"]))
        else:
            out.append(circuits.gate(g["name"], **g.get("params", {})))
    return out


def build_circuit(cfg: ScenarioConfig) -> CtcCircuit:
    if cfg.kind == "circuit":
        return cfg.circuit
    if cfg.kind == "sat":
        return sat_circuit(cfg.params["clauses"], int(cfg.params["n"]))
    gates = _gate_list(cfg.params.get("gates", []))
    u = circuits.depth_one_unitary(gates)
    d, k = u.dims[0], len(u.dims)
    layout = SystemLayout((Wire(d),) + tuple(Wire(d, circuits.CTC) for _ in range(k - 1)))
    return CtcCircuit(layout, (GateOp(tuple(range(k)), matrix=u),))


def _input_state(cfg: ScenarioConfig, layout: SystemLayout) -> tuple[np.ndarray, list[int]]:
    """Joint input on [chron..., R?] and its dims."""
    chron_dims = [layout.dims[k] for k in layout.chronology_indices]
    if not chron_dims:
        raise ConfigError("scenario needs at least one chronology wire")
    if cfg.kind == "sat" and cfg.input_state == "0":
        spec = "0" * len(chron_dims)
    else:
        spec = cfg.input_state
    if not cfg.reference_entangled:
        return resolve_input(spec, chron_dims, cfg.seed), chron_dims
    d0 = chron_dims[0]
    rest = chron_dims[1:]
    rest_state = resolve_input(spec, rest, cfg.seed) if rest else np.eye(1)
    pair = projector(maximally_entangled(d0))
    joint = np.kron(pair, rest_state)  # [A1, R, rest...]
    dims = [d0, d0] + rest
    n = len(dims)
    order = [0] + list(range(2, n)) + [1]  # -> [A1, rest..., R]
    return permute(joint, order, dims).matrix, chron_dims + [d0]


def _common_metrics(report: EvolutionReport, cfg: ScenarioConfig, n_chron: int, dims, rho_in):
    report.scenario = cfg.name
    if report.output is None:
        return report
    out = report.output
    if cfg.reference_entangled:
        report.mutual_information = mutual_information(out, dims, range(n_chron))
        report.entropies["output_system"] = von_neumann_entropy(
            partial_trace(out, [n_chron], dims))
        report.entropies["reference"] = von_neumann_entropy(
            partial_trace(out, range(n_chron), dims))
    report.extra["fidelity_to_input"] = fidelity(out, rho_in)
    return report


def _run_pctc(cfg, u: Operator, layout: SystemLayout, rho, dims) -> EvolutionReport:
    start = time.perf_counter()
    ctc = layout.ctc_indices
    if cfg.reference_entangled:
        d_ref = dims[-1]
        u = Operator(np.kron(u.matrix, np.eye(d_ref)), u.dims + (d_ref,))
    route = cfg.params.get("route", "direct")
    if route == "oracle":
        epr = cfg.params.get("epr")
        if isinstance(epr, str):
            epr = QUBIT_BELL[epr].amplitudes
        outcome = teleportation_oracle(u, rho, ctc, epr=epr)
    else:
        outcome = pctc_evolve(u, rho, ctc)
    report = outcome.to_report(wall_time=0.0)
    report.extra["route"] = route
    report = _common_metrics(report, cfg, len(layout.chronology_indices), dims, rho)
    report.wall_time = time.perf_counter() - start
    return report


def _run_deutsch(cfg, u: Operator, layout: SystemLayout, rho, dims) -> EvolutionReport:
    start = time.perf_counter()
    ctc, chron = layout.ctc_indices, layout.chronology_indices
    n_chron = len(chron)
    chron_dims = [layout.dims[k] for k in chron]
    u_cf = permute(u, ctc + chron)
    d_ctc = math.prod(layout.dims[k] for k in ctc)
    u_cf = Operator(u_cf.matrix, (d_ctc, math.prod(chron_dims)))
    # Deutsch's map only ever sees the reduced chronology state
    rho_a = partial_trace(rho, [n_chron], dims).matrix if cfg.reference_entangled else rho
    opts = SolverOptions(tol=cfg.tolerance)
    report = deutsch_evolve(u_cf, density(rho_a, chron_dims, 1e-8), opts)
    # restore the per-wire factorizations flattened for the solver
    ctc_dims = tuple(layout.dims[k] for k in ctc)
    report.rho_ctc = DensityMatrix(report.rho_ctc.matrix, ctc_dims, report.rho_ctc.corrections)
    report.output = DensityMatrix(report.output.matrix, tuple(chron_dims), report.output.corrections)
    if cfg.reference_entangled:
        rho_r = partial_trace(rho, range(n_chron), dims).matrix
        joint = np.kron(report.output.matrix, rho_r)
        report.output = validate_density(Operator(joint, tuple(dims)), 1e-8)
    report.entropies["output"] = von_neumann_entropy(report.output)
    report = _common_metrics(report, cfg, n_chron, dims, rho)
    report.wall_time = time.perf_counter() - start
    return report


def run_scenario(cfg: ScenarioConfig):
    """Run one scenario; returns a report, or a (pctc, deutsch) pair for model 'both'."""
    circ = build_circuit(cfg)
    u = compile_circuit(circ)
    layout = circ.layout
    if not layout.ctc_indices:
        raise ConfigError(f"scenario {cfg.name!r} has no CTC wire")
    rho, dims = _input_state(cfg, layout)

    reports = []
    if cfg.model in ("pctc", "both"):
        reports.append(_run_pctc(cfg, u, layout, rho, dims))
    if cfg.model in ("deutsch", "both"):
        reports.append(_run_deutsch(cfg, u, layout, rho, dims))
    for r in reports:
        r.extra["kind"] = cfg.kind
        if cfg.kind == "sat" and r.output is not None:
            r.extra["distribution"] = _assignment_distribution(r.output, int(cfg.params["n"]))
        if cfg.kind == "depth1" and r.output is not None:
            seq = rho
            for g in _gate_list(cfg.params.get("gates", [])):
                seq = g.matrix @ seq @ g.matrix.conj().T
            r.extra["fidelity_vs_sequential"] = fidelity(r.output, seq)
    return reports[0] if len(reports) == 1 else tuple(reports)


def _assignment_distribution(out: Operator, n: int) -> dict:
    # variables are wires 0..n-1, ancilla wire n
    reduced = partial_trace(out, [n], (2,) * (n + 1)).matrix
    probs = np.real(np.diag(reduced))
    return {format(i, f"0{n}b"): float(p) for i, p in enumerate(probs) if p > 1e-12}


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    distribution: dict
    assignment: str | None
    success_probability: float
    report: EvolutionReport = field(repr=False, compare=False)

    @property
    def support(self) -> set[str]:
        return set(self.distribution)


def postselected_sat(clauses, n: int) -> SatResult:
    """Solve a CNF (DIMACS-style signed literals, x1 = variable 1) by post-selection.

    Assignment strings list x1 first. Unsatisfiable formulas come back as
    Forbidden, i.e. ``satisfiable=False`` with an empty distribution.
    """
    clauses = [list(c) for c in clauses]
    cfg = ScenarioConfig("sat", model="pctc", kind="sat",
                         params={"clauses": clauses, "n": n})
    report = run_scenario(cfg)
    if report.forbidden:
        return SatResult(False, {}, None, report.success_probability, report)
    dist = report.extra["distribution"]
    best = max(sorted(dist), key=lambda k: dist[k])
    return SatResult(True, dist, best, report.success_probability, report)


def brute_force_sat(clauses, n: int) -> list[str]:
    """Every satisfying assignment, x1 first, by classical enumeration."""
    return ["".join(map(str, bits)) for bits in itertools.product((0, 1), repeat=n)
            if _satisfies(bits, clauses)]


def _circ(wires, gates) -> CtcCircuit:
    layout = SystemLayout(tuple(Wire(d, k) for d, k in wires))
    return CtcCircuit(layout, tuple(GateOp(tuple(w), name) for name, w in gates))


_QUBIT_LOOP = ((2, circuits.CHRONOLOGY), (2, circuits.CTC))


def builtin_scenarios() -> list[ScenarioConfig]:
    return [
        ScenarioConfig(
            "grandfather",
            circuit=_circ(_QUBIT_LOOP, [("X", [1])]),
            input_state="0",
            description="NOT on the loop qubit: P-CTC forbids it, Deutsch settles on I/2.",
        ),
        ScenarioConfig(
            "grandfather-cnot",
            circuit=_circ(_QUBIT_LOOP, [("CNOT", [1, 0]), ("SWAP", [0, 1])]),
            input_state="1",
            description="Older self (loop) flips the younger self (|1>), who then enters "
                        "the loop: the loop value is mapped to its negation.",
        ),
        ScenarioConfig(
            "teleport-identity",
            model="pctc",
            circuit=_circ(_QUBIT_LOOP, [("SWAP", [0, 1])]),
            input_state={"kind": "random", "seed": 7},
            params={"route": "oracle", "epr": "psi-"},
            description="Input enters the loop and re-emerges: post-selected teleportation "
                        "through Psi-, success probability 1/4.",
        ),
        ScenarioConfig(
            "inert-ctc",
            circuit=_circ(_QUBIT_LOOP, [("H", [0])]),
            input_state="0",
            description="Loop untouched: both semantics reduce to H rho H.",
        ),
        ScenarioConfig(
            "decorrelation",
            circuit=_circ(_QUBIT_LOOP, [("SWAP", [0, 1]), ("X", [0])]),
            input_state="",
            reference_entangled=True,
            description="Half of a Bell pair goes through (X x 1) SWAP; P-CTC keeps the "
                        "correlation with the reference, Deutsch destroys it.",
        ),
        ScenarioConfig(
            "depth1-demo",
            model="pctc",
            kind="depth1",
            input_state="0",
            params={"gates": ["H", "T", "H"]},
            description="Three gates run in a single time step through two loops.",
        ),
        ScenarioConfig(
            "sat-demo",
            model="pctc",
            kind="sat",
            params={"clauses": [[1, 2], [-1, -2]], "n": 2},
            description="(x1 or x2) and (not x1 or not x2): uniform over 01 and 10.",
        ),
    ]


def get_scenario(name: str) -> ScenarioConfig:
    for cfg in builtin_scenarios():
        if cfg.name == name:
            return cfg
    raise ConfigError(f"unknown scenario {name!r}")


def decorrelation_test(seed: int = 0) -> tuple[EvolutionReport, EvolutionReport]:
    """(pctc, deutsch) reports for half of a Bell pair sent through the grandfather-adjacent gate."""
    return run_scenario(replace(get_scenario("decorrelation"), seed=seed, model="both"))
