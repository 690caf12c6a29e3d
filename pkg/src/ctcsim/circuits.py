"""Gate library, CTC-annotated layouts, circuit compilation and depth-one compression.

Gate order convention: the gate list is temporal order, so the first gate is
applied first and ends up rightmost in the compiled matrix product.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapExceededError, ConfigError, DimensionError, NonUnitaryError
from .linalg import Operator, as_operator, embed, fidelity, is_unitary
from .pctc import clock_operator, pctc_evolve, shift_operator
from .report import EvolutionReport

CHRONOLOGY = "chronology"
CTC = "ctc"


def max_dim() -> int:
    """Total Hilbert-space cap, overridable through CTCSIM_MAX_DIM."""
    raw = os.environ.get("CTCSIM_MAX_DIM", "64")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"CTCSIM_MAX_DIM must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"CTCSIM_MAX_DIM must be positive, got {cap}")
    return cap


def _controlled(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


def _swap(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1
    return s


def _rotation(pauli: np.ndarray, theta: float) -> np.ndarray:
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * pauli


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

_FIXED = {
    "X": _X,
    "Y": _Y,
    "Z": _Z,
    "H": _H,
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CNOT": _controlled(_X),
    "CX": _controlled(_X),
    "CZ": _controlled(_Z),
}


def gate(name: str, **params) -> Operator:
    """Standard gate matrices.

    Fixed gates: I, X, Y, Z, H, S, T, CNOT (CX), CZ, SWAP. Parametrized:
    RX/RY/RZ(theta), PHASE(phi), SHIFT(d), CLOCK(d), I(d), SWAP(d),
    CONTROLLED(matrix) with a qubit control as the first wire.
    """
    key = name.upper()
    if key in _FIXED:
        m = _FIXED[key]
    elif key == "I":
        m = np.eye(int(params.get("d", 2)), dtype=complex)
    elif key == "SWAP":
        m = _swap(int(params.get("d", 2)))
    elif key in ("RX", "RY", "RZ"):
        m = _rotation({"RX": _X, "RY": _Y, "RZ": _Z}[key], float(params["theta"]))
    elif key == "PHASE":
        m = np.diag([1, np.exp(1j * float(params["phi"]))])
    elif key == "SHIFT":
        m = shift_operator(int(params["d"]))
    elif key == "CLOCK":
        m = clock_operator(int(params["d"]))
    elif key in ("CONTROLLED", "CU"):
        m = _controlled(np.asarray(params["matrix"], dtype=complex))
    else:
        raise ConfigError(f"unknown gate {name!r}")
    return Operator(np.asarray(m, dtype=complex))


@dataclass(frozen=True)
class Wire:
    dim: int
    kind: str = CHRONOLOGY

    def __post_init__(self):
        if self.kind not in (CHRONOLOGY, CTC):
            raise ConfigError(f"wire kind must be {CHRONOLOGY!r} or {CTC!r}, got {self.kind!r}")
        if self.dim < 1:
            raise ConfigError(f"wire dimension must be positive, got {self.dim}")


@dataclass(frozen=True)
class SystemLayout:
    wires: tuple[Wire, ...]

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(self.wires))
        if self.total_dim > max_dim():
            raise CapExceededError(
                f"total dimension {self.total_dim} exceeds cap {max_dim()} (CTCSIM_MAX_DIM)"
            )

    @classmethod
    def of(cls, chronology: Sequence[int] = (), ctc: Sequence[int] = ()) -> SystemLayout:
        """Chronology wires first, then loop wires."""
        return cls(tuple(Wire(d) for d in chronology) + tuple(Wire(d, CTC) for d in ctc))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(w.dim for w in self.wires)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def ctc_indices(self) -> list[int]:
        return [i for i, w in enumerate(self.wires) if w.kind == CTC]

    @property
    def chronology_indices(self) -> list[int]:
        return [i for i, w in enumerate(self.wires) if w.kind == CHRONOLOGY]


@dataclass(frozen=True)
class GateOp:
    wires: tuple[int, ...]
    name: str | None = None
    matrix: Operator | None = None
    params: dict = field(default_factory=dict)

    def operator(self) -> Operator:
        if self.matrix is not None:
            return self.matrix
        return gate(self.name, **self.params)

    def to_dict(self) -> dict:
        out = {"wires": list(self.wires)}
        if self.matrix is not None:
            out["matrix"] = self.matrix.to_dict()
        else:
            out["name"] = self.name
        if self.params:
            out["params"] = self.params
        return out


@dataclass(frozen=True)
class CtcCircuit:
    layout: SystemLayout
    gates: tuple[GateOp, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        dims = self.layout.dims
        for g in self.gates:
            if any(not 0 <= w < len(dims) for w in g.wires):
                raise DimensionError(f"gate wires {g.wires} outside layout of {len(dims)} wires")
            want = math.prod(dims[w] for w in g.wires)
            if g.operator().dim != want:
                raise DimensionError(
                    f"gate {g.name or 'matrix'} has dim {g.operator().dim}, wires {g.wires} need {want}"
                )

    def then(self, other: CtcCircuit) -> CtcCircuit:
        return CtcCircuit(self.layout, self.gates + other.gates)

    def to_dict(self) -> dict:
        return {
            "wires": [{"dim": w.dim, "kind": w.kind} for w in self.layout.wires],
            "gates": [g.to_dict() for g in self.gates],
        }

    @classmethod
    def from_dict(cls, data: dict) -> CtcCircuit:
        try:
            layout = SystemLayout(tuple(Wire(int(w["dim"]), w.get("kind", CHRONOLOGY))
                                        for w in data["wires"]))
            gates = []
            for g in data.get("gates", []):
                matrix = Operator.from_dict(g["matrix"]) if "matrix" in g else None
                if matrix is None and "name" not in g:
                    raise ConfigError(f"gate entry needs 'name' or 'matrix': {g}")
                gates.append(GateOp(tuple(g["wires"]), g.get("name"), matrix,
                                    dict(g.get("params", {}))))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed circuit: {exc}") from exc
        return cls(layout, tuple(gates))


def compile_circuit(circ: CtcCircuit) -> Operator:
    dims = circ.layout.dims
    total = np.eye(circ.layout.total_dim, dtype=complex)
    for g in circ.gates:
        total = embed(g.operator().matrix, g.wires, dims).matrix @ total
    if not is_unitary(total, 1e-10):
        raise NonUnitaryError("compiled circuit is not unitary")
    return Operator(total, dims)


def _cyclic_shift(d: int, k: int) -> np.ndarray:
    """Permutation sending the content of copy i to copy i+1 (mod k)."""
    perm = np.zeros((d**k, d**k), dtype=complex)
    for idx in range(d**k):
        digits = np.unravel_index(idx, (d,) * k)
        moved = digits[-1:] + digits[:-1]
        perm[np.ravel_multi_index(moved, (d,) * k), idx] = 1
    return perm


def depth_one_unitary(gates: Sequence) -> Operator:
    """All gates applied at once on k copies of the system, then a cyclic relabeling.

    Copy 1 is the real input wire; copies 2..k are loop wires. After the
    single layer ``U_1 x ... x U_k`` the output of copy i moves to slot i+1,
    so the loop closing slot i+1 feeds gate i's output into gate i+1's input,
    and slot 1 carries the output of U_k. Tracing out the loops leaves
    ``C = U_k ... U_1``.
    """
    mats = [np.asarray(as_operator(g).matrix) for g in gates]
    if not mats:
        raise ConfigError("depth-one compression needs at least one gate")
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise DimensionError("all gates must act on the same system")
        if not is_unitary(m, 1e-10):
            raise NonUnitaryError("depth-one compression needs unitary gates")
    k = len(mats)
    if d**k > max_dim():
        raise CapExceededError(f"compressed layout dim {d ** k} exceeds cap {max_dim()}")
    layer = mats[0]
    for m in mats[1:]:
        layer = np.kron(layer, m)
    return Operator(_cyclic_shift(d, k) @ layer, (d,) * k)


def depth_one_compress(gates: Sequence, rho) -> EvolutionReport:
    """Run a k-gate chain as a single time step using k-1 post-selected loops."""
    start = time.perf_counter()
    u = depth_one_unitary(gates)
    k = len(u.dims)
    outcome = pctc_evolve(u, rho, list(range(1, k)))
    seq = np.asarray(rho)
    for g in gates:
        m = np.asarray(as_operator(g).matrix)
        seq = m @ seq @ m.conj().T
    extra = {"copies": k, "depth": 1}
    if outcome.output is not None:
        extra["fidelity_vs_sequential"] = fidelity(outcome.output, seq)
    return outcome.to_report(
        scenario="depth-one",
        extra=extra,
        wall_time=time.perf_counter() - start,
    )
