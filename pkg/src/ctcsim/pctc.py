"""Post-selected teleportation CTCs.

A chronology-respecting state ``rho`` interacting with loop wires through
``U`` is mapped to ``C rho C^+ / Tr[C rho C^+]`` with ``C = Tr_CTC[U]``.
:func:`teleportation_oracle` builds the same map the long way, by preparing
each loop wire maximally entangled with a purification copy and
post-selecting that pair back onto the same entangled state.

Probability convention: ``success_probability = Tr[C rho C^+] / d_ctc^2``,
which is the post-selection probability of the teleportation picture with
unit-normalized entangled states (and 1 for a loop that does nothing).
``raw_probability`` is the unnormalized ``Tr[C rho C^+]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, NonUnitaryError, ValidationError
from .linalg import (
    DensityMatrix,
    Operator,
    PureState,
    as_operator,
    is_unitary,
    partial_trace,
    permute,
    validate_density,
    von_neumann_entropy,
)
from .report import EvolutionReport

FORBIDDEN_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class PctcOutcome:
    output: DensityMatrix | None
    success_probability: float
    raw_probability: float
    c_operator: Operator

    @property
    def forbidden(self) -> bool:
        return self.output is None

    def to_dict(self) -> dict:
        return {
            "forbidden": self.forbidden,
            "success_probability": float(self.success_probability),
            "raw_probability": float(self.raw_probability),
            "output": None if self.output is None else self.output.to_dict(),
            "c_operator": self.c_operator.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> PctcOutcome:
        out = data.get("output")
        return cls(
            output=None if out is None else DensityMatrix.from_dict(out),
            success_probability=float(data["success_probability"]),
            raw_probability=float(data["raw_probability"]),
            c_operator=Operator.from_dict(data["c_operator"]),
        )

    def to_report(self, **kw) -> EvolutionReport:
        entropies = {} if self.output is None else {"output": von_neumann_entropy(self.output)}
        return EvolutionReport(
            model="pctc",
            output=self.output,
            forbidden=self.forbidden,
            success_probability=self.success_probability,
            raw_probability=self.raw_probability,
            c_operator=self.c_operator,
            entropies=entropies,
            **kw,
        )


def _ctc_split(u: Operator, ctc_indices: Iterable[int]) -> tuple[list[int], list[int]]:
    n = len(u.dims)
    ctc = sorted(set(int(i) for i in ctc_indices))
    for i in ctc:
        if not 0 <= i < n:
            raise DimensionError(f"CTC wire {i} out of range for {n} wires")
    chron = [k for k in range(n) if k not in ctc]
    return ctc, chron


def ctc_operator(u, ctc_indices: Iterable[int], dims: Sequence[int] | None = None) -> Operator:
    """C = Tr_CTC[U], acting on the chronology-respecting wires only."""
    u = as_operator(u, dims)
    _ctc_split(u, ctc_indices)
    return partial_trace(u, ctc_indices)


def _check_input(u: Operator, rho, chron: list[int]) -> np.ndarray:
    r = np.asarray(rho)
    want = math.prod(u.dims[k] for k in chron)
    if r.shape != (want, want):
        raise DimensionError(f"input state of dim {r.shape[0]} != chronology dim {want}")
    if not is_unitary(u.matrix, 1e-10):
        raise NonUnitaryError("circuit operator is not unitary")
    return r


def _finish(out: np.ndarray, prob: float, d_ctc: int, c_op: Operator, dims, threshold: float):
    if prob < threshold:
        return PctcOutcome(None, prob, prob * d_ctc**2, c_op)
    rho = validate_density(Operator(out / np.trace(out).real, dims), 1e-9)
    return PctcOutcome(rho, prob, prob * d_ctc**2, c_op)


def pctc_evolve(
    u, rho, ctc_indices: Iterable[int], threshold: float = FORBIDDEN_THRESHOLD
) -> PctcOutcome:
    """Renormalized evolution ``C rho C^+ / Tr[C rho C^+]``; Forbidden below ``threshold``."""
    u = as_operator(u)
    ctc, chron = _ctc_split(u, ctc_indices)
    r = _check_input(u, rho, chron)
    c = ctc_operator(u, ctc)
    d_ctc = math.prod(u.dims[k] for k in ctc)
    out = c.matrix @ r @ c.matrix.conj().T
    raw = float(np.trace(out).real)
    return _finish(out, raw / d_ctc**2, d_ctc, c, c.dims, threshold)


def maximally_entangled(d: int) -> np.ndarray:
    """|Phi_0> = sum_i |ii> / sqrt(d)."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def teleportation_oracle(
    u,
    rho,
    ctc_indices: Iterable[int],
    epr=None,
    threshold: float = FORBIDDEN_THRESHOLD,
) -> PctcOutcome:
    """P-CTC evolution by explicit post-selected teleportation.

    Every loop wire gets a purification partner E'. The joint input is
    ``rho x |Psi><Psi|`` with Psi on (CTC, E'); ``U x 1_E'`` acts; the (CTC, E')
    pair is projected back onto Psi and traced out. ``epr`` may be any
    maximally entangled vector on (CTC, E'), defaulting to ``|Phi_0>``.
    """
    u = as_operator(u)
    ctc, chron = _ctc_split(u, ctc_indices)
    r = _check_input(u, rho, chron)
    ctc_dims = [u.dims[k] for k in ctc]
    chron_dims = [u.dims[k] for k in chron]
    d_ctc = math.prod(ctc_dims)
    d_chron = math.prod(chron_dims)
    psi = maximally_entangled(d_ctc) if epr is None else np.asarray(epr, dtype=complex).reshape(-1)
    if psi.size != d_ctc * d_ctc:
        raise DimensionError(f"entangled state must have dim {d_ctc ** 2}")
    if abs(np.vdot(psi, psi).real - 1) > 1e-10:
        raise ValidationError("entangled state is not normalized")
    m = psi.reshape(d_ctc, d_ctc)
    if np.abs(m @ m.conj().T - np.eye(d_ctc) / d_ctc).max() > 1e-10:
        raise ValidationError("entangled state is not maximally entangled")

    # joint input on [chron..., ctc..., E'...]
    sigma = np.kron(r, np.outer(psi, psi.conj()))
    u_reordered = permute(u, chron + ctc).matrix
    big = np.kron(u_reordered, np.eye(d_ctc))
    sigma = big @ sigma @ big.conj().T

    t = sigma.reshape(d_chron, d_ctc * d_ctc, d_chron, d_ctc * d_ctc)
    out = np.einsum("aibj,i,j->ab", t, psi.conj(), psi)
    prob = float(np.trace(out).real)

    # effective operator on the chronology wires, by the same projection
    v = u_reordered.reshape(d_chron, d_ctc, d_chron, d_ctc)
    bra_psi = psi.conj().reshape(d_ctc, d_ctc)
    ket_psi = psi.reshape(d_ctc, d_ctc)
    # <Psi|(U x 1)|Psi> with Psi = sum M_{ij}|i>|j>: sum_{i,k,j} conj(M_ij) U_{ik} M_kj
    c_eff = np.einsum("ij,aibk,kj->ab", bra_psi, v, ket_psi) * d_ctc
    c_op = Operator(c_eff, tuple(chron_dims) if chron_dims else (1,))
    return _finish(out, prob, d_ctc, c_op, c_op.dims, threshold)


def shift_operator(d: int) -> np.ndarray:
    """X|j> = |j+1 mod d>."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def clock_operator(d: int) -> np.ndarray:
    """Z|j> = exp(2 pi i j / d)|j>."""
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def bell_basis(d: int) -> list[PureState]:
    """Generalized Bell states (1 x X^m Z^n)|Phi_0>, ordered m-major.

    For qubits the order is Phi+, Phi-, Psi+, Psi- with Psi- = (|01> - |10>)/sqrt 2.
    """
    if d < 2:
        raise DimensionError("Bell basis needs d >= 2")
    phi0 = maximally_entangled(d)
    x, z = shift_operator(d), clock_operator(d)
    out = []
    for m in range(d):
        for n in range(d):
            local = np.linalg.matrix_power(x, m) @ np.linalg.matrix_power(z, n)
            out.append(PureState(np.kron(np.eye(d), local) @ phi0, (d, d)))
    return out


QUBIT_BELL = dict(zip(("phi+", "phi-", "psi+", "psi-"), bell_basis(2)))

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# branch label -> Pauli acting on the emerging wire, in the order they are written out
TELEPORT_BRANCHES = (("psi-", "I"), ("psi+", "Z"), ("phi-", "X"), ("phi+", "Y"))


def teleport_resource() -> np.ndarray:
    """The shared pair |Psi->_23 in wire order (2, 3).

    The singlet is written with wire 3 as its first factor, i.e.
    (|1>_2|0>_3 - |0>_2|1>_3)/sqrt 2. This is a global sign relative to the
    X^m Z^n convention and fixes the branch signs to (-1, -1, +1) on
    (1, sigma_z, sigma_x); the last branch is then -i sigma_y psi.
    """
    return QUBIT_BELL["psi-"].amplitudes.reshape(2, 2).T.reshape(-1)


@dataclass(frozen=True, eq=False)
class TeleportDecomposition:
    """|psi>_1 |Psi->_23 expanded in the Bell basis of wires 1 and 3.

    ``branches[label]`` is the unnormalized wire-2 vector ``(<B|_13 x 1_2)|state>``;
    ``coefficients[label]`` is its amplitude along ``sigma|psi>`` for the Pauli
    paired with that label, i.e. (-1, -1, 1, -i)/2.
    """

    psi: np.ndarray
    branches: dict
    coefficients: dict

    @property
    def probabilities(self) -> dict:
        return {k: float(np.vdot(v, v).real) for k, v in self.branches.items()}

    @property
    def state(self) -> np.ndarray:
        """The expanded state |psi>_1 |Psi->_23 in wire order (1, 2, 3)."""
        return np.kron(self.psi, teleport_resource())

    def postselect(self, label: str) -> tuple[np.ndarray, float]:
        """Normalized wire-2 state and probability for Bell outcome ``label`` on (1, 3)."""
        v = self.branches[label]
        p = float(np.vdot(v, v).real)
        return v / np.sqrt(p), p

    def reconstruct(self) -> np.ndarray:
        """Sum_B |B>_13 |branch_B>_2, returned in wire order (1, 2, 3)."""
        total = np.zeros((2, 2, 2), dtype=complex)
        for label, b2 in self.branches.items():
            b13 = QUBIT_BELL[label].amplitudes.reshape(2, 2)
            total += np.einsum("ac,b->abc", b13, b2)
        return total.reshape(-1)


def teleport_decompose(psi) -> TeleportDecomposition:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != 2:
        raise DimensionError("teleportation decomposition is defined for qubits")
    state = np.kron(psi, teleport_resource()).reshape(2, 2, 2)
    branches, coefficients = {}, {}
    for label, pauli in TELEPORT_BRANCHES:
        b13 = QUBIT_BELL[label].amplitudes.reshape(2, 2)
        v = np.einsum("ac,abc->b", b13.conj(), state)
        branches[label] = v
        coefficients[label] = complex(np.vdot(PAULI[pauli] @ psi, v))
    return TeleportDecomposition(psi, branches, coefficients)
