"""Discrete path sums with periodic boundary conditions on the loop coordinate.

A lattice model has ``d_sys`` chronology sites, ``d_ctc`` loop sites and a
one-slice propagator on ``[CTC, sys]`` (loop coordinate first, as everywhere
in this package). A path visits one joint site per time slice
``t = 0..T``. Paths start at system site ``x_in``, end at ``y_out`` and have
the same loop coordinate at both ends; every such loop value is summed
coherently. The amplitude of a path is the product of one-slice matrix
elements.

The teleportation side computes ``<y|<Psi| (U^steps x 1) |x>|Psi> * d_ctc`` with a
unit-normalized maximally entangled Psi; the factor ``d_ctc`` converts to the
unnormalized ``sum_x |xx>`` convention used by the path sum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, DimensionError, NonUnitaryError
from .linalg import Operator, as_operator, is_unitary
from .pctc import maximally_entangled
from .rand import random_unitary

MAX_SITES = 16
MAX_STEPS = 6
CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class LatticeModel:
    d_sys: int
    d_ctc: int
    steps: int
    step_unitary: Operator

    def __post_init__(self):
        u = as_operator(self.step_unitary, (self.d_ctc, self.d_sys))
        if self.d_sys * self.d_ctc > MAX_SITES or self.steps > MAX_STEPS:
            raise CapExceededError(
                f"enumeration caps are d_sys*d_ctc <= {MAX_SITES}, T <= {MAX_STEPS}"
            )
        if self.steps < 1:
            raise DimensionError("need at least one time step")
        if not is_unitary(u.matrix, 1e-10):
            raise NonUnitaryError("step propagator is not unitary")
        object.__setattr__(self, "step_unitary", u)

    @property
    def total_unitary(self) -> np.ndarray:
        return np.linalg.matrix_power(self.step_unitary.matrix, self.steps)

    def with_reference(self, d_ref: int = 2) -> LatticeModel:
        """Same dynamics with an inert reference wire appended to the system."""
        u = np.kron(self.step_unitary.matrix, np.eye(d_ref))
        return LatticeModel(self.d_sys * d_ref, self.d_ctc, self.steps, Operator(u))

    def to_dict(self) -> dict:
        return {
            "d_sys": self.d_sys,
            "d_ctc": self.d_ctc,
            "steps": self.steps,
            "step_unitary": self.step_unitary.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> LatticeModel:
        return cls(int(data["d_sys"]), int(data["d_ctc"]), int(data["steps"]),
                   Operator.from_dict(data["step_unitary"]))


def _site(m: LatticeModel, loop: int, sys: int) -> int:
    return loop * m.d_sys + sys


def path_sum_table(m: LatticeModel) -> np.ndarray:
    """Amplitudes for every (y_out, x_in) at once, by explicit path enumeration.

    Paths are enumerated in lexicographic order of (loop value, intermediate
    slices) and summed in fixed-size chunks, so results are deterministic.
    """
    u = m.step_unitary.matrix
    n = m.d_sys * m.d_ctc
    table = np.zeros((m.d_sys, m.d_sys), dtype=complex)
    inner = m.steps - 1
    for loop in range(m.d_ctc):
        starts = np.array([_site(m, loop, x) for x in range(m.d_sys)])
        ends = np.array([_site(m, loop, y) for y in range(m.d_sys)])
        if inner == 0:
            table += u[np.ix_(ends, starts)]
            continue
        count = n**inner
        for lo in range(0, count, CHUNK):
            ids = np.arange(lo, min(lo + CHUNK, count))
            block = np.stack(np.unravel_index(ids, (n,) * inner), axis=1)
            # weight of the interior of each path: prod_t <s_{t+1}|U|s_t>
            w = np.ones(len(block), dtype=complex)
            for t in range(inner - 1):
                w *= u[block[:, t + 1], block[:, t]]
            first = u[block[:, 0][:, None], starts[None, :]]  # (paths, x_in)
            last = u[ends[None, :], block[:, -1][:, None]]  # (paths, y_out)
            table += np.einsum("p,py,px->yx", w, last, first)
    return table


def path_sum_amplitude(m: LatticeModel, x_in: int, y_out: int) -> complex:
    """Coherent sum over all periodic-loop paths from system site x_in to y_out."""
    if not (0 <= x_in < m.d_sys and 0 <= y_out < m.d_sys):
        raise DimensionError("site index out of range")
    u = m.step_unitary.matrix
    n = m.d_sys * m.d_ctc
    total = 0j
    for loop in range(m.d_ctc):
        a, b = _site(m, loop, x_in), _site(m, loop, y_out)
        for mid in itertools.product(range(n), repeat=m.steps - 1):
            path = (a, *mid, b)
            amp = 1 + 0j
            for s, t in zip(path[:-1], path[1:]):
                amp *= u[t, s]
            total += amp
    return complex(total)


def teleportation_table(m: LatticeModel, epr=None) -> np.ndarray:
    """<y|<Psi| (U^steps x 1_E') |x>|Psi> * d_ctc for every (y, x).

    Psi lives on (CTC, E'); defaults to sum_i |ii>/sqrt(d_ctc).
    """
    dc, ds = m.d_ctc, m.d_sys
    psi = maximally_entangled(dc) if epr is None else np.asarray(epr, dtype=complex).reshape(-1)
    if psi.size != dc * dc:
        raise DimensionError(f"entangled state must have dim {dc * dc}")
    big = np.kron(m.total_unitary, np.eye(dc))  # on [CTC, sys, E']
    table = np.zeros((ds, ds), dtype=complex)
    for x in range(ds):
        # |x>_sys |Psi>_{CTC,E'} laid out as [CTC, sys, E']
        t = np.zeros((dc, ds, dc), dtype=complex)
        t[:, x, :] = psi.reshape(dc, dc)
        out = (big @ t.reshape(-1)).reshape(dc, ds, dc)
        table[:, x] = np.einsum("iyj,ij->y", out, psi.conj().reshape(dc, dc))
    return table * dc


def verify_equivalence(m: LatticeModel, epr=None) -> dict:
    """Max |path sum - teleportation amplitude| over all boundary sites."""
    a = path_sum_table(m)
    b = teleportation_table(m, epr)
    return {
        "max_deviation": float(np.abs(a - b).max()),
        "amplitude_table": [[[z.real, z.imag] for z in row] for row in a],
    }


def random_model(rng, d_sys: int, d_ctc: int, steps: int) -> LatticeModel:
    u = random_unitary(d_sys * d_ctc, rng)
    return LatticeModel(d_sys, d_ctc, steps, Operator(u, (d_ctc, d_sys)))


def path_count(m: LatticeModel) -> int:
    return m.d_ctc * (m.d_sys * m.d_ctc) ** (m.steps - 1)
