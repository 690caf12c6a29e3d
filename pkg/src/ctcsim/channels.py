"""Completely positive maps in Kraus and superoperator-matrix form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NonUnitaryError, ValidationError
from .linalg import (
    DensityMatrix,
    Operator,
    as_operator,
    is_unitary,
    permute,
    unvec,
    validate_density,
    vec,
)

ZERO_KRAUS = 1e-12


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple[np.ndarray, ...]
    dim_in: int
    dim_out: int

    def __post_init__(self):
        ops = tuple(np.asarray(b, dtype=complex) for b in self.kraus_ops)
        for b in ops:
            if b.shape != (self.dim_out, self.dim_in):
                raise DimensionError(
                    f"Kraus operator shape {b.shape} != ({self.dim_out}, {self.dim_in})"
                )
        total = sum((b.conj().T @ b for b in ops), np.zeros((self.dim_in, self.dim_in)))
        dev = float(np.abs(total - np.eye(self.dim_in)).max())
        if dev > 1e-9:
            raise ValidationError(f"channel is not trace preserving (deviation {dev:.2e})")
        object.__setattr__(self, "kraus_ops", ops)

    @classmethod
    def from_ops(cls, ops: Sequence) -> KrausChannel:
        ops = [np.asarray(b, dtype=complex) for b in ops]
        return cls(tuple(ops), ops[0].shape[1], ops[0].shape[0])

    def __call__(self, rho, tol: float = 1e-8) -> DensityMatrix:
        return apply_channel(self, rho, tol)

    def to_json_list(self) -> list[dict]:
        return [Operator(b).to_dict() if b.shape[0] == b.shape[1] else _rect_dict(b)
                for b in self.kraus_ops]

    @classmethod
    def from_json_list(cls, data: list[dict]) -> KrausChannel:
        return cls.from_ops([_rect_from_dict(d) for d in data])


def _rect_dict(b: np.ndarray) -> dict:
    # rectangular Kraus ops keep the Operator layout plus an explicit shape
    flat = b.reshape(-1)
    return {"dim": b.shape[0], "factorization": [b.shape[0]], "shape": list(b.shape),
            "re": flat.real.tolist(), "im": flat.imag.tolist()}


def _rect_from_dict(d: dict) -> np.ndarray:
    if "shape" not in d:
        return Operator.from_dict(d).matrix
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d["im"], dtype=float)
    return (re + 1j * im).reshape(d["shape"])


@dataclass(frozen=True, eq=False)
class SuperoperatorMatrix:
    """d^2 x d^2 matrix acting on column-stacked density matrices."""

    dim: int
    matrix: np.ndarray

    def apply(self, rho) -> np.ndarray:
        return unvec(self.matrix @ vec(np.asarray(rho)), self.dim)


def kraus_from_unitary(u, env_state, env_index: int) -> KrausChannel:
    """Kraus operators B_i = <i|U|e> of the dilation U with environment ``env_index``."""
    u = as_operator(u)
    if not is_unitary(u.matrix, 1e-10):
        raise NonUnitaryError("dilation operator is not unitary")
    n = len(u.dims)
    if not 0 <= env_index < n:
        raise DimensionError(f"environment index {env_index} out of range")
    e = np.asarray(env_state, dtype=complex).reshape(-1)
    de = u.dims[env_index]
    if e.size != de:
        raise DimensionError(f"environment state dim {e.size} != subsystem dim {de}")
    order = [k for k in range(n) if k != env_index] + [env_index]
    d = u.dim // de
    t = permute(u, order).matrix.reshape(d, de, d, de)
    ops = [t[:, i, :, :] @ e for i in range(de)]
    ops = [b for b in ops if np.linalg.norm(b) >= ZERO_KRAUS]
    return KrausChannel(tuple(ops), d, d)


def apply_channel(ch: KrausChannel, rho, tol: float = 1e-8) -> DensityMatrix:
    r = np.asarray(rho)
    if r.shape != (ch.dim_in, ch.dim_in):
        raise DimensionError(f"state dim {r.shape[0]} != channel input dim {ch.dim_in}")
    out = sum(b @ r @ b.conj().T for b in ch.kraus_ops)
    return validate_density(out, tol)


def superoperator_matrix(ch: KrausChannel) -> SuperoperatorMatrix:
    if ch.dim_in != ch.dim_out:
        raise DimensionError("superoperator matrix needs dim_in == dim_out")
    m = sum(np.kron(b.conj(), b) for b in ch.kraus_ops)
    return SuperoperatorMatrix(ch.dim_in, m)
