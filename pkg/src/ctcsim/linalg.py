"""Dense linear algebra over multipartite finite-dimensional systems.

Index convention: the first subsystem of a factorization is the most
significant (slowest-varying) index, matching ``np.kron(a, b)``.
Vectorization is column-stacking: ``vec(A) = A.reshape(-1, order="F")``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ValidationError

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex square matrix with a declared subsystem factorization."""

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        dims = tuple(int(d) for d in self.dims) if self.dims else (m.shape[0],)
        if any(d < 1 for d in dims) or math.prod(dims) != m.shape[0]:
            raise DimensionError(f"factorization {dims} does not match dim {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("operator has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def dag(self) -> Operator:
        return Operator(self.matrix.conj().T, self.dims)

    def to_dict(self) -> dict:
        flat = self.matrix.reshape(-1)
        return {
            "dim": self.dim,
            "factorization": list(self.dims),
            "re": flat.real.tolist(),
            "im": flat.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Operator:
        n = int(data["dim"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.size != n * n or im.size != n * n:
            raise DimensionError(f"expected {n * n} entries for dim {n}")
        return cls((re + 1j * im).reshape(n, n), tuple(data.get("factorization") or (n,)))


@dataclass(frozen=True, eq=False)
class DensityMatrix(Operator):
    """Hermitian, positive semidefinite, unit-trace operator.

    Build these through :func:`validate_density`; ``corrections`` records
    what the validator had to fix (symmetrization, clipping, renormalization).
    """

    corrections: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> DensityMatrix:
        op = Operator.from_dict(data)
        checked = validate_density(op)
        # keep stored bits when the repair is round-off, so JSON round-trips exactly
        if np.abs(checked.matrix - op.matrix).max() <= 1e-14:
            return cls(op.matrix, op.dims)
        return checked


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims) if self.dims else (v.size,)
        if math.prod(dims) != v.size:
            raise DimensionError(f"factorization {dims} does not match dim {v.size}")
        if abs(np.vdot(v, v).real - 1.0) > 1e-12:
            raise ValidationError(f"state norm^2 is {np.vdot(v, v).real}, expected 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.amplitudes
        return self.amplitudes.astype(dtype)

    def projector(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.dims)


def as_operator(x, dims: Sequence[int] | None = None) -> Operator:
    """Coerce an ndarray or Operator, optionally overriding its factorization."""
    if isinstance(x, Operator):
        if dims is None or tuple(dims) == x.dims:
            return x
        return Operator(x.matrix, tuple(dims))
    return Operator(np.asarray(x), tuple(dims) if dims is not None else ())


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def vec(a) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


def tensor(*ops) -> Operator:
    """Kronecker product; factorizations are concatenated."""
    if not ops:
        return Operator(np.eye(1))
    ops = [as_operator(o) for o in ops]
    out = ops[0].matrix
    dims = list(ops[0].dims)
    for o in ops[1:]:
        out = np.kron(out, o.matrix)
        dims.extend(o.dims)
    return Operator(out, tuple(dims))


def _check_indices(indices: Iterable[int], n: int) -> list[int]:
    idx = sorted(set(int(i) for i in indices))
    for i in idx:
        if i < 0 or i >= n:
            raise DimensionError(f"subsystem index {i} out of range for {n} subsystems")
    return idx


def partial_trace(op, traced: Iterable[int], dims: Sequence[int] | None = None) -> Operator:
    """Trace out the subsystems listed in ``traced``; kept ones stay in order."""
    op = as_operator(op, dims)
    dims = op.dims
    n = len(dims)
    idx = _check_indices(traced, n)
    t = op.matrix.reshape(dims + dims)
    cur = n
    for i in reversed(idx):
        t = np.trace(t, axis1=i, axis2=i + cur)
        cur -= 1
    kept = tuple(d for i, d in enumerate(dims) if i not in idx)
    size = math.prod(kept)
    return Operator(t.reshape(size, size), kept if kept else (1,))


def permute(op, order: Sequence[int], dims: Sequence[int] | None = None) -> Operator:
    """Reorder subsystems: new subsystem ``k`` is old subsystem ``order[k]``."""
    op = as_operator(op, dims)
    n = len(op.dims)
    if sorted(order) != list(range(n)):
        raise DimensionError(f"{order} is not a permutation of {n} subsystems")
    t = op.matrix.reshape(op.dims + op.dims)
    t = t.transpose(list(order) + [n + k for k in order])
    new_dims = tuple(op.dims[k] for k in order)
    return Operator(t.reshape(op.dim, op.dim), new_dims)


def permute_vector(v, order: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    t = np.asarray(v).reshape(tuple(dims))
    return t.transpose(list(order)).reshape(-1)


def embed(gate, targets: Sequence[int], dims: Sequence[int]) -> Operator:
    """Lift ``gate`` acting on ``targets`` (in that order) to the full space."""
    gate = np.asarray(gate)
    dims = tuple(dims)
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise DimensionError(f"repeated target wires {targets}")
    _check_indices(targets, len(dims))
    if math.prod(dims[t] for t in targets) != gate.shape[0]:
        raise DimensionError(
            f"gate of dim {gate.shape[0]} does not fit wires {targets} of dims {dims}"
        )
    rest = [k for k in range(len(dims)) if k not in targets]
    full = np.kron(gate, np.eye(math.prod(dims[k] for k in rest)))
    current = targets + rest
    # full acts on subsystems ordered as ``current``; move them back to 0..n-1
    order = [current.index(k) for k in range(len(dims))]
    return permute(full, order, [dims[k] for k in current])


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a)
    return (a + a.conj().T) / 2


def is_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol)


def trace_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), ord="nuc"))


def validate_density(op, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """Check and lightly repair a candidate density matrix.

    Raises ValidationError when the Hermiticity deviation, a negative
    eigenvalue or the trace deviation exceeds ``tol``. Eigenvalues in
    ``[-tol, 0)`` are clipped to zero and the trace is renormalized.
    """
    op = as_operator(op)
    m = op.matrix
    corrections = {}
    herm_dev = float(np.abs(m - m.conj().T).max())
    if herm_dev > tol:
        raise ValidationError(f"Hermiticity deviation {herm_dev:.3e} exceeds {tol:.1e}")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"trace deviation {abs(tr - 1.0):.3e} exceeds {tol:.1e}")
    h = hermitian_part(m)
    if herm_dev > 0:
        corrections["hermitian_deviation"] = herm_dev
    w, v = np.linalg.eigh(h)
    if w.min() < -tol:
        raise ValidationError(f"negative eigenvalue {w.min():.3e} below -{tol:.1e}")
    if w.min() < 0:
        corrections["clipped_eigenvalue"] = float(w.min())
        w = np.clip(w, 0.0, None)
        h = (v * w) @ v.conj().T
    t = float(np.trace(h).real)
    if t != 1.0:
        corrections["trace_renormalized"] = t
        h = h / t
    return DensityMatrix(h, op.dims, corrections)


def density(op, dims: Sequence[int] | None = None, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """Validate an array (or ket) as a density matrix with the given factorization."""
    if isinstance(op, PureState):
        return op.projector()
    a = np.asarray(op)
    if a.ndim == 1:
        a = projector(a)
    return validate_density(as_operator(a, dims), tol)


def von_neumann_entropy(rho) -> float:
    """Entropy in nats, with 0 ln 0 = 0."""
    w = np.linalg.eigvalsh(hermitian_part(np.asarray(rho)))
    w = w[w > 1e-15]
    return float(max(0.0, -np.sum(w * np.log(w))))


def psd_sqrt(a, cutoff: float = 1e-13) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues below ``cutoff`` count as zero."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(a)))
    w = np.where(w > cutoff, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1].

    Evaluated as the squared trace norm of sqrt(rho) sqrt(sigma), which avoids
    square-rooting round-off eigenvalues of the sandwiched product.
    """
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    f = trace_norm(psd_sqrt(rho) @ psd_sqrt(sigma)) ** 2
    return min(1.0, max(0.0, f))


def mutual_information(rho, dims: Sequence[int], part_a: Iterable[int]) -> float:
    """I(A:B) = S(A) + S(B) - S(AB) for the bipartition given by ``part_a``."""
    rho = as_operator(rho, dims)
    a = _check_indices(part_a, len(rho.dims))
    b = [k for k in range(len(rho.dims)) if k not in a]
    s_a = von_neumann_entropy(partial_trace(rho, b))
    s_b = von_neumann_entropy(partial_trace(rho, a))
    return s_a + s_b - von_neumann_entropy(rho)
