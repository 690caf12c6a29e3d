"""Deutsch CTC semantics: self-consistent loop states and the maximum entropy rule.

All operators here use the ``[CTC, A]`` factorization: the loop subsystem
first, the chronology-respecting subsystem second.

Fixed-point extraction works on the d^2 x d^2 superoperator of
``L[rho] = Tr_A[U (rho x rho_A) U^+]``. Its eigenvalue-1 eigenspace is
semisimple (``L`` is CPTP), so the spectral projector ``P`` onto it is
``R (L^+ R)^-1 L^+`` with ``R``/``L`` the right/left null spaces of ``M - 1``.
``P[I/d]`` is a fixed state of maximal support; every fixed state lives in
that support, which keeps the entropy finite and differentiable along the
whole search.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from .channels import KrausChannel, kraus_from_unitary, superoperator_matrix
from .errors import DimensionError, SolverError
from .linalg import (
    DensityMatrix,
    Operator,
    as_operator,
    hermitian_part,
    partial_trace,
    trace_norm,
    unvec,
    validate_density,
    vec,
    von_neumann_entropy,
)
from .report import EvolutionReport


@dataclass
class SolverOptions:
    tol: float = 1e-9
    eig_window: float = 1e-9
    max_iter: int = 10_000
    grad_tol: float = 1e-8

    @classmethod
    def from_dict(cls, data: dict | None) -> SolverOptions:
        data = dict(data or {})
        known = {k: data.pop(k) for k in list(data) if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FixedPointSolution:
    rho_ctc: DensityMatrix
    residual: float
    fixed_space_dim: int
    entropy: float
    unique: bool
    iterations: int = 0
    # orthonormal traceless Hermitian directions spanning the fixed set (full d x d)
    directions: tuple = ()


def _split(u, rho_a) -> tuple[Operator, np.ndarray, int, int]:
    rho_a = np.asarray(rho_a)
    da = rho_a.shape[0]
    u = as_operator(u)
    if u.dim % da:
        raise DimensionError(f"U of dim {u.dim} is not compatible with rho_A of dim {da}")
    dc = u.dim // da
    return as_operator(u.matrix, (dc, da)), rho_a, dc, da


def loop_map(u, rho_ctc, rho_a) -> np.ndarray:
    """L[rho_ctc] = Tr_A[U (rho_ctc x rho_A) U^+]."""
    u, rho_a, dc, da = _split(u, rho_a)
    joint = u.matrix @ np.kron(np.asarray(rho_ctc), rho_a) @ u.matrix.conj().T
    return partial_trace(Operator(joint, (dc, da)), [1]).matrix


def loop_channel(u, rho_a) -> KrausChannel:
    """The map rho_ctc -> L[rho_ctc] as a Kraus channel.

    rho_A is split into its eigen-ensemble; each eigenvector acts as a pure
    environment state for the dilation U with A as environment.
    """
    u, rho_a, dc, da = _split(u, rho_a)
    w, v = np.linalg.eigh(hermitian_part(rho_a))
    ops = []
    for p, a in zip(w, v.T):
        if p <= 1e-15:
            continue
        ch = kraus_from_unitary(u, a, 1)
        ops.extend(np.sqrt(p) * b for b in ch.kraus_ops)
    return KrausChannel.from_ops(ops)


def consistency_residual(u, rho_ctc, rho_a) -> float:
    """Trace norm of rho_ctc - L[rho_ctc]; zero iff the loop state is consistent."""
    rho_ctc = np.asarray(rho_ctc)
    return trace_norm(rho_ctc - loop_map(u, rho_ctc, rho_a))


def _null_space(a: np.ndarray, k: int) -> np.ndarray:
    _, _, vh = np.linalg.svd(a)
    return vh[-k:].conj().T


def _herm_to_real(h: np.ndarray) -> np.ndarray:
    # Hilbert-Schmidt inner product of Hermitian matrices == dot of these vectors
    return np.concatenate([h.real.reshape(-1), h.imag.reshape(-1)])


def _real_to_herm(x: np.ndarray, r: int) -> np.ndarray:
    n = r * r
    return (x[:n] + 1j * x[n:]).reshape(r, r)


def _log_derivative_weights(w: np.ndarray) -> np.ndarray:
    # divided differences of log for the Daleckii-Krein formula
    lw = np.log(w)
    diff = w[:, None] - w[None, :]
    close = np.abs(diff) <= 1e-12 * np.maximum(w[:, None], w[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (lw[:, None] - lw[None, :]) / diff
    mean = (w[:, None] + w[None, :]) / 2
    return np.where(close, 1.0 / mean, out)


def _maximize_entropy(base: np.ndarray, dirs: list[np.ndarray], opts: SolverOptions):
    """Newton ascent of S(base + sum_j t_j dirs_j) over t, staying positive definite.

    ``base`` is positive definite on its own space and ``dirs`` are orthonormal
    traceless Hermitian matrices of the same shape. Returns (rho, iterations).
    """
    if not dirs:
        return base, 0
    rho = base.copy()
    m = len(dirs)
    for it in range(opts.max_iter):
        w, v = np.linalg.eigh(rho)
        if w.min() <= 0:
            raise SolverError("entropy search left the positive cone")
        log_rho = (v * np.log(w)) @ v.conj().T
        grad = np.array([-np.trace(log_rho @ k).real for k in dirs])
        if np.linalg.norm(grad) < opts.grad_tol:
            return rho, it
        kt = [v.conj().T @ k @ v for k in dirs]
        f = _log_derivative_weights(w)
        hess = np.empty((m, m))
        for i in range(m):
            for j in range(i, m):
                hess[i, j] = hess[j, i] = -np.sum(kt[i].conj() * kt[j] * f).real
        try:
            step = -np.linalg.solve(hess, grad)
            if step @ grad <= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = grad
        s0 = von_neumann_entropy(rho)
        alpha = 1.0
        while alpha > 1e-16:
            cand = rho + alpha * sum(s * k for s, k in zip(step, dirs))
            cw = np.linalg.eigvalsh(cand)
            if cw.min() > 0 and von_neumann_entropy(cand) >= s0 + 1e-4 * alpha * (step @ grad) - 1e-15:
                break
            alpha /= 2
        else:
            return rho, it
        rho = hermitian_part(cand)
    return rho, opts.max_iter


def solve_fixed_point(u, rho_a, opts: SolverOptions | None = None) -> FixedPointSolution:
    """Consistent loop state of maximal entropy.

    Raises SolverError if the eigenproblem finds no eigenvalue near one or
    the final residual exceeds ``opts.tol``.
    """
    opts = opts or SolverOptions()
    u, rho_a, dc, _ = _split(u, rho_a)
    sup = superoperator_matrix(loop_channel(u, rho_a)).matrix
    d2 = dc * dc
    shifted = sup - np.eye(d2)
    try:
        eigvals = scipy.linalg.eigvals(sup)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"eigen-solver failed: {exc}") from exc
    k = int(np.sum(np.abs(eigvals - 1.0) <= opts.eig_window))
    if k == 0:
        raise SolverError("no eigenvalue within the window around 1")

    right = _null_space(shifted, k)
    left = _null_space(shifted.conj().T, k)
    proj = right @ np.linalg.solve(left.conj().T @ right, left.conj().T)
    star = hermitian_part(unvec(proj @ vec(np.eye(dc) / dc), dc))
    star = star / np.trace(star).real

    # support of the maximal-support fixed state
    w, v = np.linalg.eigh(star)
    keep = w > 1e-10 * max(w.max(), 1.0)
    q = v[:, keep]
    r = q.shape[1]

    base = hermitian_part(q.conj().T @ star @ q)

    # Hermitian, traceless directions of the fixed space restricted to the support;
    # the trace is removed along ``base``, which lies in the fixed space
    cand = []
    for col in right.T:
        x = unvec(col, dc)
        for h in (hermitian_part(x), hermitian_part(-1j * x)):
            h = q.conj().T @ h @ q
            h = h - np.trace(h).real * base
            cand.append(_herm_to_real(h))
    dirs = []
    if k > 1:
        _, sv, vh = np.linalg.svd(np.array(cand), full_matrices=False)
        rank = min(k - 1, int(np.sum(sv > 1e-8 * max(sv[0], 1e-300))))
        dirs = [hermitian_part(_real_to_herm(vh[j], r)) for j in range(rank)]

    small, iters = _maximize_entropy(base, dirs, opts)
    rho = hermitian_part(q @ small @ q.conj().T)
    rho = validate_density(rho / np.trace(rho).real, max(opts.tol, 1e-10))
    res = consistency_residual(u, rho.matrix, rho_a)
    if res > opts.tol:
        raise SolverError(f"fixed-point residual {res:.2e} exceeds tolerance {opts.tol:.1e}")
    full_dirs = tuple(q @ k_ @ q.conj().T for k_ in dirs)
    return FixedPointSolution(
        rho_ctc=rho,
        residual=res,
        fixed_space_dim=k,
        entropy=von_neumann_entropy(rho),
        unique=k == 1,
        iterations=iters,
        directions=full_dirs,
    )


def deutsch_output(u, rho_ctc, rho_a) -> np.ndarray:
    """D[rho_A] = Tr_CTC[U (rho_ctc x rho_A) U^+] for a given loop state."""
    u, rho_a, dc, da = _split(u, rho_a)
    joint = u.matrix @ np.kron(np.asarray(rho_ctc), rho_a) @ u.matrix.conj().T
    return partial_trace(Operator(joint, (dc, da)), [0]).matrix


def deutsch_evolve(u, rho_a, opts: SolverOptions | None = None) -> EvolutionReport:
    start = time.perf_counter()
    opts = opts or SolverOptions()
    dims = rho_a.dims if isinstance(rho_a, Operator) else None
    sol = solve_fixed_point(u, rho_a, opts)
    out = validate_density(as_operator(deutsch_output(u, sol.rho_ctc, rho_a), dims), 1e-8)
    return EvolutionReport(
        model="deutsch",
        output=out,
        forbidden=False,
        success_probability=1.0,
        consistency_residual=sol.residual,
        rho_ctc=sol.rho_ctc,
        entropies={
            "output": von_neumann_entropy(out),
            "rho_ctc": sol.entropy,
            "input": von_neumann_entropy(rho_a),
        },
        extra={"fixed_space_dim": sol.fixed_space_dim, "unique": sol.unique},
        wall_time=time.perf_counter() - start,
    )



def entropy_maximality_gap(sol: FixedPointSolution, rng, samples: int = 200) -> float:
    """Largest S(rho') - S(rho_ctc) over random states rho' of the fixed-point set.

    Each rho' moves from rho_ctc along a random combination of the fixed-set
    directions, by a random fraction of the distance to the PSD boundary,
    then is clipped to PSD and renormalized. A maximizer gives a gap <= 0.
    """
    if not sol.directions:
        return 0.0
    rho = sol.rho_ctc.matrix
    s0 = sol.entropy
    w, v = np.linalg.eigh(rho)
    q = v[:, w > 1e-12]
    inv_sqrt = np.diag(1 / np.sqrt(w[w > 1e-12]))
    worst = -np.inf
    for _ in range(samples):
        coef = rng.normal(size=len(sol.directions))
        k = sum(c * d for c, d in zip(coef, sol.directions))
        k = k / np.linalg.norm(k)
        # rho + t k stays PSD while t <= 1 / max eig(-rho^-1/2 k rho^-1/2) on the support
        m = inv_sqrt @ (q.conj().T @ k @ q) @ inv_sqrt
        top = np.linalg.eigvalsh(-hermitian_part(m)).max()
        t_max = 1.0 / top if top > 0 else 1.0
        cand = rho + rng.uniform(0, 1) * t_max * k
        cw, cv = np.linalg.eigh(hermitian_part(cand))
        cw = np.clip(cw, 0, None)
        cand = (cv * cw) @ cv.conj().T
        cand /= np.trace(cand).real
        worst = max(worst, von_neumann_entropy(cand) - s0)
    return float(worst)
