import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ctcsim.deutsch import (
    SolverOptions,
    consistency_residual,
    deutsch_evolve,
    deutsch_output,
    entropy_maximality_gap,
    loop_map,
    solve_fixed_point,
)
from ctcsim.linalg import Operator, embed, trace_norm, von_neumann_entropy
from ctcsim.rand import random_density, random_unitary
from ctcsim.verify import degenerate_loop_unitary

# all unitaries here act on [CTC, A]
X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2)
SWAP = np.eye(4)[[0, 2, 1, 3]]
CNOT = np.eye(4)[[0, 1, 3, 2]]
ZERO = np.diag([1.0, 0.0])
ONE = np.diag([0.0, 1.0])
X_LOOP = np.kron(X, I2)


def test_residual_examples():
    rng = np.random.default_rng(0)
    rho_a = random_density(2, rng)
    assert consistency_residual(np.eye(4), random_density(2, rng), rho_a) < 1e-15
    assert consistency_residual(X_LOOP, I2 / 2, rho_a) < 1e-15
    assert abs(consistency_residual(X_LOOP, ZERO, rho_a) - 2) < 1e-12


def test_identity_loop_is_maximally_mixed():
    for dc in (2, 3):
        sol = solve_fixed_point(np.eye(dc * 2), ZERO)
        assert np.abs(sol.rho_ctc.matrix - np.eye(dc) / dc).max() < 1e-9
        assert not sol.unique
        assert sol.fixed_space_dim == dc * dc


def test_grandfather_flip_fixed_point():
    sol = solve_fixed_point(X_LOOP, ZERO)
    assert np.abs(sol.rho_ctc.matrix - I2 / 2).max() < 1e-9
    assert abs(sol.entropy - np.log(2)) < 1e-9
    assert not sol.unique
    assert sol.fixed_space_dim == 2


def test_cnot_with_idle_control():
    # control A in |0>, target CTC: the loop channel is the identity
    u = embed(CNOT, [1, 0], (2, 2)).matrix
    sol = solve_fixed_point(u, ZERO)
    assert np.abs(sol.rho_ctc.matrix - I2 / 2).max() < 1e-9


def test_evolve_examples():
    rng = np.random.default_rng(1)
    rho_a = random_density(2, rng)
    rep = deutsch_evolve(np.eye(4), rho_a)
    assert np.abs(rep.output.matrix - rho_a).max() < 1e-9

    rep = deutsch_evolve(SWAP, rho_a)
    assert np.abs(rep.rho_ctc.matrix - rho_a).max() < 1e-9
    assert np.abs(rep.output.matrix - rho_a).max() < 1e-9
    assert rep.extra["unique"]

    u_g = np.kron(I2, X) @ SWAP
    rep = deutsch_evolve(u_g, I2 / 2)
    assert np.abs(rep.output.matrix - I2 / 2).max() < 1e-9
    rep = deutsch_evolve(u_g, rho_a)
    assert np.abs(rep.output.matrix - X @ rho_a @ X).max() < 1e-9


def test_rank_deficient_fixed_set():
    # qutrit loop: with A in |0>, |2> leaks to |0> while |0>, |1> are untouched
    perm = np.arange(6)
    a, b = 2 * 2 + 0, 0 * 2 + 1  # |2,0> <-> |0,1>
    perm[[a, b]] = perm[[b, a]]
    u = np.eye(6)[perm]
    sol = solve_fixed_point(u, ZERO)
    assert np.abs(sol.rho_ctc.matrix - np.diag([0.5, 0.5, 0.0])).max() < 1e-9
    assert sol.fixed_space_dim == 4
    assert abs(sol.entropy - np.log(2)) < 1e-9


def _block_fixed_state(block, da, rho_a):
    # unique fixed point of a random 2-dim loop, from the eigenvector of its superoperator
    dc = block.shape[0] // da
    sup = np.zeros((dc * dc, dc * dc), dtype=complex)
    for j in range(dc * dc):
        e = np.zeros(dc * dc)
        e[j] = 1
        sup[:, j] = loop_map(block, e.reshape(dc, dc, order="F"), rho_a).reshape(-1, order="F")
    w, v = np.linalg.eig(sup)
    sigma = v[:, np.argmin(np.abs(w - 1))].reshape(dc, dc, order="F")
    return sigma / np.trace(sigma)


def test_block_loop_matches_analytic_maximizer():
    # fixed set {p sigma_1 + (1-p) |2><2|}; max entropy at p = e^S1 / (e^S1 + 1)
    rng = np.random.default_rng(5)
    da = 2
    b1, b2 = random_unitary(2 * da, rng), random_unitary(da, rng)
    u = np.zeros((3 * da, 3 * da), dtype=complex)
    u[: 2 * da, : 2 * da] = b1
    u[2 * da :, 2 * da :] = b2
    rho_a = random_density(da, rng)
    sigma = _block_fixed_state(b1, da, rho_a)
    s1 = von_neumann_entropy(sigma)
    p = np.exp(s1) / (np.exp(s1) + 1)
    expected = np.zeros((3, 3), dtype=complex)
    expected[:2, :2] = p * sigma
    expected[2, 2] = 1 - p

    sol = solve_fixed_point(u, rho_a)
    assert sol.fixed_space_dim == 2
    assert abs(sol.entropy - np.log(np.exp(s1) + 1)) < 1e-9
    assert np.abs(sol.rho_ctc.matrix - expected).max() < 1e-8


def test_nonlinearity_witness():
    # loop carries a copy of A: U = SWAP . CNOT(A -> CTC)
    u = SWAP @ embed(CNOT, [1, 0], (2, 2)).matrix
    outs = [deutsch_evolve(u, r).output.matrix for r in (ZERO, ONE, I2 / 2)]
    assert np.abs(outs[0] - ZERO).max() < 1e-9
    assert np.abs(outs[1] - ZERO).max() < 1e-9
    assert np.abs(outs[2] - I2 / 2).max() < 1e-9
    assert trace_norm(outs[2] - (outs[0] + outs[1]) / 2) > 0.1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 3), st.booleans())
def test_random_instances_consistent_and_maximal(seed, dc, da, degenerate):
    rng = np.random.default_rng(seed)
    u = degenerate_loop_unitary(rng, dc, da) if degenerate else random_unitary(dc * da, rng)
    rho_a = random_density(da, rng, rank=int(rng.integers(1, da + 1)))
    sol = solve_fixed_point(u, rho_a)
    assert sol.residual < 1e-8
    assert consistency_residual(u, sol.rho_ctc.matrix, rho_a) < 1e-8
    assert entropy_maximality_gap(sol, rng, 50) < 1e-7
    out = deutsch_output(u, sol.rho_ctc.matrix, rho_a)
    assert abs(np.trace(out) - 1) < 1e-9


def test_solver_options_roundtrip():
    opts = SolverOptions(tol=1e-7, max_iter=50)
    assert SolverOptions.from_dict(opts.to_dict()) == opts
    assert SolverOptions.from_dict(None) == SolverOptions()


def test_report_fields():
    rep = deutsch_evolve(Operator(X_LOOP, (2, 2)), ZERO)
    assert rep.model == "deutsch" and not rep.forbidden
    assert rep.consistency_residual < 1e-9
    assert abs(rep.entropies["rho_ctc"] - np.log(2)) < 1e-9
    assert rep.extra["fixed_space_dim"] == 2
