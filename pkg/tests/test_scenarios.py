import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctcsim.circuits import CtcCircuit, GateOp, SystemLayout, compile_circuit, gate
from ctcsim.errors import CapExceededError, ConfigError
from ctcsim.linalg import Operator, embed, fidelity, partial_trace, validate_density
from ctcsim.pctc import ctc_operator
from ctcsim.rand import random_unitary
from ctcsim.report import EvolutionReport
from ctcsim.scenarios import (
    ScenarioConfig,
    brute_force_sat,
    builtin_scenarios,
    decorrelation_test,
    get_scenario,
    postselected_sat,
    resolve_input,
    run_scenario,
)

I2 = np.eye(2)
LN2 = np.log(2)


def _reports(cfg):
    out = run_scenario(cfg)
    return list(out) if isinstance(out, tuple) else [out]


def _strip(d):
    d = dict(d)
    d.pop("wall_time")
    return d


def test_builtins_listed_and_run():
    names = [c.name for c in builtin_scenarios()]
    for want in ("grandfather", "grandfather-cnot", "teleport-identity", "inert-ctc",
                 "decorrelation", "depth1-demo", "sat-demo"):
        assert want in names
    for cfg in builtin_scenarios():
        assert cfg.description
        for rep in _reports(cfg):
            assert rep.scenario == cfg.name
            if rep.output is not None:
                validate_density(rep.output.matrix, 1e-9)
    with pytest.raises(ConfigError):
        get_scenario("nope")


def test_grandfather_examples():
    cfg = get_scenario("grandfather")
    pctc = run_scenario(replace(cfg, model="pctc"))
    assert pctc.forbidden and pctc.success_probability < 1e-12
    deutsch = run_scenario(replace(cfg, model="deutsch"))
    assert np.abs(deutsch.rho_ctc.matrix - I2 / 2).max() < 1e-9
    assert deutsch.consistency_residual <= 1e-9
    # the younger self is untouched by a flip on the loop alone
    assert np.abs(deutsch.output.matrix - np.diag([1, 0])).max() < 1e-9


def test_grandfather_cnot_variant():
    pctc, deutsch = run_scenario(get_scenario("grandfather-cnot"))
    assert pctc.forbidden
    assert np.abs(deutsch.rho_ctc.matrix - I2 / 2).max() < 1e-9
    assert deutsch.extra["unique"]


@pytest.mark.parametrize("model", ["pctc", "deutsch", "both"])
def test_identity_circuit_returns_input(model):
    cfg = ScenarioConfig(
        "identity",
        model=model,
        circuit=CtcCircuit(SystemLayout.of([2, 3], [2])),
        input_state={"kind": "random", "seed": 3, "pure": False},
    )
    rho = resolve_input(cfg.input_state, [2, 3])
    for rep in _reports(cfg):
        assert np.abs(rep.output.matrix - rho).max() < 1e-9
        assert rep.output.dims == (2, 3)


def test_teleport_identity_builtin():
    rep = run_scenario(get_scenario("teleport-identity"))
    assert rep.extra["route"] == "oracle"
    assert rep.extra["fidelity_to_input"] > 1 - 1e-12
    assert abs(rep.success_probability - 0.25) < 1e-12


def test_decorrelation_contrast():
    pctc, deutsch = decorrelation_test(seed=0)
    assert abs(pctc.mutual_information - 2 * LN2) < 1e-9
    assert abs(deutsch.mutual_information) < 1e-9
    assert np.abs(partial_trace(pctc.output, [1]).matrix - I2 / 2).max() < 1e-12
    # P-CTC output is (X x 1)|Phi+>, i.e. Psi+
    psi_plus = np.array([0, 1, 1, 0]) / np.sqrt(2)
    assert fidelity(pctc.output, np.outer(psi_plus, psi_plus)) > 1 - 1e-12
    assert np.abs(deutsch.output.matrix - np.eye(4) / 4).max() < 1e-9


def test_both_models_disagree_except_inert():
    for cfg in builtin_scenarios():
        if cfg.model != "both":
            continue
        pctc, deutsch = run_scenario(cfg)
        if cfg.name == "inert-ctc":
            assert not pctc.forbidden
            assert np.abs(pctc.output.matrix - deutsch.output.matrix).max() < 1e-9
            h = gate("H").matrix
            expected = h @ np.diag([1, 0]) @ h
            assert np.abs(pctc.output.matrix - expected).max() < 1e-9
            continue
        differ = pctc.forbidden != deutsch.forbidden
        if pctc.mutual_information is not None:
            differ |= abs(pctc.mutual_information - deutsch.mutual_information) > 1e-6
        if not pctc.forbidden:
            differ |= np.abs(pctc.output.matrix - deutsch.output.matrix).max() > 1e-6
        assert differ, cfg.name


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2,), (2, 2), (3,)]))
def test_mutual_information_bounds(seed, chron):
    rng = np.random.default_rng(seed)
    dims = list(chron) + [2]
    layout = SystemLayout.of(chron, [2])
    u = Operator(random_unitary(int(np.prod(dims)), rng))
    circ = CtcCircuit(layout, (GateOp(tuple(range(len(dims))), matrix=u),))
    cfg = ScenarioConfig("random-ref", circuit=circ, reference_entangled=True,
                         input_state="0" * (len(chron) - 1), seed=seed)
    d0 = chron[0]
    for rep in _reports(cfg):
        if rep.forbidden:
            continue
        assert -1e-8 <= rep.mutual_information <= 2 * np.log(d0) + 1e-8
        validate_density(rep.output.matrix, 1e-9)


def test_deterministic_json():
    for cfg in builtin_scenarios() + [replace(get_scenario("teleport-identity"), seed=11)]:
        a = [_strip(r.to_dict()) for r in _reports(cfg)]
        b = [_strip(r.to_dict()) for r in _reports(cfg)]
        assert json.dumps(a) == json.dumps(b)


def test_report_and_config_roundtrip():
    for cfg in builtin_scenarios():
        data = json.loads(json.dumps(cfg.to_dict()))
        back = ScenarioConfig.from_dict(data)
        assert back.to_dict() == cfg.to_dict()
        for rep in _reports(cfg):
            d = json.loads(json.dumps(rep.to_dict()))
            again = EvolutionReport.from_dict(d).to_dict()
            assert json.dumps(again) == json.dumps(d)


def test_flat_config_form():
    cfg = ScenarioConfig.from_dict({
        "name": "flat",
        "model": "pctc",
        "wires": [{"dim": 2}, {"dim": 2, "kind": "ctc"}],
        "gates": [{"name": "CZ", "wires": [0, 1]}],
        "input_state": "+",
    })
    rep = run_scenario(cfg)
    assert np.abs(rep.output.matrix - np.diag([1, 0])).max() < 1e-12
    assert abs(rep.success_probability - 0.5) < 1e-12


def test_config_errors():
    with pytest.raises(ConfigError):
        ScenarioConfig("x", model="other", circuit=CtcCircuit(SystemLayout.of([2], [2])))
    with pytest.raises(ConfigError):
        ScenarioConfig("x")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"model": "pctc"})
    with pytest.raises(ConfigError):
        resolve_input("01", [2])
    with pytest.raises(ConfigError):
        resolve_input("+", [3])
    with pytest.raises(ConfigError):
        run_scenario(ScenarioConfig("noloop", circuit=CtcCircuit(SystemLayout.of([2]))))


def test_resolve_input_labels():
    rho = resolve_input("1+", [2, 2])
    v = np.kron([0, 1], [1, 1]) / np.sqrt(2)
    assert np.abs(rho - np.outer(v, v)).max() < 1e-15
    assert np.abs(resolve_input("2", [3]) - np.diag([0, 0, 1])).max() == 0
    assert np.abs(resolve_input("mixed", [2, 3]) - np.eye(6) / 6).max() < 1e-15


def test_sat_coupling_postselects_ancilla():
    # X_anc CZ X_anc on [anc, loop], traced over the loop
    layout = SystemLayout.of([2], [2])
    circ = CtcCircuit(layout, (GateOp((0,), "X"), GateOp((0, 1), "CZ"), GateOp((0,), "X")))
    c = ctc_operator(compile_circuit(circ), [1]).matrix
    assert np.abs(c - np.diag([0, 2])).max() < 1e-15


def test_sat_examples():
    single = postselected_sat([[1]], 1)
    assert single.satisfiable and single.assignment == "1"
    assert abs(single.distribution["1"] - 1) < 1e-12

    pair = postselected_sat([[1, 2], [-1, -2]], 2)
    assert pair.support == {"01", "10"}
    assert all(abs(p - 0.5) < 1e-12 for p in pair.distribution.values())

    unsat = postselected_sat([[1], [-1]], 1)
    assert not unsat.satisfiable and unsat.report.forbidden
    assert brute_force_sat([[1], [-1]], 1) == []


def test_sat_success_probability_counts_solutions():
    # normalized probability is (#solutions / 2^n) times the loop factor 1/4 scaled by Tr C = 2
    for clauses, n in (([[1, 2, 3]], 3), ([[1], [2], [-3]], 3), ([[1, -2], [2, 3], [-1, 4]], 4)):
        sols = brute_force_sat(clauses, n)
        res = postselected_sat(clauses, n)
        assert res.support == set(sols)
        assert abs(res.success_probability - len(sols) / 2**n) < 1e-12


def test_sat_caps():
    with pytest.raises(CapExceededError):
        postselected_sat([[1]], 5)
    with pytest.raises(ConfigError):
        postselected_sat([[3]], 2)
    with pytest.raises(CapExceededError):
        postselected_sat([[1]] * 17, 1)


def test_reference_scenario_uses_embedded_circuit():
    # decorrelation circuit compiled by hand: (X_A x 1) SWAP(A, CTC)
    u = compile_circuit(get_scenario("decorrelation").circuit).matrix
    dims = (2, 2)
    expected = embed(gate("X").matrix, [0], dims).matrix @ np.eye(4)[[0, 2, 1, 3]]
    assert np.abs(u - expected).max() < 1e-15
