import math

import pytest

import dstat


def test_ex2_values():
    p = dstat.ex2_problem()
    z = dstat.Point([0.0], [[0.5], [0.0]])
    assert p.Theta(z, [1.0, 0.6]) == pytest.approx(0.65, abs=1e-12)
    z0, gamma = p.reference([1.0, 0.6])
    assert gamma == pytest.approx(1e-4, abs=1e-15)
    d = dstat.Point([1.0], [[1.0], [0.0]])
    dd = dstat.dd_Theta(p, z0, d, [1.0, 0.6], order=2)
    assert dd["second"] == pytest.approx(-0.78, abs=1e-9)


def test_second_order_split():
    p = dstat.ex2_problem()
    z0 = p.zeros()
    assert dstat.check(p, z0, "p0", order=2)["verdict"] == "stationary"
    r = dstat.check(p, z0, "p1", order=2, beta=[1.0, 0.6])
    assert r["verdict"] == "not-stationary"
    assert r["witness"] is not None


def test_relu_gate_witness():
    p = dstat.relu_gate_problem()
    assert dstat.dd_Psi(p, [0.0, 0.0], [1.0, 0.0])["first"] == -2.0
    r = dstat.check(p, p.eval_layers([0.0, 0.0]), "p")
    assert r["verdict"] == "not-stationary"
    assert r["witness_value"] == pytest.approx(-2.0, abs=1e-12)


def test_tangent_cone_and_lift():
    p = dstat.ex2_problem()
    z0 = p.zeros()
    d = dstat.lift_direction(p, z0, [1.0])
    assert d.u == [[1.0], [0.0]]
    assert dstat.tangent_membership(p, z0, d)["in_tangent"]
    bad = dstat.Point([1.0], [[1.0], [1.0]])
    m = dstat.tangent_membership(p, z0, bad)
    assert not m["in_tangent"] and m["worst_layer"] == 2


def test_thresholds():
    assert dstat.thresholds(0.5, []) == [0.5]
    t = dstat.rnn_thresholds()
    assert t["t2"] == pytest.approx(math.sqrt(2 * t["gamma_y"] / 3), abs=1e-12)


def test_solve_rnn_desk():
    p = dstat.rnn_desk_problem()
    t = dstat.rnn_thresholds()
    beta = [1.05 * (t["t1"] if l < 6 else t["t2"]) for l in range(p.L)]
    out = dstat.solve(p, beta, init="random")
    assert out["reason"] == "converged"
    assert out["probe_min"] >= -1e-6
    assert p.max_residual(out["point"]) <= 1e-5
    assert out["trace"][0][0] == 0


def test_json_round_trip_and_errors():
    p = dstat.ex2_problem()
    text = p.to_json()
    assert dstat.Problem.from_json(text).to_json() == text
    with pytest.raises(ValueError):
        dstat.Problem.from_json("{")
    with pytest.raises(ValueError):
        dstat.check(p, dstat.Point([0.0], [[1.0], [0.0]]), "p0")


def test_repro_scenarios():
    assert "ex2" in dstat.repro_names()
    assert dstat.repro("appendix-a")["pass"]
