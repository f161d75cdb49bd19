"""Smoke tests of the python bindings against known closed-form values."""

import json
import math

import numpy as np
import pytest

import tiltnewton as tn


def elqp_1d():
    return tn.make_elqp(
        Q=[[2.0]], q=[0.0], A=[[1.0]], b=[0.0],
        G=[[-1.0]], h=[0.0], E=np.zeros((0, 1)), d=np.zeros(0), B=[[1.0]],
    ).with_solution(np.zeros(1), 0.5)


def test_elqp_values_and_gradient():
    inst = elqp_1d()
    assert inst.value([-1.0]) == pytest.approx(1.5)
    assert inst.gradient([-1.0])[0] == pytest.approx(-3.0)
    assert inst.value([1.0]) == pytest.approx(1.0)
    assert inst.gradient([1.0])[0] == pytest.approx(2.0)


def test_second_subderivative_branches():
    inst = elqp_1d()
    assert tn.second_subderivative_elqp(inst, [-1.0], [1.0]) == pytest.approx(3.0)
    assert tn.second_subderivative_elqp(inst, [1.0], [1.0]) == pytest.approx(2.0)


def test_newton_run_converges():
    inst = elqp_1d()
    opts = tn.NewtonOptions()
    opts.variant = tn.NewtonVariant.Graphical
    trace = tn.run_newton(inst, [0.1], opts)
    assert trace.terminal_status == tn.TerminalStatus.Stationary
    assert abs(trace.final_x[0]) <= 1e-10
    rate = tn.superlinear_ratios(trace, np.zeros(1))
    assert rate.superlinear_verdict


def test_prox_and_envelope():
    quad = tn.make_smooth(Q=[[1.0]], b=[0.0], quartic=[0.0])
    params = tn.MoreauParams()
    params.r = 1.0
    res = tn.prox(quad, params, [2.0])
    assert res.point[0] == pytest.approx(1.0)
    assert tn.envelope_value(quad, params, [2.0]) == pytest.approx(1.0)
    assert tn.envelope_gradient(quad, params, [2.0])[0] == pytest.approx(1.0)

    soft = tn.make_piecewise_l1(Q=[[0.0]], b=[0.0], l1=[1.0])
    assert tn.prox(soft, params, [2.0]).point[0] == pytest.approx(1.0)
    assert tn.envelope_value(soft, params, [2.0]) == pytest.approx(1.5)


def test_envelope_gradient_identity():
    inst = tn.make_nlp(psi_Q=[[2.0]], psi_b=[2.0], psi_quartic=[0.0],
                       J=[[1.0]], c=[0.0], s=0)
    params = tn.MoreauParams()
    params.r = 0.1
    for x in (0.3, -0.7, 1.2):
        res = tn.prox(inst, params, [x])
        v = (np.array([x]) - res.point) / params.r
        assert inst.subgradient_residual(res.point, v) <= 1e-8


def test_oscillation_never_converges():
    osc = tn.make_oscillation(1.0)
    x0 = 1.0 / (2.0 * math.pi)
    opts = tn.NewtonOptions()
    opts.variant = tn.NewtonVariant.Coderivative
    opts.max_iters = 50
    trace = tn.run_newton(osc, [x0], opts)
    assert trace.terminal_status in (tn.TerminalStatus.Diverged, tn.TerminalStatus.MaxIter)
    xs = [r.x[0] for r in trace.records]
    assert max(abs(xs[k + 1] + xs[k]) for k in range(len(xs) - 1)) <= 1e-10


def test_cone_qp_and_projection():
    w, status, kkt = tn.solve_cone_qp(
        H=np.eye(2), g=[-1.0, -1.0], eq=np.zeros((0, 2)), ineq=np.zeros((0, 2)))
    assert np.allclose(w, [1.0, 1.0])
    assert kkt <= 1e-10
    p = tn.project_soc([1.0, 0.0, 0.0])
    assert np.allclose(p, [0.5, 0.0, 0.5])


def test_tilt_probe_modulus():
    quad = tn.make_smooth(Q=[[4.0]], b=[0.0], quartic=[0.0]).with_solution(np.zeros(1), 0.25)
    rep = tn.tilt_probe(quad, np.zeros(1), kappa_hyp=0.5, radius=0.5, samples=2000)
    assert rep.violations == 0
    assert rep.estimated_kappa == pytest.approx(0.25, rel=0.05)


def test_json_round_trip():
    inst = elqp_1d()
    blob = inst.to_json()
    back = tn.ProblemInstance.from_json(blob)
    assert json.loads(back.to_json()) == json.loads(blob)


def test_run_experiment_file(tmp_path):
    config = {
        "problem": json.loads(elqp_1d().to_json()),
        "x0": [0.1],
        "variants": [{"variant": "graphical"}, {"variant": "coderivative"}],
        "probes": [{"type": "tilt", "kappa_hyp": 0.6, "radius": 0.3, "samples": 200}],
        "seed": 11,
        "outdir": str(tmp_path / "out"),
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    report = json.loads(tn.run_experiment_file(str(cfg_path)))
    assert {r["variant"] for r in report["runs"]} == {"graphical", "coderivative"}
    assert all(r["status"] == "stationary" for r in report["runs"])
    assert (tmp_path / "out" / "report.json").exists()
    assert (tmp_path / "out" / "rates.csv").exists()
