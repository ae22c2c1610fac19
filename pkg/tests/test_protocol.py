"""Protocol execution: terminations, CV regulation, RPTs, campaigns."""

import dataclasses

import numpy as np
import pytest

from cellfade.cell import Cell
from cellfade.errors import ConfigError, ProtocolStallError
from cellfade.params import DegradationParameters
from cellfade.protocol import (
    Campaign,
    CycleRecord,
    ProtocolStep,
    Termination,
    Trajectory,
    parse_current,
    reference_capacity,
    run_campaign,
    run_protocol,
    run_rpt,
    run_step,
)


@pytest.fixture
def cell(params, degp):
    return Cell(params, degp)


@pytest.fixture(scope="session")
def c1(params):
    return reference_capacity(params)


class TestParseCurrent:
    def test_plain_rates(self):
        assert parse_current("C/2", 4.0) == pytest.approx(2.0)
        assert parse_current("C/20", 4.0) == pytest.approx(0.2)
        assert parse_current("C", 4.0) == pytest.approx(4.0)
        assert parse_current("2C", 4.0) == pytest.approx(8.0)
        assert parse_current("1.5C", 4.0) == pytest.approx(6.0)

    def test_signed_rates(self):
        assert parse_current("-C/2", 4.0) == pytest.approx(-2.0)
        assert parse_current("-2C", 4.0) == pytest.approx(-8.0)

    def test_numbers_pass_through(self):
        assert parse_current(3, 4.0) == 3.0
        assert parse_current(-1.25, 4.0) == -1.25

    def test_garbage_raises(self):
        for bad in ("", "fast", "C/", "2", "C/2C"):
            with pytest.raises(ConfigError):
                parse_current(bad, 4.0)


class TestValidation:
    def test_termination_checks(self):
        t = Termination("voltage", "<=", 3.0)
        assert t.met(2.9) and not t.met(3.1)
        t = Termination("current", "abs<=", 0.2)
        assert t.met(-0.1) and t.met(0.15) and not t.met(0.3)
        with pytest.raises(ConfigError):
            Termination("power", "<=", 1.0)
        with pytest.raises(ConfigError):
            Termination("voltage", "==", 1.0)

    def test_step_checks(self):
        with pytest.raises(ConfigError):
            ProtocolStep("pulse", 1.0, [Termination("time", ">=", 1.0)])
        with pytest.raises(ConfigError):
            ProtocolStep("cc", 1.0, [])
        with pytest.raises(ConfigError):
            # cv holding forever: needs a current or time exit
            ProtocolStep("cv", 4.2, [Termination("voltage", ">=", 4.2)])

    def test_campaign_checks(self):
        steps = [ProtocolStep("rest", 0.0, [Termination("time", ">=", 1.0)])]
        with pytest.raises(ConfigError):
            Campaign(steps, eol_capacity_fraction=0.0)
        with pytest.raises(ConfigError):
            Campaign(steps, eol_capacity_fraction=1.5)
        with pytest.raises(ConfigError):
            Campaign(steps, max_cycles=0)
        with pytest.raises(ConfigError):
            Campaign(steps, rpt_every=-1)


def test_rest_time_termination_exact(cell):
    step = ProtocolStep("rest", 0.0, [Termination("time", ">=", 600.0)])
    el, q, fired = run_step(cell, step, dt_rest=77.0)
    assert el == pytest.approx(600.0, abs=1e-9)   # last stride clamps
    assert q == 0.0
    assert fired.quantity == "time"


def test_cc_discharge_ends_at_voltage_limit(cell, c1):
    step = ProtocolStep("cc", c1 / 2.0, [Termination("voltage", "<=", 3.0)])
    traj = Trajectory()
    el, q, fired = run_step(cell, step, dt=10.0, trajectory=traj)
    assert fired.quantity == "voltage"
    v_end = traj.V[-1]
    assert 3.0 - 1e-3 <= v_end <= 3.0   # fired under the limit, < 1 mV deep
    assert q > 0.0


def test_cc_coulomb_count_matches_trajectory(cell, c1):
    step = ProtocolStep("cc", c1 / 2.0, [Termination("voltage", "<=", 3.0)])
    traj = Trajectory()
    el, q, _ = run_step(cell, step, dt=10.0, trajectory=traj)
    a = traj.arrays()
    dt = np.diff(np.concatenate([[0.0], a["t"]]))
    q_int = float(np.sum(a["I"] * dt)) / 3600.0
    assert q == pytest.approx(q_int, rel=1e-3)
    assert q == pytest.approx(el * (c1 / 2.0) / 3600.0, rel=1e-6)


def test_cv_holds_setpoint_and_tapers(cell, c1):
    # discharge a bit first so the CV at V_max has work to do
    run_step(cell, ProtocolStep("cc", c1 / 2.0,
                                [Termination("time", ">=", 1800.0)]), dt=10.0)
    traj = Trajectory()
    step = ProtocolStep("cv", cell.params.V_max,
                        [Termination("current", "abs<=", c1 / 100.0)])
    el, q, fired = run_step(cell, step, dt=10.0, trajectory=traj)
    assert fired.quantity == "current"
    a = traj.arrays()
    assert np.max(np.abs(a["V"] - cell.params.V_max)) <= 1e-4 + 1e-9
    assert abs(a["I"][-1]) <= c1 / 100.0
    # charging current tapers toward zero
    assert a["I"][0] < 0.0
    assert abs(a["I"][-1]) < abs(a["I"][0])


def test_stall_raises(cell):
    # a rest step can never satisfy a current >= threshold condition
    step = ProtocolStep("rest", 0.0, [Termination("current", ">=", 1.0)])
    with pytest.raises(ProtocolStallError):
        run_step(cell, step, dt_rest=1e5)


def test_protocol_determinism(cell, params, degp, c1):
    steps = [
        ProtocolStep("cc", c1 / 2.0, [Termination("voltage", "<=", 3.2)]),
        ProtocolStep("rest", 0.0, [Termination("time", ">=", 300.0)]),
        ProtocolStep("cc", -c1 / 2.0, [Termination("voltage", ">=", 4.2)]),
    ]
    outs = []
    for _ in range(2):
        c = Cell(params, degp)
        tr = Trajectory()
        outs.append((run_protocol(c, steps, dt=10.0, trajectory=tr),
                     tr.arrays()))
    (el_a, q_a), a = outs[0]
    (el_b, q_b), b = outs[1]
    assert el_a == el_b and q_a == q_b
    assert np.array_equal(a["V"], b["V"])
    assert np.array_equal(a["I"], b["I"])


def test_slow_discharge_tracks_ocv(cell, c1):
    # at C/100 the terminal voltage sits within 2 mV of the equilibrium
    # curve at matched mean stoichiometry
    step = ProtocolStep("cc", c1 / 100.0, [Termination("voltage", "<=", 3.2)])
    traj = Trajectory()
    run_step(cell, step, dt=300.0, trajectory=traj)
    a = traj.arrays()
    p = cell.params
    worst = 0.0
    for k in range(0, len(a["V"]), 10):
        ocv = p.ocp_pos(a["y"][k]) - p.ocp_neg(a["x"][k])
        worst = max(worst, abs(ocv - a["V"][k]))
    assert worst < 2e-3


def test_timestep_refinement_converged(cell, params, degp, c1):
    # C/20 discharge curve at the working timestep vs a 10x finer one
    def curve(dt):
        c = Cell(params, degp)
        tr = Trajectory()
        run_step(c, ProtocolStep("cc", c1 / 20.0,
                                 [Termination("voltage", "<=", 3.0)]),
                 dt=dt, trajectory=tr)
        a = tr.arrays()
        q = np.cumsum(a["I"] * np.diff(np.concatenate([[0.0], a["t"]]))) / 3600.0
        return q, a["V"]

    q_c, v_c = curve(60.0)
    q_f, v_f = curve(6.0)
    grid = np.linspace(0.02 * q_c[-1], 0.98 * min(q_c[-1], q_f[-1]), 80)
    err = np.interp(grid, q_c, v_c) - np.interp(grid, q_f, v_f)
    assert np.max(np.abs(err)) < 5e-3


def test_rpt_fresh_capacity(cell, c1):
    rpt = run_rpt(cell, dt=30.0)
    assert rpt["capacity_Ah"] == pytest.approx(c1, rel=0.01)
    assert rpt["R_s_ohm"] > 0.0
    assert rpt["delta_irr_m"] == 0.0
    assert rpt["pseudo_ocv"].voltage.shape == rpt["pseudo_ocv"].capacity_Ah.shape


def test_rpt_does_not_age_the_cell(cell):
    d0 = cell.degradation.copy()
    x0, y0 = cell.mean_stoichiometry()
    run_rpt(cell, dt=30.0)
    assert cell.degradation == d0
    assert cell.mean_stoichiometry() == (x0, y0)


def test_rpt_esoh_close_to_truth(cell):
    rpt = run_rpt(cell, dt=30.0)
    assert rpt["esoh"] is not None
    w = cell.esoh()
    d = cell.degradation
    assert rpt["esoh"]["C_p"] == pytest.approx(d.C_p, rel=0.01)
    assert rpt["esoh"]["C_n"] == pytest.approx(d.C_n, rel=0.01)
    assert rpt["esoh"]["x_100"] == pytest.approx(w.x_100, abs=0.02)


def test_campaign_runs_and_records(cell, c1):
    steps = [
        ProtocolStep("cc", c1 / 2.0, [Termination("voltage", "<=", 3.0)]),
        ProtocolStep("rest", 0.0, [Termination("time", ">=", 300.0)]),
        ProtocolStep("cc", -c1 / 2.0, [Termination("voltage", ">=", 4.2)]),
        ProtocolStep("cv", 4.2, [Termination("current", "abs<=", c1 / 20.0)]),
    ]
    camp = Campaign(steps, rpt_every=2, eol_capacity_fraction=0.5, max_cycles=3)
    traj, rul, eol = run_campaign(cell, camp, dt=30.0, dt_rest=150.0)
    assert len(traj.cycles) == 3
    assert rul == 3 and eol is False
    for k, rec in enumerate(traj.cycles, start=1):
        assert rec.cycle == k
        assert rec.capacity_Ah > 0.0
        assert set(rec.degradation) == {"delta_sei", "delta_pl",
                                        "C_p", "C_n", "LLI"}
    assert traj.cycles[0].rpt is not None    # cycles 1 and 3 carry RPTs
    assert traj.cycles[1].rpt is None
    assert traj.cycles[2].rpt is not None
    # aging is monotone across cycles
    d1 = traj.cycles[0].degradation
    d3 = traj.cycles[2].degradation
    assert d3["delta_sei"] > d1["delta_sei"]
    assert d3["C_p"] < d1["C_p"]
    assert d3["LLI"] > d1["LLI"]


def test_campaign_immediate_eol_at_full_threshold(cell, c1):
    # kinetic losses keep any finite-rate cycle under the window capacity,
    # so a threshold at 100% retires the cell on cycle one
    steps = [
        ProtocolStep("cc", c1 / 2.0, [Termination("voltage", "<=", 3.0)]),
        ProtocolStep("cc", -c1 / 2.0, [Termination("voltage", ">=", 4.2)]),
    ]
    camp = Campaign(steps, eol_capacity_fraction=1.0, max_cycles=5)
    traj, rul, eol = run_campaign(cell, camp, dt=30.0)
    assert rul == 0 and eol is True
    assert len(traj.cycles) == 1


def test_campaign_flat_when_mechanisms_off(cell, params, degp, c1):
    # films frozen and fatigue coefficients zeroed: capacity cannot drift
    lam0 = dataclasses.replace(degp.lam, beta1_pos=0.0, beta2_pos=0.0,
                               beta1_neg=0.0, beta2_neg=0.0)
    quiet = DegradationParameters(degp.sei, degp.plating, lam0, degp.expansion)
    c = Cell(params, quiet)
    c.freeze_degradation = True
    steps = [
        ProtocolStep("cc", c1 / 2.0, [Termination("voltage", "<=", 3.0)]),
        ProtocolStep("rest", 0.0, [Termination("time", ">=", 300.0)]),
        ProtocolStep("cc", -c1 / 2.0, [Termination("voltage", ">=", 4.2)]),
        ProtocolStep("cv", 4.2, [Termination("current", "abs<=", c1 / 20.0)]),
    ]
    camp = Campaign(steps, eol_capacity_fraction=0.5, max_cycles=4)
    traj, rul, eol = run_campaign(c, camp, dt=30.0, dt_rest=150.0)
    # cycle 1 starts from exact equilibrium, later cycles from the CV-taper
    # endpoint; compare within the settled periodic orbit
    caps = [r.capacity_Ah for r in traj.cycles[1:]]
    assert max(caps) - min(caps) <= 1e-3 * max(caps)
    assert eol is False
