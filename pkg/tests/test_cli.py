"""Command-line behavior: exit codes, outputs, determinism, resume."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from cellfade.cli import main
from cellfade.degradation import DegradationState
from cellfade.measurement import forward_measure

DATA = Path(__file__).resolve().parents[1] / "src" / "cellfade" / "data"
CELL = str(DATA / "cell_default.yaml")


def read_json(path):
    return json.loads(Path(path).read_text())


def test_simulate_one_cycle(tmp_path):
    out = tmp_path / "run"
    rc = main(["simulate", "--cell", CELL,
               "--protocol", str(DATA / "protocol_cycle.yaml"),
               "--max-cycles", "1", "--dt", "30", "--dt-rest", "150",
               "--out", str(out)])
    assert rc == 0
    for name in ("trajectory.csv", "cycles.json", "state_final.json",
                 "manifest.json"):
        assert (out / name).exists()
    doc = read_json(out / "cycles.json")
    assert len(doc["cycles"]) == 1
    assert doc["cycles"][0]["capacity_Ah"] > 0.0
    assert doc["reference_capacity_Ah"] > 0.0
    man = read_json(out / "manifest.json")
    assert set(man["outputs"]) == {"trajectory.csv", "cycles.json",
                                   "state_final.json"}


def test_simulate_reruns_byte_identical(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        rc = main(["simulate", "--cell", CELL,
                   "--protocol", str(DATA / "protocol_cycle.yaml"),
                   "--max-cycles", "1", "--dt", "30", "--dt-rest", "150",
                   "--out", str(out)])
        assert rc == 0
        outs.append(out)
    for name in ("trajectory.csv", "cycles.json", "state_final.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    # manifests agree on content hashes (timestamps may differ)
    ha = read_json(outs[0] / "manifest.json")["outputs"]
    hb = read_json(outs[1] / "manifest.json")["outputs"]
    assert ha == hb


def test_simulate_resume_from_state(tmp_path):
    first = tmp_path / "first"
    rc = main(["simulate", "--cell", CELL,
               "--protocol", str(DATA / "protocol_cycle.yaml"),
               "--max-cycles", "1", "--dt", "30", "--dt-rest", "150",
               "--out", str(first)])
    assert rc == 0
    resumed = tmp_path / "resumed"
    rc = main(["rpt", "--cell", CELL,
               "--state", str(first / "state_final.json"),
               "--dt", "30", "--out", str(resumed)])
    assert rc == 0
    aged = read_json(resumed / "rpt.json")
    fresh_dir = tmp_path / "fresh"
    rc = main(["rpt", "--cell", CELL, "--dt", "30", "--out", str(fresh_dir)])
    assert rc == 0
    fresh = read_json(fresh_dir / "rpt.json")
    assert aged["R_s_ohm"] > fresh["R_s_ohm"]
    assert aged["capacity_Ah"] < fresh["capacity_Ah"]
    assert fresh["delta_irr_m"] == 0.0 and aged["delta_irr_m"] > 0.0


def test_missing_input_exits_2(tmp_path):
    rc = main(["simulate", "--cell", str(tmp_path / "nope.yaml"),
               "--protocol", str(DATA / "protocol_cycle.yaml"),
               "--out", str(tmp_path / "o")])
    assert rc == 2


def test_malformed_cell_exits_2(tmp_path):
    bad = tmp_path / "cell.yaml"
    bad.write_text("just a string\n")
    rc = main(["simulate", "--cell", str(bad),
               "--protocol", str(DATA / "protocol_cycle.yaml"),
               "--out", str(tmp_path / "o")])
    assert rc == 2


def test_stalled_protocol_exits_4(tmp_path):
    proto = tmp_path / "stall.yaml"
    proto.write_text(yaml.safe_dump({"steps": [
        {"mode": "rest",
         "until": [{"quantity": "current", "comparator": ">=",
                    "threshold": 1.0}]}]}))
    rc = main(["simulate", "--cell", CELL, "--protocol", str(proto),
               "--dt-rest", "100000", "--out", str(tmp_path / "o")])
    assert rc == 4


def test_identify_family(tmp_path, params, degp, n_li0):
    truth = DegradationState(8e-8, 1.5e-8, 0.96 * params.C_p_nom,
                             0.96 * params.C_n_nom, 0.08)
    m = forward_measure(params, degp, truth, n_li0)
    meas = tmp_path / "m.json"
    meas.write_text(json.dumps({"C_p": m.C_p, "C_n": m.C_n,
                                "LLI": m.LLI, "R_s": m.R_s}))
    out = tmp_path / "fam"
    rc = main(["identify", "--cell", CELL, "--measurements", str(meas),
               "--without-expansion", "--family-samples", "5",
               "--out", str(out)])
    assert rc == 0
    doc = read_json(out / "identification.json")
    assert doc["kind"] == "family"
    assert len(doc["samples"]) == 5
    exps = [s["delta_irr"] for s in doc["samples"]]
    assert len(set(exps)) == 5


def test_identify_unique(tmp_path, params, degp, n_li0):
    truth = DegradationState(8e-8, 1.5e-8, 0.96 * params.C_p_nom,
                             0.96 * params.C_n_nom, 0.08)
    m = forward_measure(params, degp, truth, n_li0)
    meas = tmp_path / "m.json"
    meas.write_text(json.dumps(m.as_dict()))
    out = tmp_path / "uniq"
    rc = main(["identify", "--cell", CELL, "--measurements", str(meas),
               "--with-expansion", "--out", str(out)])
    assert rc == 0
    doc = read_json(out / "identification.json")
    assert doc["kind"] == "unique"
    assert doc["solution"]["delta_sei"] == pytest.approx(truth.delta_sei,
                                                         rel=1e-3)
    assert doc["solution"]["delta_pl"] == pytest.approx(truth.delta_pl,
                                                        rel=1e-3)


def test_identify_infeasible_exits_3(tmp_path, params):
    meas = tmp_path / "m.json"
    meas.write_text(json.dumps({"C_p": params.C_p_nom, "C_n": params.C_n_nom,
                                "LLI": 0.05, "R_s": 1e-4}))
    out = tmp_path / "inf"
    rc = main(["identify", "--cell", CELL, "--measurements", str(meas),
               "--without-expansion", "--out", str(out)])
    assert rc == 3
    assert read_json(out / "identification.json")["kind"] == "infeasible"


def test_identify_ambiguous_exits_3(tmp_path, params, degp, n_li0):
    # two states sharing R_film and expansion exactly (see test_identify)
    e, sei, pl = degp.expansion, degp.sei, degp.plating
    root_sum = e.b_sei * sei.kappa_sei / (pl.kappa_pl * e.b_pl)
    r_areal = 2.0 * root_sum / pl.kappa_pl
    d_pl = 0.25 * root_sum
    st = DegradationState(sei.kappa_sei * (r_areal - d_pl / pl.kappa_pl),
                          d_pl, params.C_p_nom, params.C_n_nom, 0.1)
    m = forward_measure(params, degp, st, n_li0)
    meas = tmp_path / "m.json"
    meas.write_text(json.dumps(m.as_dict()))
    out = tmp_path / "amb"
    rc = main(["identify", "--cell", CELL, "--measurements", str(meas),
               "--with-expansion", "--no-lli-budget", "--out", str(out)])
    assert rc == 3
    doc = read_json(out / "identification.json")
    assert doc["kind"] == "ambiguous"
    assert len(doc["candidates"]) == 2


def test_identify_expansion_flag_needs_channel(tmp_path, params):
    meas = tmp_path / "m.json"
    meas.write_text(json.dumps({"C_p": params.C_p_nom, "C_n": params.C_n_nom,
                                "LLI": 0.05, "R_s": 0.01}))
    rc = main(["identify", "--cell", CELL, "--measurements", str(meas),
               "--with-expansion", "--out", str(tmp_path / "o")])
    assert rc == 2


def test_ambiguity_demo_small(tmp_path):
    # a cut-down demo: 2 members, 2 cycles, no full EOL run
    demo = yaml.safe_load((DATA / "ambiguity_demo.yaml").read_text())
    demo["n_members"] = 2
    demo["max_cycles"] = 2
    demo["eol_capacity_fraction"] = 0.05
    small = tmp_path / "demo.yaml"
    small.write_text(yaml.safe_dump(demo))
    out = tmp_path / "amb"
    rc = main(["ambiguity", "--cell", CELL, "--demo", str(small),
               "--dt", "60", "--dt-rest", "300", "--out", str(out)])
    assert rc == 0
    doc = read_json(out / "ambiguity.json")
    assert doc["n_members"] == 2
    assert doc["rs_spread_rel"] < 0.005
    assert doc["expansion_distinct"] is True
    for i in (1, 2):
        assert (out / f"member_{i}_capacity.csv").exists()
    assert (out / "pseudo_ocv.csv").exists()


def test_bad_subcommand_exits_2(capsys):
    rc = main(["frobnicate"])
    assert rc == 2
    capsys.readouterr()


def test_console_script_help():
    exe = shutil.which("cellfade")
    if exe is None:
        pytest.skip("console script not on PATH")
    res = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for word in ("simulate", "rpt", "identify", "ambiguity"):
        assert word in res.stdout
