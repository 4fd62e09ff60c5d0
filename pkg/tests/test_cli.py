import json

import pytest

from lylab.cli import main
from lylab.model import ising_chain, ising_ring


@pytest.fixture()
def ring_config(tmp_path):
    path = tmp_path / "ring.json"
    path.write_text(json.dumps(ising_ring(8, J=0.7, beta=1.0, h=0.4).to_dict()))
    return str(path)


@pytest.fixture()
def soft_ring_config(tmp_path):
    path = tmp_path / "soft.json"
    path.write_text(json.dumps(ising_ring(8, J=0.2, beta=1.0, h=0.5).to_dict()))
    return str(path)


@pytest.fixture()
def quantum_config(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(json.dumps({
        "s": 0.5, "nsites": 2, "couplings": [[0, 1, [1.0, 0.4, -0.3]]],
        "field": [0, 0, 0], "beta": 1.0}))
    return str(path)


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_circle_check_passes_and_embeds_hash(ring_config, capsys):
    assert main(["circle-check", "--model", ring_config]) == 0
    out = _json_out(capsys)
    assert out["subcommand"] == "circle-check"
    assert len(out["model_hash"]) == 16
    assert out["precision"] in ("double", "extended")
    rep = out["report"]
    assert rep["passed"] is True
    # hex floats round-trip bit-exactly
    dev = float.fromhex(rep["max_abs_deviation"])
    assert 0 <= dev < 1e-9
    assert len(rep["roots"]) == rep["degree"]


def test_circle_check_csv_root_table(ring_config, capsys):
    assert main(["circle-check", "--model", ring_config,
                 "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "re,im,modulus,residual"
    assert len(lines) == 9  # header + 8 roots
    mod = float(lines[1].split(",")[2])
    assert abs(mod - 1.0) < 1e-9


def test_unknown_flag_is_input_error(ring_config, capsys):
    assert main(["circle-check", "--model", ring_config, "--bogus"]) == 3


def test_missing_model_file(capsys):
    assert main(["circle-check", "--model", "/nowhere.json"]) == 3
    assert "E_INPUT" in capsys.readouterr().err


def test_bad_model_keys(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"lattice": {"extents": [4]}, "surprise": 1}))
    assert main(["circle-check", "--model", str(path)]) == 3
    assert "unknown model keys" in capsys.readouterr().err


def test_ly_scan_worker_count_invariance(ring_config, capsys, tmp_path):
    texts = []
    for jobs in ("1", "3"):
        out = tmp_path / f"scan{jobs}.json"
        assert main(["ly-scan", "--model", ring_config, "--grid",
                     "0.1,1.5,7,-1.5,1.5,7", "--jobs", jobs,
                     "--out", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    rep = json.loads(texts[0])["report"]
    assert rep["passed"] is True and rep["region"] == "half_plane"


def test_ursell_routes_agree(ring_config, capsys):
    assert main(["ursell", "--model", ring_config, "--sites", "0,1,2"]) == 0
    rep = _json_out(capsys)["report"]
    assert float.fromhex(rep["route_difference"]) < 1e-8
    assert set(rep) >= {"moebius", "epsilon", "sites", "components"}


def test_ursell_single_route(ring_config, capsys):
    assert main(["ursell", "--model", ring_config, "--sites", "0,3",
                 "--route", "moebius"]) == 0
    rep = _json_out(capsys)["report"]
    assert "epsilon" not in rep and "route_difference" not in rep


def test_inequalities_pass_and_fail(tmp_path, ring_config, capsys):
    assert main(["inequalities", "--model", ring_config]) == 0
    capsys.readouterr()
    anti = tmp_path / "anti.json"
    anti.write_text(json.dumps(ising_ring(6, J=-0.8, beta=1.0).to_dict()))
    assert main(["inequalities", "--model", str(anti)]) == 2
    err = capsys.readouterr().err
    assert "E_CHECK" in err and "preconditions" in err


def test_thermo_free_energy_and_degenerate_diagnostic(tmp_path, ring_config,
                                                      capsys):
    assert main(["thermo", "--mode", "free-energy", "--model",
                 ring_config]) == 0
    capsys.readouterr()
    onaxis = tmp_path / "imag.json"
    onaxis.write_text(json.dumps(ising_ring(8, J=1.0, beta=1.0,
                                            h=0.7j).to_dict()))
    assert main(["thermo", "--mode", "free-energy", "--model",
                 str(onaxis)]) == 4
    assert "E_NUMERIC" in capsys.readouterr().err


def test_thermo_mass_gap_includes_fit(tmp_path, capsys):
    cfg = tmp_path / "long.json"
    cfg.write_text(json.dumps(ising_ring(40, J=1.0, beta=1.0, h=0.4).to_dict()))
    assert main(["thermo", "--mode", "mass-gap", "--model", str(cfg)]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["fit"] is not None
    assert float.fromhex(rep["fit"]["discrepancy"]) < 1e-3


def test_thermo_mass_gap_fit_skipped_for_chain(tmp_path, capsys):
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps(ising_chain(8, J=1.0, h=0.3).to_dict()))
    assert main(["thermo", "--mode", "mass-gap", "--model", str(chain)]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["fit"] is None and "fit_note" in rep


def test_thermo_bc_check(soft_ring_config, capsys):
    assert main(["thermo", "--mode", "bc-check", "--model",
                 soft_ring_config]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["geometric"] is True
    assert float.fromhex(rep["final_gap"]) < 1e-6


def test_thermo_r_study(soft_ring_config, capsys):
    assert main(["thermo", "--mode", "r-study", "--model",
                 soft_ring_config]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["bounded"] is True and rep["alarm"] is False


def test_thermo_delta_probe_deterministic(soft_ring_config, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"probe{tag}.json"
        assert main(["thermo", "--mode", "delta-probe", "--model",
                     soft_ring_config, "--widths", "2,3",
                     "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])["report"]
    assert set(rep["slopes"]) == {"2", "3"}


def test_quantum_partition(quantum_config, capsys):
    assert main(["quantum", "--mode", "partition", "--model",
                 quantum_config]) == 0
    rep = _json_out(capsys)["report"]
    assert float.fromhex(rep["Q"]["re"]) > 0
    assert rep["dim"] == 4


def test_quantum_zero_scan_cli(quantum_config, capsys):
    assert main(["quantum", "--mode", "zero-scan", "--model", quantum_config,
                 "--grid", "0.45,2,5,-1,1,5", "--transverse", "0.2,0.1"]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["passed"] is True and rep["in_region_points"] == 25


def test_quantum_limit_study_cli(tmp_path, capsys):
    cfg = tmp_path / "q1.json"
    cfg.write_text(json.dumps({"s": 0.5, "nsites": 1, "couplings": [],
                               "field": [0, 0, 0.5], "beta": 1.0}))
    assert main(["quantum", "--mode", "limit-study", "--model", str(cfg),
                 "--s-values", "0.5,2", "--h-grid", "0.4,1.0"]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["decreasing"] is True


def test_converse_recovers_couplings(ring_config, capsys):
    assert main(["converse", "--model", ring_config, "--samples", "50"]) == 0
    rep = _json_out(capsys)["report"]
    assert rep["ly_holds"] is True
    assert float.fromhex(rep["residual"]) < 1e-10
    recovered = {(r["i"], r["j"]): float.fromhex(r["coupling"])
                 for r in rep["couplings"]}
    assert abs(recovered[(0, 1)] - 0.7) < 1e-9
