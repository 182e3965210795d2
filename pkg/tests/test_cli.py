import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from parabolic_lp.cli import COMMANDS, load_schema, main, run_command
from parabolic_lp.gfa import read_gfa

SMALL = {"grid": {"L": 8.0, "N": 64}, "seed": 3}


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, command, cfg, *extra, out="out"):
    code = main([command, "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / out), *extra])
    manifest = json.loads((tmp_path / out / "manifest.json").read_text())
    return code, manifest


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_schema_is_valid_and_closed():
    schema = load_schema()
    jsonschema.Draft202012Validator.check_schema(schema)
    assert schema["additionalProperties"] is False
    for key in ("grid", "symbol", "window", "exponents", "weight", "family", "atoms", "constants"):
        assert schema["properties"][key]["additionalProperties"] is False


@pytest.mark.parametrize("command", ["validate", "rho-table", "partition", "transform", "reconstruct", "gfunc",
                                     "maximal", "constants"])
def test_commands_succeed(tmp_path, command):
    cfg = dict(SMALL, samples=500) if command in ("validate", "rho-table") else dict(SMALL)
    if command == "constants":
        cfg = {"constants": {"span": 4}}
    code, manifest = run(tmp_path, command, cfg)
    assert code == 0, manifest["message"]
    assert manifest["exit_code"] == 0 and manifest["command"] == command
    for name in manifest["outputs"]:
        assert (tmp_path / "out" / name).exists(), name
    assert {"config_hash", "seed", "threads", "versions", "wall_time", "summary"} <= set(manifest)


def test_rho_table_values(tmp_path):
    code, _ = run(tmp_path, "rho-table", {"points": [[3.0, 4.0], [0.0, 1.0]]})
    assert code == 0
    rows = read_csv(tmp_path / "out" / "rho_table.csv")
    assert rows[0] == ["x1", "x2", "rho", "rho_star"]
    assert float(rows[1][2]) == pytest.approx(((9 + 145**0.5) / 2) ** 0.5, rel=1e-12)
    assert float(rows[2][2]) == pytest.approx(1.0, abs=1e-12)


def test_rho_table_rejects_bad_points(tmp_path):
    code, manifest = run(tmp_path, "rho-table", {"points": [[1.0, 2.0, 3.0]]})
    assert code == 2 and "points" in manifest["message"]


def test_gfunc_and_reconstruct_outputs(tmp_path):
    assert run(tmp_path, "gfunc", SMALL)[0] == 0
    rows = read_csv(tmp_path / "out" / "gfunc.csv")
    assert rows[0] == ["point_id", "g_discrete", "g_continuous"] and len(rows) == 64 * 64 + 1
    code, manifest = run(tmp_path, "reconstruct", dict(SMALL, symbol={"id": "annulus"}), out="rec")
    assert code == 0 and manifest["summary"]["relative_l2_error"] < 1e-10
    header, arr = read_gfa(tmp_path / "rec" / "reconstruction.gfa")
    assert header["shape"] == [64, 64] and arr.dtype == "<f8"


def test_partition_writes_eta(tmp_path):
    code, manifest = run(tmp_path, "partition", dict(SMALL, symbol={"id": "annulus"}))
    assert code == 0 and manifest["summary"]["residual"] <= 1e-8
    side = json.loads((tmp_path / "out" / "eta_hat.gfa.json").read_text())
    assert side["symbol"] == "annulus" and "window" in side


def test_atoms_csv(tmp_path):
    cfg = dict(SMALL, grid={"L": 16.0, "N": 128}, atoms={"count": 3}, exponents={"p": 2 / 3})
    code, _ = run(tmp_path, "atoms", cfg)
    assert code == 0
    rows = read_csv(tmp_path / "out" / "atoms.csv")
    assert len(rows) == 4 and rows[0][:3] == ["atom_id", "p", "radius"]
    assert all(r[7] == "1" for r in rows[1:])


def test_equivalence_small(tmp_path):
    cfg = {"family": {"count": 2, "resolutions": [64, 128]}}
    code, manifest = run(tmp_path, "equivalence", cfg)
    assert code == 0, manifest["message"]
    rows = read_csv(tmp_path / "out" / "equivalence.csv")
    assert rows[0] == ["function_id", "p", "hp_quasinorm", "g_norm", "ratio", "resolution", "symbol", "b",
                       "j_min", "j_max", "L"]
    assert len(rows) == 5


def test_equivalence_tolerance_failure(tmp_path):
    # at N=16 the packets alias onto the Nyquist row and vanish
    code, manifest = run(tmp_path, "equivalence", {"family": {"count": 2, "resolutions": [16, 64]}})
    assert code == 3 and "ToleranceFailure" in manifest["message"]


def test_inadmissible_matrix_exit_2(tmp_path):
    code, manifest = run(tmp_path, "validate", {"matrix": [[0.5, 0.0], [0.0, 2.0]]})
    assert code == 2 and "admissibility" in manifest["message"]


def test_grid_dimension_mismatch_exit_2(tmp_path):
    code, _ = run(tmp_path, "gfunc", {"grid": {"n": 3}})
    assert code == 2


@pytest.mark.parametrize("cfg", [{"colour": 1}, {"grid": {"M": 3}}, {"symbol": {"id": "laplace"}},
                                 {"exponents": {"p": -1}}, {"seed": -4}])
def test_config_rejected(tmp_path, cfg, capsys):
    code = main(["validate", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "config invalid" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", "--config", str(bad)]) == 2


def test_deterministic_outputs(tmp_path):
    cfg = dict(SMALL)
    run(tmp_path, "gfunc", cfg, "--threads", "1", out="a")
    run(tmp_path, "gfunc", cfg, "--threads", "2", out="b")
    assert (tmp_path / "a" / "gfunc.csv").read_bytes() == (tmp_path / "b" / "gfunc.csv").read_bytes()


def test_seed_override(tmp_path):
    _, m = run(tmp_path, "rho-table", {"seed": 1}, "--seed", "9")
    assert m["seed"] == 9
    a = read_csv(tmp_path / "out" / "rho_table.csv")
    _, _ = run(tmp_path, "rho-table", {"seed": 9}, out="again")
    assert a == read_csv(tmp_path / "again" / "rho_table.csv")


def test_config_hash_stable(tmp_path):
    _, a = run(tmp_path, "rho-table", {"seed": 1, "samples": 3}, out="x")
    _, b = run(tmp_path, "rho-table", {"samples": 3, "seed": 1}, out="y")
    assert a["config_hash"] == b["config_hash"]


def test_run_command_api(tmp_path):
    code, manifest = run_command("validate", {"samples": 200}, tmp_path / "api")
    assert code == 0 and manifest["summary"]["gamma"] == 3.0


def test_all_commands_listed():
    assert set(COMMANDS) == {"validate", "rho-table", "partition", "transform", "reconstruct", "gfunc", "maximal",
                             "atoms", "equivalence", "constants"}


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "parabolic_lp.cli", "rho-table", "--out", str(tmp_path / "m"),
                           "--verbose"], capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "parabolic_lp.cli", "nonsense"], capture_output=True, text=True)
    assert proc.returncode == 2
