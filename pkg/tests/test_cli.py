import json

import pytest

from metric_props.cli import main
from metric_props.constructions import triode_bar_indices


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.fixture
def files(tmp_path, capsys):
    def build(name, *args):
        path = tmp_path / f"{name}.json"
        assert run(capsys, "construct", name, *args, "--out", path)[0] == 0
        return path
    return build


def test_check_exit_codes(files, tmp_path, capsys):
    e = files("euclidean", "--a", -1, "--b", 1, "--m", 101)
    assert run(capsys, "check", e, "np", 1)[0] == 0
    t = files("equilateral-centroid")
    code, out = run(capsys, "check", t, "gp", 1)
    assert code == 1 and "center O" in out.out and "d(A, B) = 1" in out.out
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(capsys, "check", bad, "gp", 1)[0] == 2
    assert run(capsys, "check", tmp_path / "missing.json", "gp")[0] == 2


def test_check_json_round_trip(files, capsys):
    t = files("equilateral-centroid")
    code, out = run(capsys, "check", t, "gp", 1, "--json", "--strategy", "both")
    payload = json.loads(out.out)
    assert code == 1 and payload["holds"] is False
    assert payload["witness"]["center"] == 3 and payload["witness"]["tuple"] == [0, 1, 2]


def test_construct_sizes(files, capsys):
    code, out = run(capsys, "construct", "triode-rho", "--m", 21, "--out",
                    files("two-point", "--a", 1).parent / "r.json", "--json")
    assert code == 0 and json.loads(out.out)["size"] == 64
    code, out = run(capsys, "construct", "i-space", "--a", 0.1, "--m", 41, "--out",
                    files("two-point", "--a", 1).parent / "i.json", "--json")
    assert json.loads(out.out)["size"] == 82


def test_construct_errors(tmp_path, capsys):
    assert run(capsys, "construct", "nonsense", "--out", tmp_path / "x.json")[0] == 2
    assert run(capsys, "construct", "euclidean", "--a", 1, "--b", 0, "--m", 5,
               "--out", tmp_path / "x.json")[0] == 2
    # randomized constructors refuse to run without a seed
    assert run(capsys, "construct", "random-metric", "--m", 5, "--out", tmp_path / "x.json")[0] == 2


def test_distort_bar_into_rho(files, tmp_path, capsys):
    bar = files("euclidean", "--a", -1, "--b", 1, "--m", 21)
    rho = files("triode-rho", "--m", 10)
    mp = tmp_path / "map.json"
    mp.write_text(json.dumps({"image": triode_bar_indices(10)}))
    code, out = run(capsys, "distort", bar, rho, mp, "--json")
    s = json.loads(out.out)
    assert code == 0 and s["distortion"] == 2.0 and s["similarity"] is False
    ident = tmp_path / "id.json"
    ident.write_text(json.dumps(list(range(21))))
    code, out = run(capsys, "distort", bar, bar, ident, "--json")
    assert json.loads(out.out)["distortion"] == 1.0
    short = tmp_path / "short.json"
    short.write_text(json.dumps([0, 1]))
    assert run(capsys, "distort", bar, rho, short)[0] == 2


def test_arc_commands(files, tmp_path, capsys):
    host = files("i-space", "--a", 0.1, "--m", 41)
    arc = tmp_path / "arc.json"
    arc.write_text(json.dumps({"order": list(range(0, 82, 2)), "params": [-1 + k / 20 for k in range(41)]}))
    code, out = run(capsys, "arc", host, arc, "slice", "--json")
    payload = json.loads(out.out)
    assert code == 0 and payload["holds"]
    assert all(r["formula_residual"] <= r["grid_step"] for r in payload["reports"])
    assert run(capsys, "arc", host, arc, "openness", "--eps", 0.05)[0] == 0
    assert run(capsys, "arc", host, arc, "separation")[0] == 0

    e = files("euclidean", "--a", 0, "--b", 1, "--m", 21)
    line = tmp_path / "line.json"
    line.write_text(json.dumps(list(range(21))))
    assert run(capsys, "arc", e, line, "obtuse")[0] == 0

    t = files("triode-path", "--m", 8)
    bar = tmp_path / "bar.json"
    bar.write_text(json.dumps(triode_bar_indices(8)))
    code, out = run(capsys, "arc", t, bar, "openness", "--json")
    assert code == 1 and json.loads(out.out)["offenders"]


def test_experiment_separation(tmp_path, capsys):
    out_dir = tmp_path / "sep"
    code, out = run(capsys, "experiment", "separation", "--a", "7/96", "--b", "11/96", "--eps", "1/64",
                    "--out", out_dir, "--json")
    payload = json.loads(out.out)
    assert code == 0 and payload["gp1_holds"] is False
    assert (out_dir / "separation.json").exists()
    assert run(capsys, "experiment", "separation", "--a", "7/96", "--b", "11/96", "--eps", "-0.1",
               "--out", out_dir)[0] == 2


def test_experiment_triode_extension(tmp_path, capsys):
    out_dir = tmp_path / "tri"
    code, out = run(capsys, "experiment", "triode-extension", "--arm-points", 3, "--seed", 4,
                    "--chains", 2, "--steps", 300, "--threads", 1, "--out", out_dir, "--json")
    payload = json.loads(out.out)
    assert code == 0 and len(payload["chains"]) == 2 and payload["exploratory"]
    assert (out_dir / "trace_seed4.csv").read_text().startswith("step,objective")
    assert (out_dir / "trace_seed5.csv").exists()
    # no ambient randomness
    assert run(capsys, "experiment", "triode-extension", "--steps", 10, "--out", out_dir)[0] == 2


def test_experiment_is_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        code, out = run(capsys, "experiment", "triode-extension", "--arm-points", 3, "--seed", 9,
                        "--steps", 200, "--threads", 1, "--out", tmp_path / f"d{k}", "--json")
        outs.append(json.loads(out.out)["best"])
    assert outs[0] == outs[1]
