import json
import os

import pytest

from mdplab import cli, records


def small_config(tmp_path, **est):
    cfg = {
        "name": "small",
        "seed": 5,
        "model": {"type": "power-law", "d": 2, "eps": 0.5, "J": 8, "seed": 1},
        "function": {"kind": "log-norm", "d": 2},
        "estimators": est or {
            "assumptions": {"r_grid": [0.1, 1.0], "budget": 2000},
            "variance": {"n_grid": [8, 16], "M": 200},
            "cgf": {"beta": 0.25, "lambda_grid": [-0.2, 0.0, 0.2], "n_grid": [8, 16], "M": 200},
            "tails": {"beta": 0.25, "c": 0.5, "n_grid": [8, 16], "M": 200},
            "surgery": {"n_grid": [4, 8], "M": 100},
        },
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_writes_all_tables(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["run", str(small_config(tmp_path)), "--out", str(out)])
    assert code in (0, 4)
    names = sorted(os.listdir(out))
    assert names == ["assumptions.csv", "cgf.csv", "record.json", "surgery.csv", "tails.csv", "variance.csv"]
    rec = records.read_record(out / "record.json")
    assert rec["seed"] == 5 and rec["exit_code"] == code
    assert rec["content_hash"] == records.content_hash(rec)
    assert "scaled CGF" in capsys.readouterr().out


def test_record_identical_across_threads(tmp_path):
    cfg = small_config(tmp_path)
    hashes = set()
    for t in (1, 4, 8):
        out = tmp_path / f"t{t}"
        cli.main(["run", str(cfg), "--out", str(out), "--threads", str(t)])
        rec = records.read_record(out / "record.json")
        hashes.add(rec["content_hash"])
        assert (out / "cgf.csv").read_bytes() == (tmp_path / "t1" / "cgf.csv").read_bytes()
    assert len(hashes) == 1


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = small_config(tmp_path, variance={"n_grid": [8], "M": 100})
    monkeypatch.setenv("MDP_LAB_SEED", "77")
    cli.main(["run", str(cfg), "--out", str(tmp_path / "a")])
    assert records.read_record(tmp_path / "a" / "record.json")["seed"] == 77
    cli.main(["run", str(cfg), "--out", str(tmp_path / "b"), "--seed", "3"])
    assert records.read_record(tmp_path / "b" / "record.json")["seed"] == 3
    monkeypatch.delenv("MDP_LAB_SEED")
    cli.main(["run", str(cfg), "--out", str(tmp_path / "c")])
    assert records.read_record(tmp_path / "c" / "record.json")["seed"] == 5


def test_unknown_function_kind(tmp_path):
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({
        "model": {"type": "white-noise", "d": 1},
        "function": {"kind": "custom-zero", "d": 1},
        "estimators": {"variance": {"n_grid": [8], "M": 100}},
    }))
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_bad_config_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"model": {"type": "power-law"}}))
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_check_f_rejects_d1_log(tmp_path, capsys):
    assert cli.main(["check-f", "--kind", "log-norm", "--d", "1"]) == cli.EXIT_CONFIG
    assert "rejected" in capsys.readouterr().err
    out = tmp_path / "probe.csv"
    assert cli.main(["check-f", "--kind", "log-norm", "--d", "1", "--probe", "--budget", "2000",
                     "--out", str(out)]) == cli.EXIT_CONFIG
    assert out.exists()


def test_check_f_accepts_d2(tmp_path):
    out = tmp_path / "f.csv"
    assert cli.main(["check-f", "--budget", "2000", "--out", str(out)]) == cli.EXIT_OK
    assert out.read_text().startswith("x_index,r,I_hat")


def test_spectral_and_synthesize(tmp_path, capsys):
    csv = tmp_path / "f.csv"
    assert cli.main(["spectral", "--d", "1", "--J", "1", "--K", "64", "--out", str(csv)]) == 0
    model = tmp_path / "m.json"
    assert cli.main(["synthesize", "--spectral", str(csv), "--J", "1", "--out", str(model)]) == 0
    assert json.loads(model.read_text())["halfwidth"] == 1
    assert cli.main(["spectral", "--d", "1", "--J", "1", "--K", "64", "--min-subsampling", "0.5",
                     "--out", str(tmp_path / "g.csv")]) == 0
    assert "smallest m" in capsys.readouterr().out


def test_subcommands_run(tmp_path):
    base = ["--d", "1", "--J", "0", "--kind", "linear-coordinate", "--n-grid", "8,16", "-M", "400"]
    assert cli.main(["variance", *base, "--out", str(tmp_path / "v")]) == 0
    assert cli.main(["cgf", *base, "--sigma", "1", "--lambdas=-0.2,0.2", "--out", str(tmp_path / "c")]) == 0
    assert cli.main(["tails", *base, "--sigma", "1", "--c", "0.3", "--out", str(tmp_path / "t")]) == 0
    assert cli.main(["surgery", *base, "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "surgery.csv").exists()


@pytest.mark.parametrize("name", ["whitenoise_linear.json", "lognorm_powerlaw.json"])
def test_bundled_configs_load(name):
    cfg = cli.load_config(name)
    cli.validate_config(cfg)
    assert "seed" in cfg


def test_degenerate_exit_code(tmp_path, monkeypatch):
    from mdplab import funcs
    monkeypatch.setattr(cli, "build_function", lambda spec: funcs.zero_function(spec["d"]))
    path = tmp_path / "zero.json"
    path.write_text(json.dumps({
        "model": {"type": "white-noise", "d": 1},
        "function": {"kind": "linear-coordinate", "d": 1},
        "estimators": {"variance": {"n_grid": [8], "M": 100},
                       "cgf": {"beta": 0.25, "lambda_grid": [0.1], "n_grid": [8], "M": 100}},
    }))
    assert cli.main(["run", str(path), "--out", str(tmp_path / "o")]) == cli.EXIT_DEGENERATE
    assert not (tmp_path / "o" / "cgf.csv").exists()


def test_cgf_known_sigma_is_used(tmp_path):
    out = tmp_path / "c"
    assert cli.main(["cgf", "--d", "1", "--J", "0", "--kind", "linear-coordinate", "--sigma", "1.5",
                     "--lambdas=0.2", "--n-grid", "8", "-M", "200", "--out", str(out)]) == 0
    rec = records.read_record(out / "record.json")
    assert rec["results"]["cgf"]["sigma_hat"] == 1.5 and "variance" not in rec["results"]
