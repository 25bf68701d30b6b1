import json

import numpy as np
import pytest
import yaml

from levyfk import ConfigError, io
from levyfk.cli import FK_HEADER, main
from levyfk.config import config_hash, parse_config

FK = {
    "seed": 3,
    "model": {"sigma2": 1.0},
    "problem": {"rate": {"family": "quadratic", "c": 0.5}, "data": {"family": "one"}, "horizon": 0.5},
    "method": {"kind": "fk"},
    "numerics": {"points": [0.0, 0.5], "n_paths": 2000, "dt": 0.01},
}

PIDE = {
    "model": {"sigma2": 1.0},
    "problem": {"rate": {"family": "quadratic", "c": 0.5}, "data": {"family": "schwartz", "components": [[1.0, 0.0, 1.0]]}, "horizon": 0.2},
    "method": {"kind": "pide"},
    "numerics": {"L": 6.0, "n": 121, "dt": 0.01, "store_every": 10},
}


def write(tmp_path, raw, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def test_fk_csv_header_and_sidecar(tmp_path):
    out = tmp_path / "fk.csv"
    assert main(["fk", "--config", write(tmp_path, FK), "--out", str(out)]) == 0
    header, rows = io.read_csv(out)
    assert header == FK_HEADER
    assert len(rows) == 2
    meta = io.read_sidecar(out)
    assert meta["method"] == "fk"
    assert meta["config_hash"] == config_hash(meta["config"])


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, FK)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["fk", "--config", cfg, "--out", str(a)])
    main(["fk", "--config", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    main(["fk", "--config", cfg, "--out", str(b), "--seed", "4"])
    assert a.read_bytes() != b.read_bytes()


def test_stdout_csv(tmp_path, capsys):
    assert main(["fk", "--config", write(tmp_path, FK)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == ",".join(FK_HEADER)


def test_negative_sigma2_names_field(tmp_path, capsys):
    raw = dict(FK, model={"sigma2": -1.0})
    assert main(["fk", "--config", write(tmp_path, raw)]) == 2
    assert "model.sigma2" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch, needle",
    [
        ({"model": {"sigma2": 1.0, "foo": 1}}, "model.foo"),
        ({"method": {"kind": "banana"}}, "method.kind"),
        ({"numerics": {"n_paths": 0}}, "numerics.n_paths"),
    ],
)
def test_config_errors(tmp_path, capsys, patch, needle):
    assert main(["fk", "--config", write(tmp_path, FK | patch)]) == 2
    assert needle in capsys.readouterr().err


def test_subcommand_must_match_method(tmp_path):
    assert main(["pide", "--config", write(tmp_path, FK)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["fk", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_pide_slab_roundtrip(tmp_path):
    out = tmp_path / "grid.bin"
    assert main(["pide", "--config", write(tmp_path, PIDE), "--out", str(out), "--format", "bin"]) == 0
    slab = io.read_slab(out)
    meta = io.read_sidecar(out)
    assert list(slab.shape) == meta["shape"]
    # rows are stored times, columns the grid points
    assert slab.shape == (len(meta["times"]), 121)
    assert np.all(slab[:, 1:-1] > 0) and np.all(slab[:, [0, -1]] == 0)


def test_under_resolved_grid_exit_code(tmp_path):
    raw = PIDE | {"model": {"sigma2": 1.0, "hbar": 0.001}, "numerics": {"L": 6.0, "n": 31, "dt": 0.01}}
    assert main(["pide", "--config", write(tmp_path, raw), "--out", str(tmp_path / "x.csv")]) == 4


def test_json_output_embeds_config(tmp_path):
    out = tmp_path / "fk.json"
    assert main(["fk", "--config", write(tmp_path, FK), "--out", str(out), "--format", "json"]) == 0
    rec = json.loads(out.read_text())
    assert rec["config_hash"] == config_hash(rec["config"])
    assert rec["columns"] == FK_HEADER and len(rec["rows"]) == 2


def test_variational_config(tmp_path):
    raw = {
        "model": {"jumps": {"kind": "two_point", "alpha": 1.0}},
        "problem": {"rate": {"family": "quadratic_minus_linear"}, "data": {"family": "constant_exp"}},
        "method": {"kind": "variational"},
        "numerics": {"which": "jump", "p": 0.5, "t": 0.0, "t1": 1.0},
    }
    out = tmp_path / "v.json"
    assert main(["variational", "--config", write(tmp_path, raw), "--out", str(out), "--format", "json"]) == 0
    rec = json.loads(out.read_text())
    assert rec["summary"]["total"] == pytest.approx(0.75)


class TestReport:
    def test_two_fk_runs_one_table(self, tmp_path, capsys):
        cfg = write(tmp_path, FK)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["fk", "--config", cfg, "--out", str(a)])
        main(["fk", "--config", cfg, "--out", str(b), "--seed", "9"])
        capsys.readouterr()
        assert main(["report", str(a), str(b)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "run," + ",".join(FK_HEADER)
        assert len(lines) == 5 and "# section" not in lines[0]

    def test_sections_per_method(self, tmp_path, capsys):
        fk = tmp_path / "fk.csv"
        pide = tmp_path / "pide.csv"
        main(["fk", "--config", write(tmp_path, FK), "--out", str(fk)])
        main(["pide", "--config", write(tmp_path, PIDE, "p.yaml"), "--out", str(pide)])
        capsys.readouterr()
        assert main(["report", str(fk), str(pide)]) == 0
        out = capsys.readouterr().out
        assert "# section: fk" in out and "# section: pide" in out

    def test_empty_input(self):
        assert main(["report"]) == 2

    def test_mixed_schema(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_csv(a, ["x"], [[1]])
        io.write_csv(b, ["y"], [[2]])
        with pytest.raises(ConfigError):
            from levyfk.cli import merge_reports

            merge_reports([str(a), str(b)])


def test_unknown_suite():
    assert main(["verify", "nonsense"]) == 2


def test_slab_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValueError):
        io.read_slab(path)


def test_resolved_config_has_defaults():
    cfg = parse_config(FK)
    assert cfg.numerics["block_size"] > 0
    assert cfg.output["format"] == "csv"
    assert parse_config(FK).hash == cfg.hash
