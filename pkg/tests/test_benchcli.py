import json
import math
import os
import re
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ogm_lab.benchcli import Table, config_from_mapping, emit_plot, load_config, main
from ogm_lab.benchcli.runner import execute
from ogm_lab.errors import ConfigError, UsageError

OGM_RUN = """
seed = 0
[runs.ogm]
method = "ogm"
problem = "quadratic"
dim = 5
kappa = 100.0
iterations = 100
"""


def write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def cli(*args):
    return main([str(a) for a in args])


# ------------------------------------------------------------------ config


def test_toml_and_json_agree(tmp_path):
    a = load_config(write(tmp_path, OGM_RUN))
    data = {"seed": 0, "runs": {"ogm": {"method": "ogm", "problem": "quadratic", "dim": 5,
                                        "kappa": 100.0, "iterations": 100}}}
    b = load_config(write(tmp_path, json.dumps(data), "exp.json"))
    assert a == b
    assert a.runs[0].output == "ogm" and a.runs[0].iterations == 100


@pytest.mark.parametrize("mapping,fragment", [
    ({"runs": {}}, "at least one"),
    ({"runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 0}}}, "iterations"),
    ({"runs": {"a": {"method": "fast", "problem": "quadratic", "iterations": 3}}}, "method"),
    ({"runs": {"a": {"method": "ogm", "problem": "cubic", "iterations": 3}}}, "problem"),
    ({"runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3, "colour": 1}}}, "unknown"),
    ({"runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3, "t": 2.0}}}, "t must"),
    ({"runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3.5}}}, "iterations"),
    ({"tolerance": {"base": "x"}, "runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3}}}, "number"),
    ({"runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3, "output": "x"},
               "b": {"method": "agm", "problem": "quadratic", "iterations": 3, "output": "x"}}}, "distinct"),
    ({"speed": 1, "runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3}}}, "top-level"),
])
def test_config_errors(mapping, fragment):
    with pytest.raises(ConfigError, match=fragment):
        config_from_mapping(mapping)


def test_json_duplicate_run_names(tmp_path):
    text = '{"runs": {"a": {"method": "ogm", "problem": "quadratic", "iterations": 3}, ' \
           '"a": {"method": "agm", "problem": "quadratic", "iterations": 3}}}'
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(write(tmp_path, text, "dup.json"))


def test_unsupported_suffix(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "x", "exp.yaml"))


# ------------------------------------------------------------------- tables


finite = st.floats(allow_nan=True, allow_infinity=True, width=64)


@given(st.lists(st.tuples(finite, finite, st.booleans()), min_size=0, max_size=30),
       st.dictionaries(st.from_regex(r"[a-z_]{1,8}", fullmatch=True),
                       st.from_regex(r"[ -~]{0,12}", fullmatch=True), max_size=4))
def test_csv_round_trip(rows, meta):
    cols = {
        "k": np.arange(len(rows), dtype=np.int64),
        "a": np.array([r[0] for r in rows], dtype=float),
        "b": np.array([r[1] for r in rows], dtype=float),
        "violated": np.array([int(r[2]) for r in rows], dtype=np.int64),
    }
    t = Table(cols, meta)
    back = Table.from_csv(t.to_csv())
    assert back.same_values(t)
    assert back.to_csv() == t.to_csv()


def test_csv_layout():
    t = Table({"k": np.array([0, 1]), "v": np.array([0.1, 1 / 3])}, {"method": "ogm"})
    text = t.to_csv()
    assert text.splitlines()[0] == "schema=1"
    assert "\r" not in text
    assert "0.33333333333333331" in text
    with pytest.raises(UsageError):
        Table.from_csv("schema=2\nk\n")


# --------------------------------------------------------------------- plots


def run_spec(method, **extra):
    table = {"method": method, "problem": "quadratic", "dim": 4, "kappa": 50.0, "iterations": 60}
    table.update(extra)
    return config_from_mapping({"runs": {method: table}}).runs[0]


def test_plot_single_row_and_empty(tmp_path):
    res = execute(run_spec("ogm"))
    one = Table({c: v[:1] for c, v in res.trace.columns.items()}, res.trace.meta)
    path = tmp_path / "one.svg"
    emit_plot(one, path)
    text = path.read_text()
    assert text.startswith("<svg") and text.count("<circle") == 1
    empty = Table({c: v[:0] for c, v in res.trace.columns.items()}, res.trace.meta)
    with pytest.raises(UsageError):
        emit_plot(empty, tmp_path / "e.svg")
    with pytest.raises(OSError):
        emit_plot(res.trace, tmp_path / "missing" / "x.svg")


def _polylines(svg):
    out = []
    for m in re.finditer(r'<polyline points="([^"]+)"', svg):
        out.append(np.array([[float(v) for v in p.split(",")] for p in m.group(1).split()]))
    return out


def test_ogm_vs_agm_bound_offset(tmp_path):
    ogm = execute(run_spec("ogm")).trace
    agm = execute(run_spec("agm")).trace
    ratio = agm["bound_primary"][1:] / ogm["bound_primary"][1:]
    np.testing.assert_allclose(np.log10(ratio), math.log10(2.0), rtol=1e-13)
    path = tmp_path / "pair.svg"
    emit_plot([("OGM", ogm), ("AGM", agm)], path)
    lines = _polylines(path.read_text())
    bound_ogm, bound_agm = lines[1], lines[3]
    offset = bound_ogm[:, 1] - bound_agm[:, 1]
    assert np.ptp(offset) <= 0.02 and offset.mean() > 0


# ----------------------------------------------------------------------- CLI


def test_run_row_counts_and_determinism(tmp_path):
    cfg = write(tmp_path, OGM_RUN)
    assert cli("run", "--config", cfg, "--out", tmp_path / "a", "--plots") == 0
    assert cli("run", "--config", cfg, "--out", tmp_path / "b", "--plots") == 0
    for suffix in (".trace.csv", ".cert.csv", ".svg"):
        a = (tmp_path / "a" / f"ogm{suffix}").read_bytes()
        b = (tmp_path / "b" / f"ogm{suffix}").read_bytes()
        assert a == b
    for suffix in (".trace.csv", ".cert.csv"):
        t = Table.read(tmp_path / "a" / f"ogm{suffix}")
        assert len(t) == 101
        assert np.array_equal(t["k"], np.arange(101))


def test_threads_do_not_change_bytes(tmp_path, monkeypatch):
    text = OGM_RUN + "".join(f"""
[runs.r{i}]
method = "{m}"
problem = "quadratic"
dim = 4
seed = {i}
iterations = 40
""" for i, m in enumerate(["agm", "sc_ogm", "unified", "lc"]))
    cfg = write(tmp_path, text)
    monkeypatch.setenv("OGM_LAB_THREADS", "1")
    assert cli("run", "--config", cfg, "--out", tmp_path / "one") == 0
    monkeypatch.setenv("OGM_LAB_THREADS", "4")
    assert cli("run", "--config", cfg, "--out", tmp_path / "four") == 0
    names = sorted(p.name for p in (tmp_path / "one").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "four").iterdir())
    for n in names:
        assert (tmp_path / "one" / n).read_bytes() == (tmp_path / "four" / n).read_bytes()
    monkeypatch.setenv("OGM_LAB_THREADS", "zero")
    assert cli("run", "--config", cfg, "--out", tmp_path / "x") == 1


def test_exit_codes(tmp_path, capsys):
    assert cli("run", "--config", tmp_path / "absent.toml") == 1
    assert cli("run", "--config", write(tmp_path, "runs = [", "bad.toml")) == 1
    with pytest.raises(SystemExit) as info:
        cli("schedule", "--kind", "gamma", "--count", "3")
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli("launch")
    assert info.value.code == 1
    understated = """
[runs.blowup]
method = "ogm"
problem = "quadratic"
dim = 2
kappa = 10.0
L = 10.0
L_scale = 0.1
iterations = 100
"""
    capsys.readouterr()
    assert cli("run", "--config", write(tmp_path, understated, "u.toml"), "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert re.search(r"blowup: diverged at k=\d+", err)


def test_diag_problem_under_understated_L_is_diverging():
    spec = run_spec("ogm", dim=2, kappa=10.0, L=10.0, L_scale=0.1, iterations=100)
    res = execute(spec)
    assert res.status == "divergence"
    assert res.violations and res.violations[0][1] >= 1


def test_schedule_output(capsys):
    assert cli("schedule", "--kind", "theta", "--count", "3") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,theta"
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "1", "2"]
    vals = [float(l.split(",")[1]) for l in lines[1:]]
    assert vals[0] == 1.0 and vals[1] == pytest.approx(1.6180339887, abs=1e-10)
    assert vals[2] == pytest.approx(2.19352708533, abs=1e-10)
    assert cli("schedule", "--kind", "phi", "--count", "2") == 0
    assert capsys.readouterr().out.splitlines()[1:] == ["0,1", "1,2"]
    assert cli("schedule", "--kind", "zeta", "--count", "1000000") == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert row[0] == "1000000" and 0.636 <= float(row[1]) <= 0.656
    assert cli("schedule", "--kind", "zeta", "--count", "10") == 1


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ogm_lab", "schedule", "--kind", "phi", "--count", "2"],
                         capture_output=True, text=True, check=True)
    assert out.stdout == "k,phi\n0,1\n1,2\n"
