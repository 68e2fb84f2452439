import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from divfrontier.cli import main
from divfrontier.io import _HEADER, FORMAT_VERSION, MAGIC, EmbeddingFormatError, read_embeddings, write_embeddings


@pytest.fixture
def pair(tmp_path):
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(300, 4)), rng.normal(size=(300, 4))
    far = rng.normal(size=(300, 4)) + 6
    paths = {}
    for name, arr in (("x", X), ("y", Y), ("far", far)):
        paths[name] = tmp_path / f"{name}.dfe"
        write_embeddings(paths[name], arr)
    paths["arrays"] = (X, Y, far)
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_binary_round_trip_is_bit_exact(tmp_path, dtype):
    X = np.random.default_rng(1).normal(size=(17, 5)).astype(dtype)
    path = tmp_path / "e.dfe"
    write_embeddings(path, X, dtype=dtype)
    back = read_embeddings(path)
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back.astype(dtype), X)
    with open(path, "rb") as fh:
        assert fh.read(4) == MAGIC


def _corrupt(path, data):
    path.write_bytes(data)
    return path


def test_malformed_files(tmp_path):
    good = tmp_path / "good.dfe"
    write_embeddings(good, np.ones((3, 2)))
    raw = good.read_bytes()
    cases = {
        "bad magic": b"NOPE" + raw[4:],
        "truncated payload": raw[:-3],
        "trailing bytes": raw + b"\x00",
    }
    for message, data in cases.items():
        with pytest.raises(EmbeddingFormatError, match=message):
            read_embeddings(_corrupt(tmp_path / "bad.dfe", data))
    nan = np.ones((3, 2))
    nan[1, 1] = np.nan
    write_embeddings(tmp_path / "nan.dfe", nan)
    with pytest.raises(EmbeddingFormatError, match="NaN"):
        read_embeddings(tmp_path / "nan.dfe")
    with pytest.raises(EmbeddingFormatError):
        read_embeddings(tmp_path / "missing.dfe")


def test_cli_bad_magic_exit_code(tmp_path, pair, capsys):
    bad = _corrupt(tmp_path / "bad.dfe", b"XXXX" + b"\x00" * 40)
    code, out, err = run(capsys, "compare", bad, pair["y"], "--seed", 1)
    assert code == 2 and out == ""
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["exit_code"] == 2 and "bad magic" in payload["error"]


def test_compare_identical_files(pair, capsys):
    code, out, _ = run(capsys, "compare", pair["x"], pair["x"], "--seed", 3, "--k", 20)
    assert code == 0
    rec = json.loads(out)
    assert rec["schema"] == 1 and rec["seed"] == 3
    assert rec["mauve"] == pytest.approx(1.0) and rec["fi"] == pytest.approx(0.0, abs=1e-12)


def test_compare_orders_separation(pair, capsys):
    scores = {}
    for other in ("y", "far"):
        code, out, _ = run(capsys, "compare", pair["x"], pair[other], "--seed", 3, "--k", 20)
        assert code == 0
        scores[other] = json.loads(out)["mauve"]
    assert scores["y"] > scores["far"]


def _auc(rows):
    pts = [(1.0, 0.0), (0.0, 1.0)] + [(float(r["exp_neg_cx"]), float(r["exp_neg_cy"])) for r in rows]
    best = {}
    for x, y in pts:
        best[x] = max(y, best.get(x, -1.0))
    xs = sorted(best)
    return sum((xs[i + 1] - xs[i]) * (best[xs[i]] + best[xs[i + 1]]) / 2 for i in range(len(xs) - 1))


def test_frontier_csv_reproduces_mauve(pair, tmp_path, capsys):
    out_csv = tmp_path / "curve.csv"
    common = [pair["x"], pair["far"], "--seed", 5, "--k", 15, "--grid-size", 40]
    assert run(capsys, "frontier", *common, "--out", out_csv)[0] == 0
    with open(out_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["lambda", "x", "y", "exp_neg_cx", "exp_neg_cy"]
    assert len(rows) == 39
    code, out, _ = run(capsys, "compare", *common)
    assert code == 0
    assert _auc(rows) == pytest.approx(json.loads(out)["mauve"], abs=1e-12)


def test_compare_csv_format(pair, capsys):
    code, out, _ = run(capsys, "compare", pair["x"], pair["y"], "--seed", 1, "--k", 10, "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 1 and 0 <= float(rows[0]["mauve"]) <= 1


def test_simulate_is_deterministic(tmp_path, capsys):
    args = ["simulate", "--p", "zipf:1", "--q", "dir:0.5", "--k", 50, "--n", 100, "--n", 400,
            "--reps", 5, "--seed", 7]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", a)[0] == 0
    assert run(capsys, *args, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.read_text().splitlines()))
    assert len(rows) == 2 * 5
    assert {r["n"] for r in rows} == {"100", "400"}


def test_simulate_rejects_unknown_family(capsys):
    code, _, err = run(capsys, "simulate", "--p", "poisson:1", "--q", "zipf:1", "--k", 5, "--n", 10, "--seed", 1)
    assert code == 3
    assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 3


def test_quantize_outputs(pair, tmp_path, capsys):
    code, out, _ = run(capsys, "quantize", pair["x"], pair["y"], "--k", 1, "--seed", 0)
    assert code == 0
    rec = json.loads(out)
    assert rec["p"] == [1.0] and rec["q"] == [1.0]
    code, out, _ = run(capsys, "quantize", pair["x"], pair["far"], "--k", 8, "--seed", 0)
    rec = json.loads(out)
    assert min(rec["p"]) > 0 and min(rec["q"]) > 0
    assert sum(rec["counts_p"]) == rec["n_p"] == 300
    # KT smoothing is add-1/2; the counts reproduce the published histogram
    counts = np.array(rec["counts_p"], dtype=float)
    np.testing.assert_allclose(rec["p"], (counts + 0.5) / (counts.sum() + 0.5 * len(counts)), rtol=1e-12)


def test_csv_and_binary_inputs_agree(pair, tmp_path, capsys):
    X, Y, _ = pair["arrays"]
    xc, yc = tmp_path / "x.csv", tmp_path / "y.csv"
    np.savetxt(xc, X, delimiter=",", fmt="%.17g")
    np.savetxt(yc, Y, delimiter=",", fmt="%.17g")
    np.testing.assert_array_equal(read_embeddings(xc), X)
    a = run(capsys, "compare", pair["x"], pair["y"], "--seed", 2, "--k", 12)[1]
    b = run(capsys, "compare", xc, yc, "--seed", 2, "--k", 12)[1]
    assert json.loads(a) == json.loads(b)


def test_missing_seed_is_logged_and_stored(pair, capsys, caplog):
    code, out, _ = run(capsys, "compare", pair["x"], pair["y"], "--k", 10)
    assert code == 0
    seed = json.loads(out)["seed"]
    assert isinstance(seed, int) and str(seed) in caplog.text


def test_config_file_and_unknown_key(pair, tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"k": 10, "seed": 4, "estimator": "quantize"}))
    code, out, _ = run(capsys, "compare", pair["x"], pair["y"], "--config", good)
    assert code == 0 and json.loads(out)["k"] == 10
    # flags win over the file
    code, out, _ = run(capsys, "compare", pair["x"], pair["y"], "--config", good, "--k", 7)
    assert json.loads(out)["k"] == 7
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"k": 10, "bogus": 1}))
    code, _, err = run(capsys, "compare", pair["x"], pair["y"], "--config", bad)
    assert code == 3 and "bogus" in err


def test_unknown_option_is_a_config_error(pair, capsys):
    code, _, _ = run(capsys, "compare", pair["x"], pair["y"], "--no-such-flag")
    assert code == 3


def test_dimension_mismatch(pair, tmp_path, capsys):
    other = tmp_path / "o.dfe"
    write_embeddings(other, np.ones((5, 2)))
    assert run(capsys, "compare", pair["x"], other, "--seed", 0)[0] == 3


def test_thread_limit_env(pair, capsys, monkeypatch):
    monkeypatch.setenv("DFE_THREADS", "1")
    assert run(capsys, "compare", pair["x"], pair["y"], "--seed", 0, "--k", 5)[0] == 0
    monkeypatch.setenv("DFE_THREADS", "zero")
    assert run(capsys, "compare", pair["x"], pair["y"], "--seed", 0, "--k", 5)[0] == 3


def test_module_entry_point(pair):
    proc = subprocess.run([sys.executable, "-m", "divfrontier", "compare", str(pair["x"]), str(pair["y"]),
                           "--seed", "1", "--k", "10", "--estimator", "knn"],
                          capture_output=True, text=True, env=dict(os.environ))
    assert proc.returncode == 0, proc.stderr
    rec = json.loads(proc.stdout)
    assert rec["estimator"] == "knn" and 0 <= rec["mauve"] <= 1


def test_header_layout(tmp_path):
    path = tmp_path / "h.dfe"
    write_embeddings(path, np.zeros((2, 3), dtype=np.float32), dtype=np.float32)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert len(raw) == _HEADER.size + 2 * 3 * 4
    magic, version, code, n, d = _HEADER.unpack(raw[:_HEADER.size])
    assert (magic, version, n, d) == (MAGIC, FORMAT_VERSION, 2, 3)
