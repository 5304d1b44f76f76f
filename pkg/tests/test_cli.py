import json
import struct
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from spoch.cli import main
from spoch.query import deserialize

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "bench_schema.json").read_text())


def kv(text):
    out = {}
    for line in text.splitlines():
        if ": " in line:
            k, v = line.split(": ", 1)
            out[k] = v
    return out


@pytest.fixture
def chain_file(tmp_path):
    p = tmp_path / "chain.gr"
    assert main(["gen", "chain", str(p), "--n", "30", "--seed", "3"]) == 0
    return p


@pytest.fixture
def grid_ch(tmp_path, capsys):
    g = tmp_path / "grid.spgr"
    ch = tmp_path / "grid.spch"
    assert main(["gen", "grid", str(g), "--rows", "15", "--cols", "15"]) == 0
    assert main(["build", str(g), str(ch)]) == 0
    capsys.readouterr()
    return g, ch


def test_gen_kinds(tmp_path, capsys):
    assert main(["gen", "chain", str(tmp_path / "a.gr"), "--n", "5", "--wmax", "1"]) == 0
    assert kv(capsys.readouterr().out) == {"n": "5", "m": "8"}
    assert main(["gen", "grid", str(tmp_path / "b.spgr"), "--rows", "2", "--cols", "2"]) == 0
    assert kv(capsys.readouterr().out)["m"] == "8"
    assert main(["gen", "random", str(tmp_path / "c.gr"), "--n", "50", "--m", "200", "--components", "2"]) == 0
    assert kv(capsys.readouterr().out)["m"] == "200"
    assert main(["gen", "knn", str(tmp_path / "d.gr"), "--n", "50", "--k", "3"]) == 0
    assert kv(capsys.readouterr().out)["m"] == "150"


def test_build_summary(tmp_path, chain_file, capsys):
    out = tmp_path / "c.spch"
    rounds = tmp_path / "r.jsonl"
    assert main(["build", str(chain_file), str(out), "--rounds-json", str(rounds)]) == 0
    info = kv(capsys.readouterr().out)
    assert out.exists()
    assert int(info["n"]) == 30 and int(info["ch_edges"]) == deserialize(out).edge_count
    assert float(info["build_seconds"]) >= 0
    recs = [json.loads(line) for line in rounds.read_text().splitlines()]
    assert len(recs) == int(info["rounds"]) and recs[0]["live"] == 30


def test_build_missing_input(tmp_path, capsys):
    assert main(["build", str(tmp_path / "nope.gr"), str(tmp_path / "x.spch")]) == 2
    assert "no such file" in capsys.readouterr().err


def test_build_bad_graph(tmp_path, capsys):
    p = tmp_path / "bad.gr"
    p.write_text("p sp 2 1\na 1 5 3\n")
    assert main(["build", str(p), str(tmp_path / "x.spch")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_build_bad_flags(chain_file, tmp_path):
    with pytest.raises(SystemExit):
        main(["build", str(chain_file), str(tmp_path / "x"), "--score-weights", "1,2"])
    assert main(["build", str(chain_file), str(tmp_path / "x"), "--theta", "0"]) == 2


def test_build_thread_determinism(tmp_path, grid_ch, capsys):
    g, _ = grid_ch
    blobs = []
    for t in ("1", "3"):
        out = tmp_path / f"t{t}.spch"
        assert main(["build", str(g), str(out), "--threads", t, "--seed", "77"]) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


def test_threads_env(tmp_path, grid_ch, monkeypatch, capsys):
    g, _ = grid_ch
    monkeypatch.setenv("SPOCH_THREADS", "2")
    assert main(["build", str(g), str(tmp_path / "e.spch")]) == 0
    assert kv(capsys.readouterr().out)["threads"] == "2"
    monkeypatch.setenv("SPOCH_THREADS", "lots")
    assert main(["build", str(g), str(tmp_path / "e.spch")]) == 2


def test_query_random_reproducible(grid_ch, capsys):
    _, ch = grid_ch
    assert main(["query", str(ch), "--random", "50", "--seed", "4", "--show"]) == 0
    a = capsys.readouterr().out.splitlines()[:50]
    assert main(["query", str(ch), "--random", "50", "--seed", "4", "--show"]) == 0
    b = capsys.readouterr().out.splitlines()[:50]
    assert a == b and len(a) == 50


def test_query_pairs_file(tmp_path, grid_ch, capsys):
    _, ch = grid_ch
    pairs = tmp_path / "p.txt"
    pairs.write_text("3 3\n0 224\n")
    assert main(["query", str(ch), "--pairs", str(pairs)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "3 3 0"
    assert kv("\n".join(lines))["queries"] == "2"


def test_query_bad_pair(tmp_path, grid_ch, capsys):
    _, ch = grid_ch
    pairs = tmp_path / "p.txt"
    pairs.write_text("0 225\n")
    assert main(["query", str(ch), "--pairs", str(pairs)]) == 2
    assert "out of range" in capsys.readouterr().err


def test_query_corrupt_file(tmp_path, capsys):
    p = tmp_path / "junk.spch"
    p.write_bytes(b"SPCHjunk")
    assert main(["query", str(p)]) == 2


def test_verify_ok(grid_ch, capsys):
    g, ch = grid_ch
    assert main(["verify", str(g), str(ch), "--pairs", "200"]) == 0
    info = kv(capsys.readouterr().out)
    assert info["mode"] == "sampled" and info["mismatches"] == "0" and info["pairs_checked"] == "200"


def test_verify_exhaustive(tmp_path, chain_file, capsys):
    ch = tmp_path / "c.spch"
    main(["build", str(chain_file), str(ch)])
    capsys.readouterr()
    assert main(["verify", str(chain_file), str(ch)]) == 0
    info = kv(capsys.readouterr().out)
    assert info["mode"] == "exhaustive" and info["pairs_checked"] == str(30 * 30)


def test_verify_detects_corrupt_weight(tmp_path, chain_file, capsys):
    ch = tmp_path / "c.spch"
    main(["build", str(chain_file), str(ch)])
    data = bytearray(ch.read_bytes())
    n = 30
    first_up_arc = 16 + 8 * n + 8 + 8 * (n + 1)
    (w,) = struct.unpack_from("<I", data, first_up_arc + 4)
    struct.pack_into("<I", data, first_up_arc + 4, w + 7)
    ch.write_bytes(bytes(data))
    capsys.readouterr()
    assert main(["verify", str(chain_file), str(ch)]) == 1
    assert "first_mismatch" in capsys.readouterr().out


def test_verify_size_mismatch(tmp_path, grid_ch, chain_file, capsys):
    _, ch = grid_ch
    assert main(["verify", str(chain_file), str(ch)]) == 2


def test_bench_schema(tmp_path, grid_ch, capsys):
    g, _ = grid_ch
    out = tmp_path / "bench.json"
    assert main(["bench", str(g), "--threads", "1,2", "--rounds", "-o", str(out)]) == 0
    report = json.loads(out.read_text())
    jsonschema.validate(report, SCHEMA)
    assert len(report["runs"]) == 2
    assert len({r["ch_edges"] for r in report["runs"]}) == 1
    assert set(report["per_round"]) == {"1", "2"}


def test_bench_stdout_and_errors(grid_ch, capsys):
    g, _ = grid_ch
    assert main(["bench", str(g), "--repeat", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    jsonschema.validate(report, SCHEMA)
    assert len(report["runs"]) == 2
    assert main(["bench", str(g), "--repeat", "0"]) == 2
    with pytest.raises(SystemExit):
        main(["bench", str(g), "--threads", "a,b"])


def test_console_entry_point(tmp_path):
    p = tmp_path / "c.gr"
    r = subprocess.run([sys.executable, "-m", "spoch.cli", "gen", "chain", str(p), "--n", "10"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and p.exists()
    r = subprocess.run([sys.executable, "-m", "spoch.cli", "query", str(tmp_path / "none.spch")],
                       capture_output=True, text=True)
    assert r.returncode == 2
