import csv
import json

import pytest

from offloadsim.cli import main

SHORT_SCENARIO = {
    "horizon_s": 3.0,
    "seed": 5,
    "firm_rate_per_s": 10.0,
    "soft_rate_per_s": 10.0,
    "edge_service_windows": [[1.0, 2.0, 40.0]],
    "offload_phases": [[0.0, 3.0, True]],
}


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps(SHORT_SCENARIO))
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_simulate_writes_reports_and_figure(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", "--scenario", str(scenario_file), "--out", str(out), "--trace"])
    assert code == 0
    assert "outputs written" in capsys.readouterr().out
    for name in ("responses.csv", "rolling.csv", "summary.json", "feed.json", "trace.csv"):
        assert (out / name).exists(), name
    assert (out / "response_time.png").stat().st_size > 0
    rows = read_csv(out / "responses.csv")
    assert rows[0] == ["completed_at_ms", "task_id", "class", "destination", "response_time_ms"]
    assert len(rows) > 10


def test_simulate_reparses_identically(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", str(scenario_file), "--out", str(out), "--no-plot"]) == 0
    rows = read_csv(out / "responses.csv")
    # strict comma-separated with header; re-serializing the parsed rows is lossless
    rebuilt = "\n".join(",".join(r) for r in rows) + "\n"
    assert rebuilt == (out / "responses.csv").read_text(encoding="utf-8")


def test_simulate_same_seed_identical_bytes(scenario_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code = main(
            ["simulate", "--scenario", str(scenario_file), "--seed", "9", "--out", str(out), "--no-plot"]
        )
        assert code == 0
    for name in ("responses.csv", "rolling.csv", "feed.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_traffic_outputs(tmp_path):
    out = tmp_path / "traffic"
    assert main(["traffic", "--out", str(out)]) == 0
    rows = read_csv(out / "traffic.csv")
    assert rows[0] == ["f", "traffic_kbits_per_s", "strategy", "ratio"]
    assert len(rows) == 1 + 121 * 3 * 3
    assert (out / "traffic.png").stat().st_size > 0
    by_key = {(r[2], r[3], int(r[0])): float(r[1]) for r in rows[1:]}
    assert by_key[("dynamic", "1.0", 40)] == 20.0
    assert by_key[("cloud_only", "1.0", 10)] == 200.0
    assert by_key[("no_offloading", "3.0", 117)] == 0.0


def test_histograms_outputs(scenario_file, tmp_path):
    out = tmp_path / "hist"
    assert main(["histograms", "--scenario", str(scenario_file), "--out", str(out)]) == 0
    rows = read_csv(out / "histograms.csv")
    assert rows[0] == ["hop_from", "hop_to", "bin_lower_ms", "count"]
    assert len(rows) > 1
    assert (out / "hop_delays.png").stat().st_size > 0
    # constant link delays: each hop occupies exactly one bin
    hops = {}
    for hop_from, hop_to, _bin_lower, _count in rows[1:]:
        hops.setdefault((hop_from, hop_to), 0)
        hops[(hop_from, hop_to)] += 1
    assert all(count == 1 for count in hops.values())


def test_unknown_scenario_fails_with_diagnostic(tmp_path, capsys):
    code = main(["simulate", "--scenario", "fig7", "--out", str(tmp_path / "x")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_invalid_scenario_file_fails(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"horizon_s": -1}))
    code = main(["simulate", "--scenario", str(bad), "--out", str(tmp_path / "y")])
    assert code == 1
    assert "horizon" in capsys.readouterr().err
