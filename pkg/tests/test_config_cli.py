import json

import pytest

from ecasim.cli import main
from ecasim.config import ConfigError, parse_config
from ecasim.runner import (CSV_COLUMNS, failed_cells, results_csv,
                           results_json, run_matrix)

MINIMAL = """
[scenario]
variant = csma_eca+hys+fs
"""

SWEEP = """
[scenario]
variant = csma_eca+hys+fs
duration_s = 0.2
runs = 2
seed = 3

[sweep]
n_nodes = 2,3,4,5,6
p_e = 0,0.1,0.2,0.3
ca_fraction = 0,0.5,1
"""


def test_defaults():
    m = parse_config(MINIMAL)
    cfg = m.base
    assert cfg.n_nodes == 2
    assert cfg.phy.sigma_e == 9 and cfg.phy.difs == 28 and cfg.phy.sifs == 10
    assert cfg.backoff.cw_min == 16 and cfg.backoff.m == 5
    assert cfg.backoff.retry_limit == 6
    assert cfg.queue_capacity == 1000
    assert cfg.traffic.saturated
    assert cfg.traffic.payload_bits == 8192
    assert cfg.duration_s == 100.0
    assert cfg.runs == 20
    assert m.variant.label == "csma_eca+hys+fs"


def test_rate_traffic_section():
    m = parse_config(MINIMAL + "\n[traffic]\nmode = rate\nrate_bps = 2e6\n")
    assert not m.base.traffic.saturated
    assert m.base.traffic.rate_bps == 2e6


@pytest.mark.parametrize("body,fragment", [
    ("[scenario]\np_e = 1.5\n", "p_e"),
    ("[scenario]\nwidth = 3\n", "width"),
    ("[radio]\nfoo = 1\n", "radio"),
    ("[traffic]\nmode = bursty\n", "bursty"),
    ("[scenario]\nvariant = csma_eca+warp\n", "warp"),
    ("[sweep]\nn_nodes = 2,x\n", "n_nodes"),
    ("[scenario]\nduration_s = 0\n", "duration"),
    ("[mac]\ncw_min = 12\n", "cw_min|power"),
])
def test_bad_configs_rejected_with_diagnostic(body, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(body)


def test_sweep_product():
    m = parse_config(SWEEP)
    assert m.cell_count() == 60
    cells = list(m.cells())
    assert len(cells) == 60
    overrides, cfg = cells[0]
    assert set(overrides) == {"n_nodes", "p_e", "ca_fraction"}
    assert cfg.duration_s == 0.2


def test_cell_override_application():
    m = parse_config(SWEEP)
    for overrides, cfg in m.cells():
        assert cfg.n_nodes == overrides["n_nodes"]
        assert cfg.p_e == overrides["p_e"]
        labels = {v.label for v, _ in cfg.protocol_mix}
        if overrides["ca_fraction"] == 0:
            assert labels == {"csma_eca+hys+fs"}
        elif overrides["ca_fraction"] == 1:
            assert labels == {"csma_ca"}
        else:
            assert labels == {"csma_ca", "csma_eca+hys+fs"}


SMALL = """
[scenario]
variant = csma_eca+hys+fs
duration_s = 0.2
runs = 2
seed = 3

[sweep]
n_nodes = 2,4
"""


def test_csv_schema_and_determinism():
    m = parse_config(SMALL)
    first = results_csv(run_matrix(m))
    second = results_csv(run_matrix(m))
    assert first == second
    lines = first.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    row = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert row["n_nodes"] == "2"
    assert row["variant"] == "csma_eca+hys+fs"
    assert float(row["throughput_mean"]) > 0
    assert len(row["config_hash"]) == 16


def test_json_output_carries_per_node_detail():
    m = parse_config(SMALL)
    payload = json.loads(results_json(run_matrix(m)))
    assert len(payload["cells"]) == 2
    cell = payload["cells"][0]
    assert cell["error"] is None
    assert len(cell["runs"]) == 2
    assert len(cell["runs"][0]["per_node"]) == 2
    assert cell["runs"][0]["per_node"][0]["delivered_packets"] > 0


def test_failed_cell_reported_not_raised(monkeypatch):
    import ecasim.runner as runner_mod
    m = parse_config(SMALL)

    def boom(config):
        raise RuntimeError("exploded")
    monkeypatch.setattr(runner_mod, "run_replications", boom)
    results = run_matrix(m)
    assert len(failed_cells(results)) == 2
    assert "exploded" in results[0].error
    assert results_csv(results).count("exploded") == 0   # empty cells, no junk


def test_cli_simulate_roundtrip(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(SMALL)
    out = tmp_path / "results.csv"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith(",".join(CSV_COLUMNS))
    # Byte-identical on rerun with the same config.
    out2 = tmp_path / "again.csv"
    main(["simulate", str(cfg), "--out", str(out2)])
    assert out2.read_bytes() == out.read_bytes()


def test_cli_overrides_and_json(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(SMALL)
    out = tmp_path / "results.json"
    assert main(["simulate", str(cfg), "--runs", "1", "--seed", "9",
                 "--out", str(out), "--format", "json"]) == 0
    payload = json.loads(out.read_text())
    assert payload["cells"][0]["summary"]["seed_base"] == 9
    assert payload["cells"][0]["summary"]["runs"] == 1


def test_cli_rejects_bad_config(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[scenario]\np_e = 2.0\n")
    assert main(["simulate", str(cfg)]) == 2
    assert "p_e" in capsys.readouterr().err


def test_cli_bounds_csv(tmp_path):
    out = tmp_path / "bounds.csv"
    assert main(["bounds", "--n-max", "8", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "n,lower_bps,upper_bps,max_agg_bps"
    assert len(lines) == 9
    n, lower, upper, max_agg = lines[-1].split(",")
    assert n == "8"
    assert float(lower) == pytest.approx(32.1255e6, rel=1e-3)
    assert float(lower) <= float(max_agg)


def test_cli_trace(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[scenario]\nvariant = csma_eca\nn_nodes = 2\n"
                   "duration_s = 0.01\n")
    out = tmp_path / "trace.txt"
    assert main(["simulate", str(cfg), "--trace", "--out", str(out)]) == 0
    text = out.read_text()
    assert "kind=" in text and "throughput_bps=" in text
