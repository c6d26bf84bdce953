"""Experiment driver: runs every matrix cell and writes CSV or JSON.

Output is byte-deterministic for a given config: cells are evaluated in
matrix order, floats are printed with a fixed format, and replication
seeds derive from the configured base seed.
"""
import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

from .engine import ScenarioConfig, run_replications
from .metrics import MetricsReport, aggregate_runs

log = logging.getLogger(__name__)

CSV_COLUMNS = ["n_nodes", "variant", "p_e", "p_cd", "ca_fraction",
               "seed_base", "runs", "throughput_mean", "throughput_std",
               "jfi_mean", "collision_frac_mean", "delay_mean",
               "inter_success_mean", "drop_frac_mean", "block_frac_mean",
               "avg_stage_mean", "config_hash"]


@dataclass
class CellResult:
    overrides: dict
    config: ScenarioConfig
    reports: Optional[List[MetricsReport]]
    error: Optional[str] = None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _variant_label(config: ScenarioConfig) -> str:
    labels = []
    for variant, _ in config.protocol_mix:
        if variant.label not in labels:
            labels.append(variant.label)
    return "|".join(labels)


def _ca_fraction(config: ScenarioConfig, overrides: dict) -> float:
    if "ca_fraction" in overrides:
        return float(overrides["ca_fraction"])
    for variant, frac in config.protocol_mix:
        if variant.label == "csma_ca":
            return frac
    return 0.0


def _run_cell(args) -> CellResult:
    overrides, config = args
    try:
        return CellResult(overrides, config, run_replications(config))
    except Exception as exc:            # surfaced as a failed cell
        log.exception("cell %s failed", overrides)
        return CellResult(overrides, config, None, error=str(exc))


def run_matrix(matrix, workers: int = 1) -> List[CellResult]:
    """Evaluate every cell; failures are recorded, not raised."""
    cells = list(matrix.cells())
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(cell) for cell in cells]


def _cell_row(result: CellResult) -> dict:
    cfg = result.config
    row = {
        "n_nodes": cfg.n_nodes,
        "variant": _variant_label(cfg),
        "p_e": cfg.p_e,
        "p_cd": cfg.p_cd,
        "ca_fraction": _ca_fraction(cfg, result.overrides),
        "seed_base": cfg.seed,
        "runs": cfg.runs,
        "config_hash": cfg.config_hash(),
    }
    if result.reports is None:
        for col in CSV_COLUMNS:
            row.setdefault(col, None)
        return row
    summary = aggregate_runs(result.reports)
    row.update({
        "throughput_mean": summary.mean["throughput"],
        "throughput_std": summary.std["throughput"],
        "jfi_mean": summary.mean["jfi"],
        "collision_frac_mean": summary.mean["collision_frac"],
        "delay_mean": summary.mean["delay"],
        "inter_success_mean": summary.mean["inter_success"],
        "drop_frac_mean": summary.mean["drop_frac"],
        "block_frac_mean": summary.mean["block_frac"],
        "avg_stage_mean": summary.mean["avg_stage"],
    })
    return row


def results_csv(results: List[CellResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for result in results:
        row = _cell_row(result)
        writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def _node_dict(node) -> dict:
    return {
        "node": node.node,
        "protocol": node.protocol,
        "delivered_bits": node.delivered_bits,
        "delivered_packets": node.delivered_packets,
        "attempts": node.attempts,
        "successes": node.successes,
        "collisions": node.collisions,
        "error_failures": node.error_failures,
        "drops": node.drops,
        "blocks": node.blocks,
        "arrived": node.arrived,
        "in_queue": node.in_queue,
        "mean_inter_success_us": node.mean_inter_success_us,
        "mean_contention_to_ack_us": node.mean_contention_to_ack_us,
        "mean_delay_us": node.mean_delay_us,
        "mean_backoff_stage": node.mean_backoff_stage,
    }


def results_json(results: List[CellResult]) -> str:
    cells = []
    for result in results:
        entry = {"overrides": result.overrides,
                 "summary": _cell_row(result),
                 "error": result.error}
        if result.reports is not None:
            entry["runs"] = [{
                "seed": r.seed,
                "duration_us": r.duration_us,
                "throughput_bps": r.throughput_bps,
                "jfi": r.jfi,
                "total_slots": r.total_slots,
                "empty_slots": r.empty_slots,
                "success_slots": r.success_slots,
                "collision_slots": r.collision_slots,
                "error_slots": r.error_slots,
                "last_collision_us": r.last_collision_us,
                "collision_fraction_timeseries":
                    [list(p) for p in r.collision_fraction_timeseries],
                "per_node": [_node_dict(n) for n in r.per_node],
            } for r in result.reports]
        cells.append(entry)
    return json.dumps({"cells": cells}, indent=2, sort_keys=True) + "\n"


def failed_cells(results: List[CellResult]) -> List[CellResult]:
    return [r for r in results if r.error is not None]
