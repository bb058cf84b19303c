"""Run an experiment and write its tables as CSV files."""

import csv
import logging
import os

from .experiments import EXPERIMENTS, Table

log = logging.getLogger(__name__)


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _cell(v.item())
    return v


def write_table(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.header)
        for row in table.rows:
            w.writerow([_cell(v) for v in row])


def output_paths(cfg, out_dir):
    return {
        name: os.path.join(out_dir, f"{cfg.experiment}.{name}.csv" if name else f"{cfg.experiment}.csv")
        for name in ("", "timing")
    }


def run(cfg, out_dir):
    """Write ``<experiment>.csv`` (and ``<experiment>.timing.csv`` for timed runs) under ``out_dir``.

    Returns ``(paths, partial)`` where ``partial`` flags any row whose status
    is not ``ok``. Wall-clock timings live in their own file so the data file
    is byte-identical across reruns.
    """
    tables = EXPERIMENTS[cfg.experiment](cfg)
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name, table in tables.items():
        path = output_paths(cfg, out_dir)[name]
        write_table(path, table)
        paths[name] = path
        log.info("wrote %d rows to %s", len(table.rows), path)
    data = tables[""]
    partial = False
    if "status" in data.header:
        col = data.header.index("status")
        partial = any(row[col] != "ok" for row in data.rows)
    return paths, partial


__all__ = ["EXPERIMENTS", "Table", "run", "write_table"]
