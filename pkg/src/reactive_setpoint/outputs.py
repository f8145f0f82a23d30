"""Trace, metrics and plot files for a finished run."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np
import yaml

from .simulate import COLUMNS, ScenarioTrace

# Figure panels and the trace columns drawn in each
PANELS = (
    ("speed and DC link", ("w", "w_ref", "v_dc")),
    ("torques", ("tau_m", "tau_l")),
    ("modulation", ("m_norm", "m_raw_norm", "m_limit", "v_g_norm")),
    ("current", ("i_norm", "i_star_norm", "i_g_max")),
    ("reactive power", ("Q_measured", "Q_ref", "Q_star")),
)


class OutputError(OSError):
    """Failure writing an output file; the message carries the path."""


def header() -> list[str]:
    return [f"{name} [{unit}]" for name, unit in COLUMNS]


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return repr(float(x))


def trace_csv(trace: ScenarioTrace) -> str:
    """Render the trace as CSV text.  Floats use the shortest round-tripping repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header())
    cols = [trace[name] for name, _ in COLUMNS]
    for k in range(len(trace)):
        w.writerow([_cell(c[k]) for c in cols])
    return buf.getvalue()


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as float arrays, keyed by bare column name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = [h.split(" [")[0] for h in rows[0]]
    data = np.array(rows[1:], dtype=float).reshape(-1, len(names))
    return {n: data[:, j] for j, n in enumerate(names)}


def plain(obj):
    """Convert numpy scalars and containers to YAML-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_outputs(trace, metrics: dict, cfg, out_dir=None, stem: str | None = None, plot: bool = False,
                  convergence: dict | None = None) -> dict:
    """Write ``<stem>.csv``, ``<stem>_metrics.yaml`` and optionally ``<stem>.svg``.

    Returns the written paths by kind.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    stem = stem or f"{cfg.scenario.kind}_{cfg.outer_mode}"
    paths = {"trace": out / f"{stem}.csv", "metrics": out / f"{stem}_metrics.yaml"}
    _write(paths["trace"], trace_csv(trace))
    doc = {"metrics": plain(metrics)}
    if convergence is not None:
        doc["convergence"] = plain(convergence)
    _write(paths["metrics"], yaml.safe_dump(doc, sort_keys=False))
    if plot:
        paths["plot"] = out / f"{stem}.svg"
        plot_trace(trace, paths["plot"], title=stem, v_dc_ref=cfg.v_dc_ref)
    return paths


def _series(trace, name: str, v_dc_ref: float):
    # v_dc is drawn in speed units and ||v_g|| relative to the DC bus, as in the
    # usual drive plots; everything else is plotted as recorded
    if name == "v_dc":
        return trace["v_dc"] * trace["w_ref"] / v_dc_ref, "v_dc (speed units)"
    if name == "v_g_norm":
        return trace["v_g_norm"] / trace["v_dc"], "v_g_norm / v_dc"
    return trace[name], name


def plot_trace(trace, path, title: str = "", v_dc_ref: float = 5000.0) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = trace["t"]
    with matplotlib.rc_context({"svg.fonttype": "none", "svg.hashsalt": "trace"}):
        fig, axes = plt.subplots(len(PANELS), 1, sharex=True, figsize=(8, 11))
        for ax, (label, names) in zip(axes, PANELS):
            for name in names:
                y, lab = _series(trace, name, v_dc_ref)
                ax.plot(t, y, label=lab, lw=0.9, gid=name)
            ax.set_ylabel(label)
            ax.legend(loc="upper right", fontsize=7)
            ax.grid(alpha=0.3)
        axes[-1].set_xlabel("t [s]")
        if title:
            axes[0].set_title(title)
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
        finally:
            plt.close(fig)


def write_pqmap(rows, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["P [W]", "Q_lo [var]", "Q_hi [var]", "current_feasible [bool]", "modulation_feasible [bool]"])
    for r in rows:
        w.writerow([repr(r.P), repr(r.Q_lo), repr(r.Q_hi), _cell(r.current_feasible), _cell(r.modulation_feasible)])
    _write(Path(path), buf.getvalue())
