"""Output helpers: CSV tables, run artifacts, SVG plots and manifests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..gridfield import Field, write_field_csv  # noqa: E402

# fixed salt and no date stamp keep the SVG bytes reproducible
plt.rcParams["svg.hashsalt"] = "fracstefan"


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def snapshot_name(t: float) -> str:
    return f"snap_t{t:g}.csv"


def write_snapshots(out: Path, series) -> list[dict]:
    rows = []
    for t_req, t_act, vals in series.snapshots():
        name = snapshot_name(t_req)
        write_field_csv(out / name, Field(series.grid, vals, series.farfield), series.graph)
        rows.append({"requested": t_req, "actual": t_act, "file": name})
    return rows


def write_monitors(path, series) -> None:
    log = series.monitor_log
    cols = [k for k in ("t", "sup", "inf", "mass", "outflow") if k in log]
    write_table(path, cols, zip(*(log[c] for c in cols)))


def git_blob_hash(path) -> str:
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_manifest(out: Path, command: str, inputs: dict) -> dict:
    """List every file in ``out`` with its git-style content hash."""
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest = {"command": command, "inputs": inputs,
                "outputs": {str(p.relative_to(out)): git_blob_hash(p) for p in files}}
    write_json(out / "manifest.json", manifest)
    return manifest


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_snapshots(path, series, title: str = "") -> None:
    """Enthalpy and temperature for every stored snapshot on shared axes."""
    fig, (ax_h, ax_u) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    x = series.grid.nodes
    for t_req, t_act, vals in series.snapshots():
        ax_h.plot(x, vals, lw=1, label=f"t={t_req:g}")
        ax_u.plot(x, series.graph(vals), lw=1)
    ax_h.set_ylabel("h")
    ax_u.set_ylabel("u")
    ax_u.set_xlabel("x")
    ax_h.set_xlim(x[0], x[-1])
    if series.requested and len(series.requested) <= 12:
        ax_h.legend(fontsize=7)
    if title:
        ax_h.set_title(title)
    _save(fig, path)


def plot_profiles(path, profiles: dict, xlim=None) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, p in profiles.items():
        ax.plot(p.xi, p.H, lw=1, label=label)
    ax.set_xlabel("xi")
    ax.set_ylabel("H")
    if xlim is not None:
        ax.set_xlim(*xlim)
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_history(path, t, curves: dict, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, y in curves.items():
        ax.plot(t, y, lw=1, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    _save(fig, path)
