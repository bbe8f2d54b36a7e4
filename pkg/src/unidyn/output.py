"""CSV serialization and static SVG renderings."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    """17 significant digits for floats (round-trips exactly); text as is."""
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def config_comment(resolved: dict) -> str:
    return "# config: " + json.dumps(resolved, sort_keys=True, separators=(",", ":"))


def write_csv(path, header, rows, resolved: dict) -> Path:
    """Comment line with the resolved config, header row, then data; LF endings."""
    path = Path(path)
    lines = [config_comment(resolved), ",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: ``(config, header, rows)`` with floats parsed."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    config = json.loads(lines[0][len("# config: "):])
    header = lines[1].split(",")
    rows = []
    for line in lines[2:]:
        out = []
        for field in line.split(","):
            try:
                out.append(float(field))
            except ValueError:
                out.append(field)
        rows.append(out)
    return config, header, rows


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "unidyn"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return Path(path)


def plot_stability_map(smap, path):
    plt = _pyplot()
    colors = {"NeutrallyStable": "#2ca02c", "Unstable": "#d62728", "Infeasible": "#7f7f7f", "Undefined": "#ffffff"}
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, color in colors.items():
        sel = smap.label == label
        if np.any(sel):
            ax.scatter(np.degrees(smap.theta[sel]), smap.psi_dot[sel], s=4, c=color, label=label, marker="s",
                       edgecolors="none")
    ax.set_xlabel("tilt [deg]")
    ax.set_ylabel("yaw rate [rad/s]")
    ax.set_title(f"stability, {smap.model}")
    ax.legend(loc="upper right", fontsize=7)
    return _save(fig, path)


def plot_root_locus(locus, path):
    plt = _pyplot()
    fig, (ax_re, ax_im) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    models = list(dict.fromkeys(locus.model))
    model_arr = np.array(locus.model)
    for name in models:
        for b in sorted(set(locus.branch[model_arr == name])):
            sel = (model_arr == name) & (locus.branch == b)
            style = "-" if name == "wheel" else "--"
            ax_re.plot(locus.phi_dot[sel], locus.root[sel].real, style, label=f"{name} l{b}")
            ax_im.plot(locus.phi_dot[sel], locus.root[sel].imag, style)
    ax_re.set_ylabel("Re [1/s]")
    ax_im.set_ylabel("Im [1/s]")
    ax_im.set_xlabel("pitch rate [rad/s]")
    ax_re.legend(fontsize=6, ncol=2)
    return _save(fig, path)


def plot_maneuver(trace, path, reference_path=None):
    plt = _pyplot()
    fig, axes = plt.subplots(5, 1, figsize=(6, 10))
    t = trace.t
    for ax, name, unit in zip(axes[:3], ("theta", "r", "psi"), ("rad", "m", "rad")):
        ax.plot(t, trace.column(name))
        ax.set_ylabel(f"{name} [{unit}]")
    axes[3].plot(t, trace.u)
    axes[3].set_ylabel("u [N]")
    axes[3].set_xlabel("t [s]")
    axes[4].plot(trace.column("xG"), trace.column("yG"), label="centre")
    if reference_path is not None:
        axes[4].plot(*reference_path, "k-.", label="reference")
    axes[4].set_xlabel("x [m]")
    axes[4].set_ylabel("y [m]")
    axes[4].set_aspect("equal", adjustable="datalim")
    axes[4].legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)
