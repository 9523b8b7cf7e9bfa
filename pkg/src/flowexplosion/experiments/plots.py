"""Gnuplot scripts for the curve tables listed in a run manifest."""

from __future__ import annotations

from pathlib import Path

from .. import __version__


def plot_script(csv_name: str, columns: list, plot: dict) -> str:
    stem = Path(csv_name).stem
    x = columns.index(plot["x"]) + 1
    lines = [
        f"# gnuplot script written by flowexplosion {__version__}; data: {csv_name}",
        'set datafile separator ","',
        "set datafile commentschars \"#\"",
        "set key autotitle columnhead",
        "set terminal pngcairo size 800,600",
        f'set output "{stem}.png"',
        f'set xlabel "{plot["x"]}"',
        f'set ylabel "{plot.get("ylabel", "")}"',
    ]
    if plot.get("logx"):
        lines.append("set logscale x")
    if plot.get("logy"):
        lines.append("set logscale y")
    curves = []
    for k, name in enumerate(plot["y"]):
        style = "linespoints" + (" dashtype 4" if k == 0 and len(plot["y"]) > 1 else "")
        curves.append(f'"{csv_name}" using {x}:{columns.index(name) + 1} with {style} title "{name}"')
    lines.append("plot " + ", \\\n     ".join(curves))
    return "\n".join(lines) + "\n"


def emit_plots(manifest) -> list[str]:
    """Write one ``.gp`` script per curve CSV in the manifest; returns their names.

    Scripts depend only on the manifest's file entries, so re-running
    rewrites identical bytes.
    """
    out = Path(manifest.out_dir)
    written = []
    for f in manifest.files:
        plot = f.get("plot")
        if not plot:
            continue
        name = Path(f["path"]).stem + ".gp"
        (out / name).write_text(plot_script(f["path"], f["columns"], plot))
        written.append(name)
    return written
