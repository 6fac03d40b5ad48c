"""Report files: report.txt (JSON, stable field order, no timing), timing.json,
probes.csv, SVG figures and PGM grids."""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..basin import write_pgm  # noqa: E402
from ..shadow import SCAN_CSV_COLUMNS, scan_rows, write_scan_csv  # noqa: E402
from .runner import Report  # noqa: E402

# fixed ids and no date stamp keep the SVG bytes reproducible
plt.rcParams["svg.hashsalt"] = "basinshadow"
SVG_META = {"Date": None}


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def report_text(r: Report) -> str:
    return json.dumps(r.to_dict(), indent=2, default=_json_default) + "\n"


def probe_rows(r: Report) -> list[dict]:
    if r.scan is not None:
        return scan_rows(r.scan, depth=r.scenario.K)
    depth = r.scenario.K if r.engine.startswith("skew") else r.scenario.Kmax
    rows = []
    for e in r.ladder:
        z, w = complex(e.probe[0]), complex(e.probe[1])
        rows.append({"probe_re": repr(z.real), "probe_im_z": repr(z.imag), "probe_re_w": repr(w.real),
                     "probe_im_w": repr(w.imag), "boundary_dist": repr(math.nan), "depth": depth,
                     "lower": repr(e.bound.lower), "upper": repr(e.bound.upper),
                     "certificate": e.bound.certificate.value})
    return rows


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return path


def _heatmap(ax, grid, title: str):
    x0, x1, y0, y1 = grid.box
    img = np.where(grid.membership, grid.boundary_dist, np.nan)
    im = ax.imshow(img, origin="lower", extent=(x0, x1, y0, y1), cmap="viridis", interpolation="nearest")
    ax.set_title(title)
    ax.set_aspect("equal")
    return im


def plot_basin(r: Report, key: str, path: Path) -> Path:
    grid = r.grids[key]
    fig, ax = plt.subplots(figsize=(6, 5.4))
    im = _heatmap(ax, grid, f"{r.scenario.name}: {key} (shaded by boundary distance)")
    fig.colorbar(im, ax=ax, shrink=0.8)
    tree = r.overlay.get("tree")
    if tree is not None and key == "P":
        for k in range(r.scenario.K + 1):
            pts = tree.at_depth(k)
            ax.plot(pts.real, pts.imag, linestyle="none", marker=".", markersize=2, color=plt.cm.autumn(k / 12),
                    gid=f"tree-depth-{k}")
    if r.scan is not None and key == "P":
        pr = np.array([p[0] for p in r.scan.probes])
        ax.plot(pr.real, pr.imag, linestyle="none", marker="x", markersize=3, color="white", gid="probes")
    if key == "slice_z0":
        ws = np.array([complex(e.probe[1]) for e in r.ladder])
        ax.plot(ws.real, ws.imag, linestyle="none", marker="x", color="red", gid="probes")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    return _save(fig, path)


def plot_ladder(r: Report, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    x = [-math.log10(e.delta) for e in r.ladder]
    y = [e.bound.lower for e in r.ladder]
    ax.plot(x, y, marker="o", gid="certificates")
    for c in r.scenario.thresholds:
        ax.axhline(c, color="grey", linestyle="--", linewidth=0.8)
    ax.set_xlabel("-log10(delta)")
    ax.set_ylabel("certified lower bound")
    ax.set_title(f"{r.scenario.name}: {r.verdict}")
    return _save(fig, path)


def plot_leaves(r: Report, path: Path) -> Path:
    """Real sections w = f_n(x) of the transported graphs and the limit leaf, with tree nodes."""
    fig, ax = plt.subplots(figsize=(6, 4))
    fam, leaf = r.overlay.get("family"), r.overlay.get("leaf")
    src = fam if fam is not None else leaf
    x = np.linspace(-src.radius, src.radius, 201).astype(complex)
    if fam is not None:
        for n in range(fam.generation + 1):
            ax.plot(x.real, fam.evaluate(x, n).real, color=plt.cm.Blues(0.3 + 0.7 * n / max(fam.generation, 1)),
                    linewidth=0.8, gid=f"generation-{n}")
    ax.plot(x.real, leaf.evaluate(x).real, color="black", linewidth=1.5, gid="limit-leaf")
    tree = r.overlay.get("tree2d")
    if tree is not None:
        for k in range(int(tree.depths.max()) + 1):
            pts = tree.points[tree.depths == k]
            ax.plot(pts[:, 0].real, pts[:, 1].real, linestyle="none", marker=".", markersize=2,
                    color=plt.cm.autumn(k / 8), gid=f"tree-depth-{k}")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Re w")
    ax.set_title(f"{r.scenario.name}: leaves over the real axis")
    return _save(fig, path)


def emit_report(r: Report, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    p = out / "report.txt"
    p.write_text(report_text(r))
    files.append(p)
    p = out / "timing.json"
    p.write_text(json.dumps({k: round(v, 6) for k, v in r.timing.items()}, indent=2) + "\n")
    files.append(p)
    files.append(write_scan_csv(probe_rows(r), out / "probes.csv"))
    for key in sorted(r.grids):
        files.append(write_pgm(r.grids[key], out / f"grid_{key}.pgm"))
        files.append(plot_basin(r, key, out / f"basin_{key}.svg"))
    if r.ladder:
        files.append(plot_ladder(r, out / "certificates.svg"))
    if r.overlay.get("leaf") is not None:
        files.append(plot_leaves(r, out / "leaves.svg"))
    return files


__all__ = ["SCAN_CSV_COLUMNS", "emit_report", "probe_rows", "report_text"]
