"""Render mzbell CSV outputs into heatmap panels.

A figure is described by a JSON spec file:

    {
      "panels": [{"csv": "disp.csv", "title": "optional"}, ...],
      "layout": [rows, cols],
      "scale": "linear" | "log10",
      "output": "figure.png",
      "colormap": "viridis"
    }

Three CSV schemas are recognized (two integer index columns plus one value
column): (n, k, abs_value), (n, nprime, abs_value) and
(i, j, log10_abs_overlap).  Axis limits are fixed by the index ranges in
the data, cell-centered: an index range a..b maps to limits (a-0.5, b+0.5).
With ``scale: log10`` a value column that is already logarithmic is used
as is; linear values are floored and log-transformed.

Rendering is read-only over its inputs and deterministic: the same CSV and
spec give the same panel grid, axis ranges, and image size.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KNOWN_SCHEMAS = (
    ("n", "k", "abs_value"),
    ("n", "nprime", "abs_value"),
    ("i", "j", "log10_abs_overlap"),
)
LOG_VALUE_COLUMNS = {"log10_abs_overlap"}
DEFAULT_LOG_FLOOR = -30.0


class SchemaError(ValueError):
    """CSV columns do not match any known heatmap schema."""


@dataclass(frozen=True)
class Panel:
    csv: Path
    title: str = ""


@dataclass(frozen=True)
class FigureSpec:
    panels: tuple[Panel, ...]
    layout: tuple[int, int]
    scale: str
    output: Path
    colormap: str = "viridis"
    log_floor: float = DEFAULT_LOG_FLOOR

    @classmethod
    def from_file(cls, path) -> "FigureSpec":
        path = Path(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(doc, base=path.parent)

    @classmethod
    def from_dict(cls, doc: dict, base: Path = Path(".")) -> "FigureSpec":
        for key in ("panels", "layout", "scale", "output"):
            if key not in doc:
                raise ValueError(f"figure spec is missing the {key!r} field")
        if doc["scale"] not in ("linear", "log10"):
            raise ValueError(f"scale must be linear or log10, got {doc['scale']!r}")
        rows, cols = (int(v) for v in doc["layout"])
        panels = tuple(
            Panel(csv=base / p["csv"], title=p.get("title", ""))
            for p in doc["panels"]
        )
        if rows < 1 or cols < 1:
            raise ValueError("layout must be positive")
        if rows * cols != len(panels):
            raise ValueError(
                f"layout {rows}x{cols} holds {rows * cols} panels, spec lists {len(panels)}"
            )
        for panel in panels:
            if not panel.csv.exists():
                raise ValueError(f"input CSV does not exist: {panel.csv}")
        return cls(
            panels=panels,
            layout=(rows, cols),
            scale=doc["scale"],
            output=base / doc["output"],
            colormap=doc.get("colormap", "viridis"),
            log_floor=float(doc.get("log_floor", DEFAULT_LOG_FLOOR)),
        )


@dataclass(frozen=True)
class PanelData:
    row_name: str
    col_name: str
    value_name: str
    row_range: tuple[int, int]
    col_range: tuple[int, int]
    grid: np.ndarray


@dataclass(frozen=True)
class RenderResult:
    output: Path
    panels: tuple[dict, ...] = field(default_factory=tuple)


def load_panel_csv(path) -> PanelData:
    """Parse one heatmap CSV, skipping # comments, into a dense grid."""
    path = Path(path)
    columns = None
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        if columns is None:
            columns = tuple(name.strip() for name in line.split(","))
            continue
        rows.append(line.split(","))
    if columns is None:
        raise SchemaError(f"{path}: no header row found")
    if columns not in KNOWN_SCHEMAS:
        best = min(KNOWN_SCHEMAS, key=lambda s: len(set(s) - set(columns)))
        missing = [name for name in best if name not in columns]
        raise SchemaError(
            f"{path}: missing column(s) {missing} for schema {best}; found {list(columns)}"
        )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.array([[float(v) for v in row] for row in rows])
    r_idx = data[:, 0].astype(int)
    c_idx = data[:, 1].astype(int)
    r_range = (int(r_idx.min()), int(r_idx.max()))
    c_range = (int(c_idx.min()), int(c_idx.max()))
    grid = np.full((r_range[1] - r_range[0] + 1, c_range[1] - c_range[0] + 1), np.nan)
    grid[r_idx - r_range[0], c_idx - c_range[0]] = data[:, 2]
    return PanelData(
        row_name=columns[0], col_name=columns[1], value_name=columns[2],
        row_range=r_range, col_range=c_range, grid=grid,
    )


def _display_values(panel: PanelData, scale: str, floor: float) -> tuple[np.ndarray, str]:
    if scale == "linear" or panel.value_name in LOG_VALUE_COLUMNS:
        label = panel.value_name
        return panel.grid, label
    with np.errstate(divide="ignore"):
        shown = np.log10(np.maximum(panel.grid, 10.0**floor))
    return shown, f"log10({panel.value_name})"


def render_heatmap(spec) -> RenderResult:
    """Render every panel of the spec into one image file.

    Accepts a FigureSpec, a spec dict, or a path to a spec JSON file.
    Returns the output path and the per-panel axis ranges actually set.
    """
    if isinstance(spec, (str, Path)):
        spec = FigureSpec.from_file(spec)
    elif isinstance(spec, dict):
        spec = FigureSpec.from_dict(spec)
    rows, cols = spec.layout
    fig, axes = plt.subplots(
        rows, cols, figsize=(4.2 * cols, 3.6 * rows), squeeze=False
    )
    rendered = []
    for ax, panel in zip(axes.ravel(), spec.panels):
        data = load_panel_csv(panel.csv)
        shown, value_label = _display_values(data, spec.scale, spec.log_floor)
        extent = (
            data.col_range[0] - 0.5, data.col_range[1] + 0.5,
            data.row_range[0] - 0.5, data.row_range[1] + 0.5,
        )
        image = ax.imshow(
            shown, origin="lower", extent=extent, aspect="auto", cmap=spec.colormap
        )
        ax.set_xlabel(f"Fock index {data.col_name}")
        ax.set_ylabel(f"Fock index {data.row_name}")
        if panel.title:
            ax.set_title(panel.title)
        fig.colorbar(image, ax=ax, label=value_label)
        rendered.append({
            "csv": str(panel.csv),
            "xlim": tuple(float(v) for v in ax.get_xlim()),
            "ylim": tuple(float(v) for v in ax.get_ylim()),
            "col_range": data.col_range,
            "row_range": data.row_range,
            "value_label": value_label,
        })
    fig.tight_layout()
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return RenderResult(output=spec.output, panels=tuple(rendered))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: mzfig <figure-spec.json>", file=sys.stderr)
        return 2
    try:
        result = render_heatmap(argv[0])
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(result.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
