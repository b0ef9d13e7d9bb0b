"""Deterministic SVG heatmaps of value functions over grid layouts."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .world import DomainError

WALL = "#303030"
EMPTY = "#d8d8d8"
MID = (247, 247, 247)
LOW = (33, 102, 172)
HIGH = (178, 24, 43)


def _lerp(a, b, t):
    return tuple(int(round(x + (y - x) * t)) for x, y in zip(a, b))


def value_colors(values, lo: float | None = None, hi: float | None = None) -> list:
    """Map values to RGB on a blue-white-red scale (low blue, high red).

    A degenerate range maps every value to the mid-scale colour.
    """
    values = np.asarray(values, dtype=float)
    lo = float(values.min()) if lo is None else lo
    hi = float(values.max()) if hi is None else hi
    if not hi > lo:
        return [MID] * values.size
    out = []
    for v in values.ravel():
        t = min(max((v - lo) / (hi - lo), 0.0), 1.0)
        out.append(_lerp(LOW, MID, 2 * t) if t < 0.5 else _lerp(MID, HIGH, 2 * t - 1))
    return out


def _hex(rgb) -> str:
    return "#%02x%02x%02x" % rgb


def _svg(width, height, body) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _rect(x, y, size, fill) -> str:
    return f'<rect x="{x}" y="{y}" width="{size}" height="{size}" fill="{fill}"/>'


def _grid_cells(layout, cells, colours, x0, y0, size):
    body = []
    lookup = dict(zip(cells, colours))
    for r in range(layout.height):
        for c in range(layout.width):
            fill = WALL if (r, c) in layout.walls else _hex(lookup[(r, c)])
            body.append(_rect(x0 + c * size, y0 + r * size, size, fill))
    return body


def render_heatmap(values, env, path, goals=None, cell: int | None = None) -> Path:
    """Write a heatmap SVG.

    ``values`` is either one value per state (shape (S,)), drawn as a single
    grid, or a per-goal table of shape (S, G) together with ``goals``; each
    goal's value map is then drawn as a tile at that goal's grid position.
    """
    values = np.asarray(values, dtype=float)
    layout, cells = env.layout, list(env.cells)
    S = len(cells)
    if values.shape[0] != S:
        raise DomainError(f"{values.shape[0]} values for {S} free cells")
    if values.ndim == 1:
        size = cell or 20
        body = _grid_cells(layout, cells, value_colors(values), 0, 0, size)
        svg = _svg(layout.width * size, layout.height * size, body)
    else:
        if goals is None or len(goals) != values.shape[1]:
            raise DomainError("tiled heatmap needs one goal id per value column")
        size = cell or 4
        lo, hi = float(values.min()), float(values.max())
        tile = layout.height * size
        tile_w = layout.width * size
        body = []
        tiles = {cells[int(g)]: j for j, g in enumerate(goals)}
        for r in range(layout.height):
            for c in range(layout.width):
                x0, y0 = c * tile_w, r * tile
                if (r, c) in tiles:
                    colours = value_colors(values[:, tiles[(r, c)]], lo, hi)
                    body += _grid_cells(layout, cells, colours, x0, y0, size)
                else:
                    fill = WALL if (r, c) in layout.walls else EMPTY
                    body.append(f'<rect x="{x0}" y="{y0}" width="{tile_w}" height="{tile}" fill="{fill}"/>')
        svg = _svg(layout.width * tile_w, layout.height * tile, body)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path


def render_transitions(env, model, probe_states, path, size: int = 20) -> Path:
    """Arrows from each probe state to its inferred successors (red when wrong)."""
    layout, cells = env.layout, env.cells
    body = _grid_cells(layout, cells, [(255, 255, 255)] * len(cells), 0, 0, size)
    half = size / 2
    for s in probe_states:
        r, c = cells[s]
        for a in range(model.successor.shape[1]):
            t = int(model.successor[s, a])
            if t < 0:
                continue
            ok = model.correct is None or bool(model.correct[s, a])
            colour = "#000000" if ok else "#d7191c"
            tr, tc = cells[t]
            x1, y1 = c * size + half, r * size + half
            x2, y2 = tc * size + half, tr * size + half
            if t == s:
                body.append(f'<circle cx="{x1}" cy="{y1}" r="{size / 4}" fill="none" stroke="{colour}"/>')
            else:
                body.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{colour}" stroke-width="2"/>')
                body.append(f'<circle cx="{x2}" cy="{y2}" r="{size / 8}" fill="{colour}"/>')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_svg(layout.width * size, layout.height * size, body))
    return path
