"""Minimal SVG line charts, one small panel per metric series."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

_WIDTH = 640
_PANEL_HEIGHT = 90
_MARGIN_LEFT = 150
_MARGIN_RIGHT = 20
_PAD = 12


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_series_svg(
    series: Mapping[str, Sequence[tuple[int, float]]],
    path,
    metadata: Mapping[str, str] | None = None,
) -> None:
    """Render each named series of (step, value) points as its own panel."""
    named = [(name, list(points)) for name, points in series.items() if points]
    height = max(len(named), 1) * _PANEL_HEIGHT + 2 * _PAD
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'font-family="monospace" font-size="11">',
    ]
    for key, value in (metadata or {}).items():
        parts.append(f"<!-- {_escape(str(key))}: {_escape(str(value))} -->")
    parts.append(f'<rect width="{_WIDTH}" height="{height}" fill="white"/>')
    plot_width = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    for panel, (name, points) in enumerate(named):
        top = _PAD + panel * _PANEL_HEIGHT
        bottom = top + _PANEL_HEIGHT - 2 * _PAD
        steps = [step for step, _ in points]
        values = [value for _, value in points]
        step_low, step_high = min(steps), max(steps)
        value_low, value_high = min(values), max(values)
        step_span = (step_high - step_low) or 1
        value_span = (value_high - value_low) or 1.0

        coords = []
        for step, value in points:
            x = _MARGIN_LEFT + (step - step_low) / step_span * plot_width
            y = bottom - (value - value_low) / value_span * (bottom - top)
            coords.append(f"{x:.2f},{y:.2f}")
        parts.append(
            f'<text x="8" y="{(top + bottom) / 2:.2f}">{_escape(name)}</text>'
        )
        parts.append(
            f'<text x="8" y="{(top + bottom) / 2 + 14:.2f}" fill="gray">'
            f"[{value_low:.4g}, {value_high:.4g}]</text>"
        )
        parts.append(
            f'<rect x="{_MARGIN_LEFT}" y="{top}" width="{plot_width}" '
            f'height="{bottom - top}" fill="none" stroke="lightgray"/>'
        )
        if len(coords) == 1:
            x, y = coords[0].split(",")
            parts.append(f'<circle cx="{x}" cy="{y}" r="3" fill="steelblue"/>')
        else:
            parts.append(
                f'<polyline points="{" ".join(coords)}" fill="none" '
                f'stroke="steelblue" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
