"""Dependency-free SVG rendering of the with/without-recognition comparison.

Hand-built markup keeps the output byte-deterministic for a given report.
"""

from __future__ import annotations

from .fusion import FlightState

_PANEL_W = 430
_PANEL_H = 230
_MARGIN = 52
_BAR_W = 26
_COLORS = {"with": "#2c7fb8", "without": "#bdbdbd"}

STATE_TITLES = {
    "A": "climb",
    "B": "level",
    "C": "turn",
    "D": "circle",
    "E": "descent",
}


def comparison_series_rows(report: dict) -> list[tuple[str, str, str, float, int]]:
    """Flatten the report into (method, recognition, state, mu, n) rows."""
    rows = []
    for method in sorted(report["prediction"]["methods"]):
        arms = report["prediction"]["methods"][method]
        for arm in ("with", "without"):
            entry = arms[arm]
            for state in [s.value for s in FlightState]:
                cell = entry["per_state"].get(state)
                if cell is None:
                    continue
                rows.append((method, arm, state, cell["mu"], cell["n"]))
            rows.append((method, arm, "overall", entry["overall_mu"], 0))
    return rows


def _bars(panel: dict, x0: float, y0: float) -> list[str]:
    categories = [s.value for s in FlightState] + ["overall"]
    values = {}
    for arm in ("with", "without"):
        entry = panel[arm]
        for state in categories[:-1]:
            cell = entry["per_state"].get(state)
            values[(arm, state)] = cell["mu"] if cell else 0.0
        values[(arm, "overall")] = entry["overall_mu"]
    peak = max(values.values()) or 1.0
    chart_h = _PANEL_H - 2 * _MARGIN + 10
    parts = []
    for i, state in enumerate(categories):
        cx = x0 + _MARGIN + i * ((_PANEL_W - 2 * _MARGIN) / len(categories))
        for j, arm in enumerate(("with", "without")):
            mu = values[(arm, state)]
            h = chart_h * mu / peak
            bx = cx + j * (_BAR_W + 3)
            by = y0 + _PANEL_H - _MARGIN - h
            parts.append(
                f'<rect x="{bx:.1f}" y="{by:.1f}" width="{_BAR_W}" '
                f'height="{h:.1f}" fill="{_COLORS[arm]}"/>'
            )
            parts.append(
                f'<text x="{bx + _BAR_W / 2:.1f}" y="{by - 3:.1f}" '
                f'font-size="8" text-anchor="middle">{mu:.2f}</text>'
            )
        label = STATE_TITLES.get(state, state)
        parts.append(
            f'<text x="{cx + _BAR_W:.1f}" y="{y0 + _PANEL_H - _MARGIN + 14:.1f}" '
            f'font-size="10" text-anchor="middle">{label}</text>'
        )
    return parts


def render_comparison_svg(report: dict) -> str:
    """Grouped bars of mean error per state, one panel per method."""
    methods = sorted(report["prediction"]["methods"])
    height = _PANEL_H * len(methods)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PANEL_W}" '
        f'height="{height}" font-family="sans-serif">'
    ]
    for row, method in enumerate(methods):
        y0 = row * _PANEL_H
        parts.append(
            f'<text x="{_MARGIN}" y="{y0 + 18}" font-size="12" font-weight="bold">'
            f"{method}: mean error by flight state (m)</text>"
        )
        parts.append(
            f'<text x="{_PANEL_W - _MARGIN - 110}" y="{y0 + 18}" font-size="9">'
            f'<tspan fill="{_COLORS["with"]}">with recognition</tspan> / '
            f'<tspan fill="#777777">without</tspan></text>'
        )
        parts.extend(_bars(report["prediction"]["methods"][method], 0, y0))
        axis_y = y0 + _PANEL_H - _MARGIN
        parts.append(
            f'<line x1="{_MARGIN}" y1="{axis_y}" x2="{_PANEL_W - 20}" y2="{axis_y}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
