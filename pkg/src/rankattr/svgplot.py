"""Waterfall SVG rendering without any plotting dependency."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .model import ExplanationVector

WIDTH = 680
ROW_HEIGHT = 26
MARGIN_X = 60
MARGIN_Y = 48
BAR_HEIGHT = 16

POSITIVE_COLOR = "#2e7d32"
NEGATIVE_COLOR = "#1565c0"
HELPFUL_COLOR = "#c62828"
HARMFUL_COLOR = "#1565c0"


def _bar_color(value: float, qoi_kind: str, display_sign: str) -> str:
    if display_sign == "presentation":
        # Red marks a feature that helps the item; for the rank QoI that is
        # a negative contribution (lower rank is better).
        helpful = value < 0 if qoi_kind.endswith("rank") else value > 0
        return HELPFUL_COLOR if helpful else HARMFUL_COLOR
    return POSITIVE_COLOR if value >= 0 else NEGATIVE_COLOR


def waterfall_svg(
    expl: ExplanationVector,
    feature_names: tuple[str, ...] | None = None,
    display_sign: str = "efficiency",
    title: str | None = None,
) -> str:
    """Render one explanation as a waterfall: baseline, one signed arrow per
    feature (largest magnitude first), and the reconstructed final value.

    Bar widths are proportional to |contribution| and the final marker sits
    exactly at the reconstruction abscissa.
    """
    contribs = expl.contributions
    d = len(contribs)
    names = feature_names or tuple(f"f{j}" for j in range(d))
    order = sorted(range(d), key=lambda j: (-abs(contribs[j]), j))

    positions = [expl.baseline]
    cum = expl.baseline
    for j in order:
        cum += contribs[j]
        positions.append(cum)
    lo = min(positions + [expl.reconstruction])
    hi = max(positions + [expl.reconstruction])
    span = hi - lo if hi > lo else 1.0
    lo -= 0.06 * span
    hi += 0.06 * span
    scale = (WIDTH - 2 * MARGIN_X) / (hi - lo)

    def x(value: float) -> float:
        return MARGIN_X + (value - lo) * scale

    height = MARGIN_Y * 2 + ROW_HEIGHT * (d + 1)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}">',
        f'<title>{escape(title or f"{expl.qoi.label()} explanation")}</title>',
        f'<line class="baseline" x1="{x(expl.baseline):.6f}" y1="{MARGIN_Y - 18}" '
        f'x2="{x(expl.baseline):.6f}" y2="{height - MARGIN_Y + 10}" '
        'stroke="#555" stroke-dasharray="4,3"/>',
        f'<text x="{x(expl.baseline):.6f}" y="{MARGIN_Y - 24}" font-size="12" '
        f'text-anchor="middle">baseline {expl.baseline:.4g}</text>',
    ]
    cum = expl.baseline
    for row, j in enumerate(order):
        value = contribs[j]
        start, end = cum, cum + value
        cum = end
        y = MARGIN_Y + row * ROW_HEIGHT
        x0, x1 = sorted((x(start), x(end)))
        color = _bar_color(value, expl.qoi.kind, display_sign)
        out.append(
            f'<rect class="bar" data-feature="{escape(names[j])}" '
            f'data-value="{value!r}" x="{x0:.6f}" y="{y}" '
            f'width="{x1 - x0:.6f}" height="{BAR_HEIGHT}" fill="{color}"/>'
        )
        out.append(
            f'<text x="{MARGIN_X - 52}" y="{y + 12}" font-size="12">'
            f"{escape(names[j])}</text>"
        )
        out.append(
            f'<text x="{x1 + 4:.6f}" y="{y + 12}" font-size="11">{value:+.4g}</text>'
        )
    y_final = MARGIN_Y + d * ROW_HEIGHT
    out.append(
        f'<line class="final" x1="{x(expl.reconstruction):.6f}" y1="{MARGIN_Y - 12}" '
        f'x2="{x(expl.reconstruction):.6f}" y2="{y_final + BAR_HEIGHT}" stroke="#000"/>'
    )
    out.append(
        f'<text x="{x(expl.reconstruction):.6f}" y="{y_final + BAR_HEIGHT + 14}" '
        f'font-size="12" text-anchor="middle">value {expl.reconstruction:.4g}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_waterfall_svg(
    expl: ExplanationVector,
    path: str | Path,
    feature_names: tuple[str, ...] | None = None,
    display_sign: str = "efficiency",
    title: str | None = None,
) -> None:
    Path(path).write_text(
        waterfall_svg(expl, feature_names, display_sign, title), encoding="utf-8"
    )
