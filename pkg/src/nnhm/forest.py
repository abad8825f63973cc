"""Deterministic SVG forest plots: estimates, shrinkage, mean and prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from .data import Dataset
from .engine import AnalysisReport
from .errors import DomainError

__all__ = ["StudyRow", "ForestPlotSpec", "forest_spec", "render_forest", "render_tau_density"]

_WIDTH = 660
_LABEL_X = 8
_PLOT_X0 = 190
_PLOT_X1 = 630
_ROW_H = 26
_TOP = 24


@dataclass(frozen=True)
class StudyRow:
    label: str
    point: float
    lo: float
    hi: float
    shrink_lo: float
    shrink_hi: float


@dataclass(frozen=True)
class ForestPlotSpec:
    """Row geometry and axis mode of a forest plot; rows keep input order."""

    rows: tuple[StudyRow, ...]
    axis: str = "identity"  # or "exp": same layout, ratio-scale tick labels

    def __post_init__(self):
        if self.axis not in ("identity", "exp"):
            raise DomainError(f"unknown axis transform {self.axis!r}")


def forest_spec(data: Dataset, report: AnalysisReport, axis: str = "identity") -> ForestPlotSpec:
    """Pair each study's quoted interval with its shrinkage interval."""
    z = float(special.ndtri((1.0 + report.level) / 2.0))
    rows = tuple(
        StudyRow(
            label=s.label,
            point=s.y,
            lo=s.y - z * s.sigma,
            hi=s.y + z * s.sigma,
            shrink_lo=shr.lo,
            shrink_hi=shr.hi,
        )
        for s, shr in zip(data.studies, report.shrinkage)
    )
    return ForestPlotSpec(rows=rows, axis=axis)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _identity_ticks(lo: float, hi: float) -> list[tuple[float, str]]:
    span = hi - lo
    raw_step = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw_step))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= 6.0:
            break
    first = math.ceil(lo / step)
    ticks = []
    k = first
    while k * step <= hi + 1e-12 * span:
        v = k * step
        label = f"{v:g}"
        if label == "-0":
            label = "0"
        ticks.append((v, label))
        k += 1
    return ticks


def _exp_ticks(lo: float, hi: float) -> list[tuple[float, str]]:
    # ratio-scale labels at powers of 2^m, thinned until at most 7 fit
    ln2 = math.log(2.0)
    first = last = 0
    for m in range(1, 64):
        step = m * ln2
        first = math.ceil(lo / step)
        last = math.floor(hi / step)
        if last - first + 1 <= 7:
            break
    if last < first:
        # range too narrow for power-of-two labels; label linear ticks as ratios
        return [(v, f"{math.exp(v):.3g}") for v, _ in _identity_ticks(lo, hi)]
    return [(k * step, f"{2.0 ** (k * m):g}") for k in range(first, last + 1)]


def render_forest(report: AnalysisReport, spec: ForestPlotSpec) -> str:
    """Render the plot as a standalone SVG document string."""
    values = [v for r in spec.rows for v in (r.lo, r.hi, r.shrink_lo, r.shrink_hi)]
    values += [report.mu.lo, report.mu.hi, report.prediction.lo, report.prediction.hi]
    vlo, vhi = min(values), max(values)
    pad = 0.05 * (vhi - vlo) if vhi > vlo else 1.0
    vlo, vhi = vlo - pad, vhi + pad

    def x(v: float) -> float:
        return _PLOT_X0 + (v - vlo) / (vhi - vlo) * (_PLOT_X1 - _PLOT_X0)

    n_rows = len(spec.rows) + 2
    axis_y = _TOP + n_rows * _ROW_H + 14
    height = axis_y + 58
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'viewBox="0 0 {_WIDTH} {height}">',
        '<style>text{font-family:sans-serif;font-size:12px}.lbl{font-size:12px}'
        ".foot{font-size:12px;font-style:italic}</style>",
        f'<rect x="0" y="0" width="{_WIDTH}" height="{height}" fill="white"/>',
    ]

    # reference line at 0 (ratio 1 on an exp axis)
    if vlo < 0 < vhi:
        out.append(
            f'<line x1="{_fmt(x(0))}" y1="{_TOP}" x2="{_fmt(x(0))}" y2="{axis_y}" '
            'stroke="#bbbbbb" stroke-dasharray="3,3"/>'
        )

    for i, row in enumerate(spec.rows):
        yc = _TOP + (i + 0.5) * _ROW_H
        out.append(f'<text class="lbl" x="{_LABEL_X}" y="{_fmt(yc + 4)}">{_escape(row.label)}</text>')
        out.append(
            f'<line x1="{_fmt(x(row.shrink_lo))}" y1="{_fmt(yc + 7)}" '
            f'x2="{_fmt(x(row.shrink_hi))}" y2="{_fmt(yc + 7)}" stroke="#999999" stroke-width="3"/>'
        )
        out.append(
            f'<line x1="{_fmt(x(row.lo))}" y1="{_fmt(yc)}" x2="{_fmt(x(row.hi))}" y2="{_fmt(yc)}" '
            'stroke="black" stroke-width="1.5"/>'
        )
        px = x(row.point)
        out.append(f'<rect x="{_fmt(px - 3)}" y="{_fmt(yc - 3)}" width="6" height="6" fill="black"/>')

    # overall mean as a diamond, prediction as an open bar
    yc = _TOP + (len(spec.rows) + 0.5) * _ROW_H
    out.append(f'<text class="lbl" x="{_LABEL_X}" y="{_fmt(yc + 4)}">mean</text>')
    out.append(
        f'<line x1="{_fmt(x(report.mu.lo))}" y1="{_fmt(yc)}" x2="{_fmt(x(report.mu.hi))}" '
        f'y2="{_fmt(yc)}" stroke="black" stroke-width="1.5"/>'
    )
    mx = x(report.mu.median)
    out.append(
        f'<polygon points="{_fmt(mx - 5)},{_fmt(yc)} {_fmt(mx)},{_fmt(yc - 5)} '
        f'{_fmt(mx + 5)},{_fmt(yc)} {_fmt(mx)},{_fmt(yc + 5)}" fill="black"/>'
    )
    yc = _TOP + (len(spec.rows) + 1.5) * _ROW_H
    out.append(f'<text class="lbl" x="{_LABEL_X}" y="{_fmt(yc + 4)}">prediction</text>')
    for vx in (report.prediction.lo, report.prediction.hi):
        out.append(
            f'<line x1="{_fmt(x(vx))}" y1="{_fmt(yc - 5)}" x2="{_fmt(x(vx))}" y2="{_fmt(yc + 5)}" '
            'stroke="black" stroke-width="1.5"/>'
        )
    out.append(
        f'<line x1="{_fmt(x(report.prediction.lo))}" y1="{_fmt(yc)}" '
        f'x2="{_fmt(x(report.prediction.hi))}" y2="{_fmt(yc)}" stroke="black" stroke-width="1.5"/>'
    )

    # axis
    out.append(
        f'<line x1="{_PLOT_X0}" y1="{axis_y}" x2="{_PLOT_X1}" y2="{axis_y}" stroke="black"/>'
    )
    ticks = _identity_ticks(vlo, vhi) if spec.axis == "identity" else _exp_ticks(vlo, vhi)
    for v, label in ticks:
        tx = x(v)
        out.append(
            f'<line x1="{_fmt(tx)}" y1="{axis_y}" x2="{_fmt(tx)}" y2="{axis_y + 5}" stroke="black"/>'
        )
        out.append(f'<text x="{_fmt(tx)}" y="{axis_y + 18}" text-anchor="middle">{label}</text>')

    tau = report.tau
    footer = f"tau: {tau.median:.2f} [{tau.lo:.2f}, {tau.hi:.2f}]"
    out.append(f'<text class="foot" x="{_LABEL_X}" y="{axis_y + 40}">{footer}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_tau_density(tau, density, ci: tuple[float, float] | None = None) -> str:
    """Simple line plot of the heterogeneity posterior density."""
    tau = list(tau)
    density = list(density)
    if len(tau) != len(density) or len(tau) < 2:
        raise DomainError("need matching tau/density arrays of length >= 2")
    width, height = 480, 280
    x0, x1, y0, y1 = 50, 460, 240, 20
    # trim the long flat tail so the bulk stays visible
    peak = max(density)
    last = max(i for i, d in enumerate(density) if d > 1e-4 * peak)
    tau, density = tau[: last + 1], density[: last + 1]
    tmax = tau[-1] if tau[-1] > 0 else 1.0

    def px(t):
        return x0 + t / tmax * (x1 - x0)

    def py(d):
        return y0 - d / peak * (y0 - y1)

    pts = " ".join(f"{_fmt(px(t))},{_fmt(py(d))}" for t, d in zip(tau, density))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<style>text{font-family:sans-serif;font-size:12px}</style>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    if ci is not None:
        for v in ci:
            if 0 <= v <= tmax:
                out.append(
                    f'<line x1="{_fmt(px(v))}" y1="{y0}" x2="{_fmt(px(v))}" y2="{y1}" '
                    'stroke="#bbbbbb" stroke-dasharray="3,3"/>'
                )
    out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        t = frac * tmax
        out.append(f'<line x1="{_fmt(px(t))}" y1="{y0}" x2="{_fmt(px(t))}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{y0 + 18}" text-anchor="middle">{t:.2g}</text>')
    out.append(f'<text x="{(x0 + x1) // 2}" y="{y0 + 34}" text-anchor="middle">heterogeneity</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
