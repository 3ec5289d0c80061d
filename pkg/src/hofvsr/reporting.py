"""Analysis artifacts from trial logs: top-k tables, convergence curves,
cost/performance scatter data with Pareto fronts, and budget accounting.

Every export is a pure function of its input logs, so regenerated files are
byte-identical.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .cost import hofvsr_cost
from .space import Configuration
from .trial_log import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    TrialLog,
    TrialRecord,
    completed_trials,
)


@dataclass(frozen=True)
class ScatterPoint:
    config: Configuration
    objective: float
    params: int
    flops: int
    strategy: str


@dataclass(frozen=True)
class BudgetRow:
    strategy: str
    networks: int
    epochs: int
    total_time_s: float

    @property
    def formatted_time(self) -> str:
        minutes = int(self.total_time_s // 60)
        return f"{minutes // 60}h {minutes % 60:02d}min"


def top_k(log: TrialLog, k: int) -> list[TrialRecord]:
    """The k completed trials with lowest objective, ascending; ties by trial_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    completed = completed_trials(log)
    if not completed:
        raise ValueError("log has no completed trials")
    ranked = sorted(completed, key=lambda t: (t.objective, t.trial_id))
    return ranked[:k]


def _dominates(p: ScatterPoint, q: ScatterPoint) -> bool:
    pa = (p.objective, p.params, p.flops)
    qa = (q.objective, q.params, q.flops)
    return all(x <= y for x, y in zip(pa, qa)) and any(
        x < y for x, y in zip(pa, qa)
    )


def pareto_front(points: list[ScatterPoint]) -> list[ScatterPoint]:
    """Non-dominated subset under (objective, params, flops) minimization.

    Points are swept in ascending lexicographic order, so each point only has
    to be checked against the front built so far; duplicates of a front point
    all survive (equal points never dominate each other).
    """
    if not points:
        raise ValueError("pareto_front needs at least one point")
    order = sorted(
        range(len(points)),
        key=lambda i: (points[i].objective, points[i].params, points[i].flops),
    )
    front_idx: list[int] = []
    for i in order:
        if not any(_dominates(points[j], points[i]) for j in front_idx):
            front_idx.append(i)
    keep = set(front_idx)
    return [p for i, p in enumerate(points) if i in keep]


def convergence_csv(log: TrialLog) -> str:
    """CSV of every epoch report, ordered as logged."""
    records = list(log.trials) + ([log.partial] if log.partial else [])
    rows = [r for t in records for r in t.epoch_reports]
    if not rows:
        raise ValueError("log has no epoch reports")
    out = io.StringIO()
    out.write("trial_id,epoch,eval_loss\r\n")
    for r in rows:
        out.write(f"{r.trial_id},{r.epoch},{r.eval_loss!r}\r\n")
    return out.getvalue()


def scatter_points(
    logs: list[TrialLog],
    k: int = 5,
    include_all: bool = False,
    scale: int = 4,
    in_shape: tuple[int, int, int, int] = (36, 36, 1, 3),
) -> list[ScatterPoint]:
    """Cost/quality points for the top-k (or all completed) trials per log."""
    if not logs:
        raise ValueError("no logs given")
    points = []
    for log in logs:
        strategy = str(log.header.get("sampler", "unknown"))
        trials = completed_trials(log) if include_all else top_k(log, k)
        for trial in trials:
            cfg = trial.config.as_dict()
            report = hofvsr_cost(
                cfg["res_channels"],
                cfg["n_res"],
                cfg["up_channels"],
                scale=scale,
                in_shape=in_shape,
            )
            points.append(
                ScatterPoint(
                    config=trial.config,
                    objective=trial.objective,
                    params=report.total_params,
                    flops=report.total_flops,
                    strategy=strategy,
                )
            )
    return points


def scatter_csv(points: list[ScatterPoint]) -> str:
    out = io.StringIO()
    out.write("strategy,res_channels,n_res,up_channels,objective,params_m,gflops\r\n")
    for p in points:
        cfg = p.config.as_dict()
        out.write(
            f"{p.strategy},{cfg['res_channels']},{cfg['n_res']},{cfg['up_channels']},"
            f"{p.objective!r},{p.params / 1e6!r},{p.flops / 1e9!r}\r\n"
        )
    return out.getvalue()


def budget_table(logs: list[TrialLog]) -> list[BudgetRow]:
    """One Table-2-style row per log: networks, epochs, summed durations."""
    rows = []
    for log in logs:
        networks = sum(
            1 for t in log.trials if t.status in (STATUS_COMPLETED, STATUS_FAILED)
        )
        total = sum(
            r.duration_s for t in log.trials for r in t.epoch_reports
        )
        rows.append(
            BudgetRow(
                strategy=str(log.header.get("sampler", "unknown")),
                networks=networks,
                epochs=int(log.header.get("budget", {}).get("epochs_per_trial", 0)),
                total_time_s=total,
            )
        )
    return rows


def budget_csv(rows: list[BudgetRow]) -> str:
    out = io.StringIO()
    out.write("strategy,networks,epochs,time\r\n")
    for r in rows:
        out.write(f"{r.strategy},{r.networks},{r.epochs},{r.formatted_time}\r\n")
    return out.getvalue()


def top_k_csv(trials: list[TrialRecord]) -> str:
    out = io.StringIO()
    names = [name for name, _ in trials[0].config.assignments] if trials else []
    out.write("trial_id," + ",".join(names) + ",objective\r\n")
    for t in trials:
        cfg = t.config.as_dict()
        values = ",".join(str(cfg[n]) for n in names)
        out.write(f"{t.trial_id},{values},{t.objective!r}\r\n")
    return out.getvalue()


_PANEL_W = 360
_PANEL_H = 300
_MARGIN = 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _panel(
    points: list[ScatterPoint],
    x_of,
    x_label: str,
    offset_x: int,
    color_of: dict[str, str],
) -> list[str]:
    xs = [x_of(p) for p in points]
    ys = [p.objective for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    plot_w = _PANEL_W - 2 * _MARGIN
    plot_h = _PANEL_H - 2 * _MARGIN

    def sx(x: float) -> float:
        return offset_x + _MARGIN + (x - x_lo) / x_span * plot_w

    def sy(y: float) -> float:
        return _PANEL_H - _MARGIN - (y - y_lo) / y_span * plot_h

    parts = [
        f'<rect x="{offset_x + _MARGIN}" y="{_MARGIN}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333"/>',
        f'<text x="{offset_x + _PANEL_W / 2:.1f}" y="{_PANEL_H - 10}" '
        f'text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="{offset_x + _MARGIN}" y="{_PANEL_H - _MARGIN + 14}" '
        f'font-size="10">{x_lo:.4g}</text>',
        f'<text x="{offset_x + _PANEL_W - _MARGIN}" y="{_PANEL_H - _MARGIN + 14}" '
        f'text-anchor="end" font-size="10">{x_hi:.4g}</text>',
        f'<text x="{offset_x + _MARGIN - 4}" y="{_PANEL_H - _MARGIN}" '
        f'text-anchor="end" font-size="10">{y_lo:.4g}</text>',
        f'<text x="{offset_x + _MARGIN - 4}" y="{_MARGIN + 10}" '
        f'text-anchor="end" font-size="10">{y_hi:.4g}</text>',
    ]
    for p in points:
        parts.append(
            f'<circle cx="{sx(x_of(p)):.1f}" cy="{sy(p.objective):.1f}" r="4" '
            f'fill="{color_of[p.strategy]}" fill-opacity="0.75"/>'
        )
    return parts


def scatter_svg(points: list[ScatterPoint]) -> str:
    """Two static panels: params vs objective and GFLOPs vs objective."""
    if not points:
        raise ValueError("no points to plot")
    strategies = sorted({p.strategy for p in points})
    color_of = {s: _COLORS[i % len(_COLORS)] for i, s in enumerate(strategies)}
    width = 2 * _PANEL_W
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{_PANEL_H + 24}" '
        f'font-family="sans-serif">',
        '<text x="8" y="16" font-size="12">evaluation loss vs model cost</text>',
    ]
    parts += _panel(points, lambda p: p.params / 1e6, "params (M)", 0, color_of)
    parts += _panel(points, lambda p: p.flops / 1e9, "GFLOPs", _PANEL_W, color_of)
    for i, s in enumerate(strategies):
        y = _PANEL_H + 14
        x = 8 + i * 120
        parts.append(f'<circle cx="{x}" cy="{y - 4}" r="4" fill="{color_of[s]}"/>')
        parts.append(f'<text x="{x + 8}" y="{y}" font-size="11">{s}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
