"""Plain SVG grouped bar charts for the figure tables (optional report output)."""

from __future__ import annotations

from html import escape

from .graphcore import EdgeClass, PersistenceClass

COLORS = ("#4c72b0", "#dd8452", "#55a868")
WIDTH, HEIGHT, MARGIN = 480, 300, 40


def bar_chart(title: str, groups: list[str], series: list[str], values: list[list[float | None]]) -> str:
    """``values[g][s]`` is the bar height of series ``s`` in group ``g``; ``None`` leaves a gap."""
    top = max([v for row in values for v in row if v is not None] + [1e-12])
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    group_w = plot_w / max(1, len(groups))
    bar_w = group_w * 0.8 / max(1, len(series))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
             f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
             f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" '
             f'stroke="black"/>']
    for g, label in enumerate(groups):
        x0 = MARGIN + g * group_w + group_w * 0.1
        for s, v in enumerate(values[g]):
            if v is None:
                continue
            h = plot_h * v / top
            parts.append(f'<rect x="{x0 + s * bar_w:.1f}" y="{HEIGHT - MARGIN - h:.1f}" width="{bar_w:.1f}" '
                         f'height="{h:.1f}" fill="{COLORS[s % len(COLORS)]}"/>')
        parts.append(f'<text x="{x0 + group_w * 0.4:.1f}" y="{HEIGHT - MARGIN + 15}" text-anchor="middle" '
                     f'font-size="11">{escape(label)}</text>')
    for s, name in enumerate(series):
        parts.append(f'<text x="{WIDTH - MARGIN}" y="{35 + 14 * s}" text-anchor="end" font-size="11" '
                     f'fill="{COLORS[s % len(COLORS)]}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_plots(stats) -> dict[str, str]:
    from .evaluation import EDGE_CLASS_LABELS, PERSISTENCE_LABELS

    files = {}
    cs, cm = stats.class_stats, stats.comm_stats
    if cs is not None:
        pairs = cs.semester_pairs
        groups = [f"{a}->{b}" for a, b in pairs]
        series = [EDGE_CLASS_LABELS[c] for c in EdgeClass]
        for name, attr, title in (("fig1", "total_mean", "Mean total agreement"),
                                  ("fig2", "cn_mean", "Mean common neighbors")):
            vals = [[getattr(cs.cell(a, c), attr) for c in EdgeClass] for a, _ in pairs]
            files[f"{name}.svg"] = bar_chart(title, groups, series, vals)
    if cm is not None:
        series = [PERSISTENCE_LABELS[c] for c in PersistenceClass]
        for name, net, attr, title in (("fig3", "activity", "cn_mean", "Activity: mean common neighbors"),
                                       ("fig4", "activity", "calls_mean", "Activity: mean calls"),
                                       ("fig5", "activity", "texts_mean", "Activity: mean texts"),
                                       ("fig6", "friendship", "calls_mean", "Friendship: mean calls"),
                                       ("fig7", "friendship", "texts_mean", "Friendship: mean texts")):
            sems = sorted({c.semester for c in cm.cells if c.network == net})
            if not sems:
                continue
            vals = [[getattr(cm.cell(net, s, c), attr) for c in PersistenceClass] for s in sems]
            files[f"{name}.svg"] = bar_chart(title, [str(s) for s in sems], series, vals)
    return files
