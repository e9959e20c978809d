"""CSV and SVG output for aggregated traces."""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import TraceAggregate  # noqa: E402

FLOAT_FMT = "{:.10g}"


def _cell(v):
    if isinstance(v, float) or hasattr(v, "dtype") and v.dtype.kind == "f":
        return FLOAT_FMT.format(float(v))
    return str(int(v))


def write_csv(agg: TraceAggregate, path):
    """One row per logged round, LF line endings, fixed column order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TraceAggregate.COLUMNS)
        for row in agg.rows():
            w.writerow([_cell(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def _band(ax, t, mean, std, label):
    line, = ax.plot(t, mean, lw=1.4, label=label)
    ax.fill_between(t, mean - std, mean + std, color=line.get_color(), alpha=0.25, lw=0)


def write_svg(curves, path, title=None):
    """Average regret (cumulative / t) and cumulative collisions per user,
    mean with a shaded +-1 std band.  ``curves`` maps label -> TraceAggregate
    (a bare aggregate is drawn unlabelled)."""
    if isinstance(curves, TraceAggregate):
        curves = {"": curves}
    if not curves or any(len(a) == 0 for a in curves.values()):
        raise ValueError("nothing to plot")
    with plt.rc_context({"svg.hashsalt": "mega-bandits", "svg.fonttype": "path"}):
        fig, (ax_r, ax_c) = plt.subplots(1, 2, figsize=(10, 4))
        for label, agg in curves.items():
            _band(ax_r, agg.t, agg.average_regret_mean, agg.average_regret_std, label)
            _band(ax_c, agg.t, agg.collisions_per_user_mean, agg.collisions_per_user_std, label)
        ax_r.set_xlabel("t")
        ax_r.set_ylabel("average regret")
        ax_c.set_xlabel("t")
        ax_c.set_ylabel("collisions per user")
        for ax in (ax_r, ax_c):
            ax.grid(alpha=0.3)
            if any(curves):
                ax.legend(loc="best", fontsize=8)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
