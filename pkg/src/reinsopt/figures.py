"""Rendering of payoff curves and controlled traces to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

REGIME_COLORS = {
    "uncontrolled": "salmon",
    "unconstrained": "goldenrod",
    "strict": "seagreen",
    "var": "darkturquoise",
    "es_p": "royalblue",
    "es_q": "palevioletred",
}
REGIME_LABELS = {
    "uncontrolled": "uncontrolled",
    "unconstrained": "unconstrained",
    "strict": "strict floor",
    "var": "tail probability",
    "es_p": "expected shortfall (real-world)",
    "es_q": "expected shortfall (kernel)",
}
_DPI = 150


def _style(ax):
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)


def render_payoff_figure(z, curves: dict[str, object], out_path: str | Path,
                         floor: float | None = None) -> Path:
    """Plot terminal payoff curves against the terminal kernel value."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for regime, values in curves.items():
        style = "--" if regime == "unconstrained" else "-"
        ax.plot(z, values, style, color=REGIME_COLORS.get(regime),
                label=REGIME_LABELS.get(regime, regime), linewidth=1.4)
    if floor is not None:
        ax.axhline(floor, color="gray", linestyle=":", linewidth=1.0)
    ax.set_xlabel("terminal kernel value z")
    ax.set_ylabel("terminal surplus")
    ax.set_title("Optimal terminal payoffs")
    _style(ax)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return out_path


def render_trace_figure(times, surplus: dict[str, object],
                        proportions: dict[str, object], out_path: str | Path,
                        seed: int | None = None) -> Path:
    """Plot one seeded realization: surplus paths on top, proportions below."""
    fig, (ax_x, ax_pi) = plt.subplots(2, 1, figsize=(7.0, 7.0), sharex=True)
    for regime, values in surplus.items():
        ax_x.plot(times, values, color=REGIME_COLORS.get(regime),
                  label=REGIME_LABELS.get(regime, regime), linewidth=1.1)
    ax_x.set_ylabel("surplus")
    title = "Controlled surplus and reinsurance proportion"
    if seed is not None:
        title += f" (seed {seed})"
    ax_x.set_title(title)
    _style(ax_x)
    for regime, values in proportions.items():
        ax_pi.plot(times, values, color=REGIME_COLORS.get(regime),
                   label=REGIME_LABELS.get(regime, regime), linewidth=1.1)
    ax_pi.axhline(0.0, color="gray", linestyle=":", linewidth=0.8)
    ax_pi.axhline(1.0, color="gray", linestyle=":", linewidth=0.8)
    ax_pi.set_xlabel("time")
    ax_pi.set_ylabel("proportion ceded")
    _style(ax_pi)
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return out_path
