"""Figure rendering for the report paths (convergence and residuals).

Figures are written next to the delimited output; matplotlib is imported
lazily with the Agg backend so headless batch runs stay cheap.
"""

from .words import word_str


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_convergence(result, path, title="weak error vs horizon"):
    """Log-log error against horizon, one line per formula degree."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    degrees = sorted({row["degree"] for row in result.rows})
    for degree in degrees:
        pts = [(row["T"], row["abs_error"]) for row in result.rows
               if row["degree"] == degree and row["abs_error"] > 0]
        if not pts:
            continue
        pts.sort()
        fit = result.fits.get(degree)
        label = f"degree {degree}"
        if fit is not None and fit.slope is not None:
            label += f" (slope {fit.slope:.2f})"
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label=label)
    ax.set_xlabel("horizon T")
    ax.set_ylabel("absolute weak error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_residuals(report, path, top=30):
    """Stem chart of the worst word residuals of a verification run."""
    plt = _pyplot()
    rows = [r for r in report.residuals[:top]]
    labels = [word_str(w) for w, _, _, _ in rows]
    errors = [max(float(e), 1e-18) for _, _, _, e in rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.28 * len(rows)), 4.2))
    ax.bar(range(len(rows)), errors)
    ax.set_yscale("log")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("|lhs - rhs|")
    ax.set_title(f"degree-{report.degree} verification, "
                 f"max residual {report.max_residual:.2e}")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
