"""Static figures written next to JSON/CSV reports (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp.png")
    # fixed metadata keeps the bytes reproducible
    fig.savefig(tmp, dpi=120, metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def decay_figure(report: dict, path: str | Path) -> Path:
    """log G against distance with the fit line; rate against h if swept."""
    rows = report["rows"]
    sweep = [r for r in report.get("sweep", []) if r.get("rate")]
    ncols = 2 if sweep else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4), squeeze=False)
    ax = axes[0, 0]
    d = np.array([r["distance"] for r in rows], dtype=float)
    est = np.array([r["estimate"] for r in rows])
    err = np.array([r["stderr"] for r in rows])
    ax.errorbar(d, est, yerr=err, fmt="o", label="estimate")
    fit = report.get("fit")
    if fit:
        dd = np.linspace(d.min(), d.max(), 50)
        ax.plot(dd, fit["prefactor"] * np.exp(-fit["rate"] * dd), "-",
                label=f"rate {fit['rate']:.3f}, R2 {fit['r_squared']:.4f}")
    ax.set_yscale("log")
    ax.set_xlabel("distance")
    ax.set_ylabel("two-point function")
    ax.set_title(f"h = {report['h']}")
    ax.legend()
    if sweep:
        ax = axes[0, 1]
        hs = np.array([r["h"] for r in sweep])
        rates = np.array([r["rate"] for r in sweep])
        ax.loglog(hs, rates, "o-", label=f"slope {report.get('sweep_slope') or float('nan'):.3f}")
        ax.set_xlabel("h")
        ax.set_ylabel("fitted rate")
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def tails_figure(report: dict, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    sizes = sorted({len(r["A"]) for r in report["rows"]})
    for s in sizes:
        rows = [r for r in report["rows"] if len(r["A"]) == s]
        k = [r["k"] for r in rows]
        ax.errorbar(k, [r["probability"] for r in rows],
                    yerr=[r["probability_stderr"] for r in rows], fmt="o", label=f"|A|={s}")
        ax.plot(k, [min(r["bound"], 1.0) for r in rows], "--", label=f"bound |A|={s}")
    ax.set_yscale("symlog", linthresh=1e-6)
    ax.set_xlabel("k")
    ax.set_ylabel("P(n_x >= k on A)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def domination_figure(report: dict, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    for ell in sorted({r["ell"] for r in report["rows"]}):
        rows = [r for r in report["rows"] if r["ell"] == ell]
        r_ = [row["r"] for row in rows]
        ax.plot(r_, [row["empirical"] for row in rows], "o", label=f"empirical l={ell}")
        ax.plot(r_, [row["bound"] for row in rows], "-", label=f"bound l={ell}")
    ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("P(X_1 + ... + X_l > r)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
