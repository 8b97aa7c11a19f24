"""Output emission: delimited time series, JSON summaries, and figures.

Floats are written with repr (shortest round-trip form) so repeated runs of
the same config produce byte-identical files.
"""

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .mesh_fem import sobolev_norms
from .rhc import RhcResult, decay_rate_fit, performance_metrics, sparsity_profile

SUMMARY_SCHEMA_VERSION = 1

TABLE_COLUMNS = ["T", "objective_total", "state_L2V", "final_V", "final_H",
                 "total_iterations"]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])


def state_norm_series(result: RhcResult):
    times = result.y_rh.grid.times
    h = np.array([sobolev_norms(v, result.ops, "H") for v in result.y_rh.values])
    v = np.array([sobolev_norms(vv, result.ops, "V") for vv in result.y_rh.values])
    return times, h, v


def write_run_artifacts(result: RhcResult, outdir: str, figures: bool = True) -> dict:
    """Write state.csv, controls.csv, summary.json, and figures; return summary."""
    os.makedirs(outdir, exist_ok=True)
    times, h_norms, v_norms = state_norm_series(result)
    write_csv(os.path.join(outdir, "state.csv"), ["t", "norm_H", "norm_V"],
              zip(times.tolist(), h_norms.tolist(), v_norms.tolist()))

    u = result.u_rh.values
    n_act = u.shape[1]
    write_csv(os.path.join(outdir, "controls.csv"),
              ["t"] + [f"u_{i + 1}" for i in range(n_act)],
              [[t] + row.tolist() for t, row in zip(times.tolist(), u)])

    write_csv(os.path.join(outdir, "iterations.csv"),
              ["window", "iter", "objective", "residual", "step"],
              [[wd["k"], *row] for wd in result.windows for row in wd.get("log", [])])

    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "completed": result.completed,
        "failure": result.failure,
        "metrics": performance_metrics(result),
        "sparsity": sparsity_profile(result),
        "windows": [{k: v for k, v in wd.items() if k != "log"}
                    for wd in result.windows],
    }
    try:
        zeta_hat, c_hat = decay_rate_fit(result)
        summary["decay_fit"] = {"zeta_hat": zeta_hat, "intercept": c_hat}
    except ValueError as exc:
        summary["decay_fit"] = {"error": str(exc)}
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")

    if figures:
        plot_state_norms(times, h_norms, v_norms, os.path.join(outdir, "state_norms.png"))
        plot_controls(times, u, os.path.join(outdir, "controls.png"))
    return summary


def plot_state_norms(times, h_norms, v_norms, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(times, np.maximum(h_norms, 1e-300), label=r"$\|y(t)\|_H$")
    ax.semilogy(times, np.maximum(v_norms, 1e-300), label=r"$\|y(t)\|_V$")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_controls(times, u, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i in range(u.shape[1]):
        mag = np.abs(u[:, i])
        ax.semilogy(times, np.maximum(mag, 1e-300), label=f"$|u_{{{i + 1}}}|$",
                    linewidth=0.9)
    ax.set_xlabel("t")
    ax.set_ylabel("|u_i(t)|")
    if u.shape[1] <= 6:
        ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_sweep_table(rows: list[dict], outdir: str, figures: bool = True) -> str:
    """rows: one dict per horizon value with TABLE_COLUMNS keys (+ optional error)."""
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "table.csv")
    header = TABLE_COLUMNS + ["error"]
    write_csv(path, header,
              [[row.get(c, "") for c in header] for row in rows])
    if figures:
        ok = [r for r in rows if not r.get("error")]
        if ok:
            fig, ax = plt.subplots(figsize=(6, 4))
            Ts = [r["T"] for r in ok]
            ax.semilogy(Ts, [max(r["final_H"], 1e-300) for r in ok], "o-",
                        label=r"$\|y_{rh}(T_\infty)\|_H$")
            ax.semilogy(Ts, [max(r["final_V"], 1e-300) for r in ok], "s-",
                        label=r"$\|y_{rh}(T_\infty)\|_V$")
            ax.set_xlabel("prediction horizon T")
            ax.legend()
            ax.grid(True, which="both", alpha=0.3)
            fig.tight_layout()
            fig.savefig(os.path.join(outdir, "sweep_final_norms.png"), dpi=150)
            plt.close(fig)
    return path
