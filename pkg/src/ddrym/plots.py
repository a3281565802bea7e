"""Render diagnostics and convergence figures from the CSV outputs."""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        rows = list(reader)
    return rows


def plot_diagnostics(path: str, outdir: str) -> list:
    """Energy, constraint-drift and Newton figures from a diagnostics CSV."""
    rows = _read_csv(path)
    t = np.array([float(r["time"]) for r in rows])
    ee = np.array([float(r["energy_E"]) for r in rows])
    eb = np.array([float(r["energy_B"]) for r in rows])
    drift = np.array([float(r["constraint_drift_dual_norm"]) for r in rows])
    iters = np.array([int(r["newton_iters"]) for r in rows])
    os.makedirs(outdir, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(t, ee, label="electric")
    ax.plot(t, eb, label="magnetic")
    ax.plot(t, ee + eb, "k--", label="total")
    ax.set_xlabel("time")
    ax.set_ylabel("discrete energy")
    ax.legend(frameon=False)
    fig.tight_layout()
    out = os.path.join(outdir, "energy.png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    written.append(out)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(t, np.maximum(drift, 1e-18))
    ax.set_xlabel("time")
    ax.set_ylabel("constraint drift (dual norm)")
    fig.tight_layout()
    out = os.path.join(outdir, "constraint_drift.png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    written.append(out)

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.step(t, iters, where="mid")
    ax.set_xlabel("time")
    ax.set_ylabel("Newton iterations")
    fig.tight_layout()
    out = os.path.join(outdir, "newton_iterations.png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    written.append(out)
    return written


def plot_rates(path: str, outdir: str) -> list:
    """Log-log error-versus-h figure from a convergence CSV."""
    rows = _read_csv(path)
    h = np.array([float(r["h"]) for r in rows])
    err_a = np.array([float(r["err_A"]) for r in rows])
    err_e = np.array([float(r["err_E"]) for r in rows])
    os.makedirs(outdir, exist_ok=True)

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(h, err_a, "o-", label="potential")
    ax.loglog(h, err_e, "s-", label="electric field")
    guide = err_e[0] * (h / h[0])
    ax.loglog(h, guide, "k:", label="order 1")
    ax.set_xlabel("mesh size h")
    ax.set_ylabel("relative error at final time")
    ax.legend(frameon=False)
    fig.tight_layout()
    out = os.path.join(outdir, "convergence.png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return [out]
