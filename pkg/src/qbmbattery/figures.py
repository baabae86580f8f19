"""Data and plots for the standard figure set fig1 ... fig5.

Each curve is an ordinary run whose table is written as its own CSV (with
provenance). The PNG is drawn from those tables afterwards.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import Grid, InitialState, RunConfig
from .errors import ConfigError
from .experiment import MetricTable, run

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")
MU_VALUES = (0.0, 0.25, 0.5, 0.75, 1.0)
MU_TILDE_VALUES = (0.0, 0.5, 1.0)
ALPHA = 3 + 4j
PAIR_ALPHA = 1 + 0j


def _base(base: RunConfig | None) -> RunConfig:
    return base if base is not None else RunConfig()


def figure_configs(which: str, base: RunConfig | None = None, fock_modes: int = 3,
                   fock_dt: float | None = None) -> list[tuple[str, RunConfig]]:
    """``(label, config)`` pairs for one figure.

    Coherent-state curves use the Gaussian backend on ``base``'s bath. The
    non-Gaussian superpositions of fig1 use the Fock backend with
    ``fock_modes`` bath modes (optionally on a coarser step ``fock_dt``).
    """
    b = _base(base)
    coherent = InitialState("coherent", alpha=ALPHA)
    gauss = b.with_(backend="gaussian", initial_state=coherent, pair_state=None, m=1.5, omega_s=1.0)
    if which == "fig1":
        g = gauss.with_(T=1.0, mu=0.0, outputs=("E", "W"))
        grid = g.grid if fock_dt is None else Grid(t_max=g.grid.t_max, dt=fock_dt)

        def fock(c0, c1):
            return g.with_(n_modes=fock_modes, backend="fock", grid=grid, truncation={"bath_dims": None},
                           initial_state=InitialState("superposition", c0=c0, c1=c1))

        return [
            ("psi1", fock(np.sqrt(3) / 2, 0.5)),
            ("psi2", fock(np.sqrt(0.5), np.sqrt(0.5))),
            ("thermal", g.with_(initial_state=InitialState("thermal", T_s=None))),
            ("coherent", g),
        ]
    power = ("E", "W", "P", "P_av")
    if which == "fig2":
        g = gauss.with_(T=1.0, outputs=power)
        return [(f"mu={m:g}", g.with_(mu=m)) for m in MU_VALUES] + [
            (f"mu_tilde={m:g}", g.with_(mu_tilde=m)) for m in MU_TILDE_VALUES
        ]
    if which == "fig3":
        g = gauss.with_(mu=0.5, outputs=power)
        return [(f"T={T:g}", g.with_(T=T)) for T in (0.01, 0.1, 1.0, 5.0)]
    if which == "fig4":
        g = gauss.with_(T=0.1, outputs=power)
        return [(f"mu={m:g}", g.with_(mu=m)) for m in MU_VALUES]
    if which == "fig5":
        g = gauss.with_(pair_state=InitialState("coherent", alpha=PAIR_ALPHA), outputs=("D",))
        return [(f"T={T:g},mu={m:g}", g.with_(T=T, mu=m)) for T in (0.1, 0.5, 1.0, 5.0) for m in (0.0, 0.5, 1.0)]
    raise ConfigError(f"unknown figure {which!r}; choose from {FIGURES}")


def _slug(label: str) -> str:
    return label.replace("=", "").replace(",", "_").replace(".", "p")


def _plot(which: str, tables: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if which == "fig5":
        fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
        for ax, T in zip(axes.flat, ("0.1", "0.5", "1", "5")):
            for label, tab in tables.items():
                if label.startswith(f"T={T},"):
                    ax.plot(tab["t"], tab["D"], label=label.split(",")[1])
            ax.set_title(f"T = {T}")
            ax.set_ylabel("D")
            ax.legend(fontsize=7)
        for ax in axes[-1]:
            ax.set_xlabel("t")
    elif which == "fig1":
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, tab in tables.items():
            ax.plot(tab["t"], tab["W"] / max(tab["W"][0], 1e-300) if label != "thermal" else tab["W"], label=label)
        ax.set_xlabel("t")
        ax.set_ylabel("W / W(0)  (thermal: W)")
        ax.legend()
    else:
        fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4))
        for label, tab in tables.items():
            line, = a.plot(tab["t"], tab["W"], label=label)
            b.plot(tab["t"], tab["P"], color=line.get_color(), lw=0.8)
            b.plot(tab["t"], tab["P_av"], ".", color=line.get_color(), ms=1.5)
        a.set_xlabel("t")
        a.set_ylabel("W")
        a.legend(fontsize=7)
        b.set_xlabel("t")
        b.set_ylabel("P (lines), P_av (dots)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figures(which: str, outdir, base: RunConfig | None = None, **kw) -> list[Path]:
    """Write one CSV per curve, an index JSON and a PNG for figure ``which``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tables: dict[str, MetricTable] = {}
    written = []
    for label, cfg in figure_configs(which, base, **kw):
        tab = run(cfg)
        tables[label] = tab
        written.append(tab.write(outdir, f"{which}_{_slug(label)}.csv"))
    index = outdir / f"{which}.json"
    index.write_text(json.dumps({label: p.name for label, p in zip(tables, written)}, indent=1) + "\n")
    png = outdir / f"{which}.png"
    _plot(which, tables, png)
    return written + [index, png]
