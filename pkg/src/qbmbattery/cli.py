"""Command line: ``qbmbattery {run,sweep,figures,certify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .errors import QBMError


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.backend:
        cfg = cfg.with_(backend=args.backend)
    if args.mu is not None:
        cfg = cfg.with_(mu=args.mu)
    if args.mu_tilde is not None:
        cfg = cfg.with_(mu_tilde=args.mu_tilde)
    if args.temp is not None:
        cfg = cfg.with_(T=args.temp)
    return cfg


def _values(text: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if ":" in item:
            out.append([int(x) for x in item.split(":")])
        else:
            out.append(float(item))
    return out


def cmd_run(args) -> dict:
    from .experiment import run

    path = run(_config(args)).write(args.out)
    return {"written": [str(path)]}


def cmd_sweep(args) -> dict:
    from .experiment import sweep

    tables = sweep(_config(args), args.axis, _values(args.values), workers=args.workers)
    return {"written": [str(t.write(args.out)) for t in tables]}


def cmd_figures(args) -> dict:
    from .figures import FIGURES, figures

    base = _config(args) if (args.config or args.backend or args.mu is not None or args.temp is not None) else None
    which = FIGURES if args.which == "all" else [args.which]
    written = []
    for w in which:
        written += [str(p) for p in figures(w, args.out, base, fock_dt=args.fock_dt)]
    return {"written": written}


def cmd_certify(args) -> dict:
    from .experiment import certify_convergence

    cfg = _config(args)
    report = certify_convergence(cfg, tol=args.tol, dt=args.dt, include_modes=args.include_modes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"certify-{cfg.digest()}.json"
    path.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    result = {"written": [str(path)], "passed": report.passed, "worst": report.worst}
    if args.strict and not report.passed:
        result["exit"] = 1
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbmbattery", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run configuration (or a result CSV to rerun)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--backend", choices=["fock", "gaussian", "both"])
        p.add_argument("--mu", type=float, help="momentum coupling, q - mu p form")
        p.add_argument("--mu-tilde", type=float, help="momentum coupling, (1 - mu~) q + mu~ p form")
        p.add_argument("--temp", type=float, help="bath temperature")
        return p

    common(sub.add_parser("run", help="single run")).set_defaults(func=cmd_run)
    p = common(sub.add_parser("sweep", help="one run per value of a parameter"))
    p.add_argument("--axis", required=True, choices=["mu", "mu_tilde", "T", "eta", "N", "dims"])
    p.add_argument("--values", required=True, help="comma-separated; for dims use colon-separated lists")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    p = common(sub.add_parser("figures", help="regenerate figure data and plots"))
    p.add_argument("--which", default="all", choices=["all", "fig1", "fig2", "fig3", "fig4", "fig5"])
    p.add_argument("--fock-dt", type=float, default=None, help="time step for Fock-backend curves")
    p.set_defaults(func=cmd_figures)
    p = common(sub.add_parser("certify", help="truncation convergence report"))
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--dt", type=float, default=None, help="coarser step for the comparison")
    p.add_argument("--include-modes", action="store_true", help="let the extra-bath-mode delta gate the verdict")
    p.add_argument("--strict", action="store_true", help="exit 1 when the report fails")
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        result = args.func(args)
    except QBMError as exc:
        err = {"error": exc.code, "message": str(exc)}
        for attr in ("required", "available", "mode", "population", "time"):
            if getattr(exc, attr, None) is not None:
                err[attr] = getattr(exc, attr)
        print(json.dumps(err), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 3
    code = result.pop("exit", 0)
    print(json.dumps(result))
    return code


if __name__ == "__main__":
    sys.exit(main())
