"""Command-line front door: estimate, simulate, conjugates.

Exit codes: 0 success, 1 usage error (bad flags, unknown names, unreadable
input), 2 numerical failure (reported with a machine-readable ``error``
field in the JSON output when an output path is given).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .divergences import NAMED_DIVERGENCES, conjugate_value, divergence_by_name
from .errors import (ConfigError, MedenError, NonAdditiveGroup, NonSmoothModel,
                     SingularFisher, UnknownDivergence, UnknownModel)
from .estimator import EstimateOptions, EstimateStatus, estimate
from .models import as_sample, builtin_model
from .report import write_report
from .simulate import run_simulation, sim_config_from_dict
from .umre import umre_correct

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse uses exit code 2 for usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meden", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", parents=[], description="Estimate theta from a CSV sample.")
    pe.add_argument("--data", required=True, help="CSV sample, one observation per row")
    pe.add_argument("--model", required=True, help="built-in model name")
    pe.add_argument("--divergence", default="KLm", help="divergence name (default KLm)")
    pe.add_argument("--umre", action="store_true", help="apply the equivariant risk correction")
    pe.add_argument("--out", default=None, help="write the result JSON here (default stdout)")

    ps = sub.add_parser("simulate", description="Run a Monte Carlo study from a config file.")
    ps.add_argument("--config", required=True, help="JSON simulation config")
    ps.add_argument("--out", required=True, help="output directory for report files")

    pc = sub.add_parser("conjugates", description="Print the conjugate table of the named divergences.")
    pc.add_argument("--points", type=int, default=9, help="interior evaluation points per divergence")
    return p


def _read_csv_sample(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",") if tok]
    except ValueError:
        skip = 1  # header row like x1,...,xm
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise _UsageError(f"cannot parse {path}: {exc}") from exc
    return data


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps({k: _jsonable(v) for k, v in payload.items()}, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cmd_estimate(args) -> int:
    try:
        model = builtin_model(args.model)
        spec = divergence_by_name(args.divergence)
    except (UnknownModel, UnknownDivergence) as exc:
        raise _UsageError(str(exc)) from exc
    sample = as_sample(_read_csv_sample(args.data), m=model.m)

    est = estimate(spec, model, sample, EstimateOptions())
    payload = {
        "model": model.name,
        "divergence": spec.name,
        "theta_hat": est.theta_hat,
        "value": est.value,
        "weights": est.inner.weights if est.inner is not None else None,
        "status": est.status.value,
    }
    if est.status is EstimateStatus.NO_FEASIBLE_REGION:
        payload["error"] = "NoFeasibleRegion"
        _emit(payload, args.out)
        return 2
    if args.umre:
        try:
            cor = umre_correct(spec, model, sample, est)
        except (NonAdditiveGroup, NonSmoothModel, SingularFisher) as exc:
            payload["error"] = type(exc).__name__
            _emit(payload, args.out)
            return 2
        payload.update(theta_umre=cor.theta_umre, correction=cor.correction,
                       fisher=cor.fisher)
    _emit(payload, args.out)
    return 0


def _cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _UsageError(f"cannot read {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"malformed JSON in {args.config}: {exc}") from exc
    try:
        config = sim_config_from_dict(raw)
    except (ConfigError, UnknownDivergence, UnknownModel) as exc:
        raise _UsageError(str(exc)) from exc

    print(f"resolved config: {config}", file=sys.stderr)
    report = run_simulation(config)
    write_report(report, args.out)

    print("method,n,mse,std_error,failures")
    for r in report.results:
        print(f"{r.method},{r.n},{r.mse:.10g},{r.std_error:.10g},{r.failures}")
    return 0


def _cmd_conjugates(args) -> int:
    if args.points < 1:
        raise _UsageError("--points must be >= 1")
    for name in NAMED_DIVERGENCES:
        spec = divergence_by_name(name)
        print(f"{spec.name}: dom phi = {spec.primal_domain}, "
              f"dom phi* = {spec.conjugate_domain}")
        dom = spec.conjugate_domain
        lo = dom.lo if np.isfinite(dom.lo) else -5.0
        hi = dom.hi if np.isfinite(dom.hi) else 5.0
        width = hi - lo
        if args.points == 1:
            mid = 0.0 if dom.interior(0.0) else lo + 0.5 * width
            ts = [mid]
        else:
            ts = list(lo + width * (np.arange(1, args.points + 1) / (args.points + 1)))
        for t in ts:
            print(f"  phi*({t:+.6f}) = {conjugate_value(spec, t):.10g}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        print(f"meden {__version__} [{args.command}] "
              f"{ {k: v for k, v in vars(args).items() if k != 'command'} }",
              file=sys.stderr)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_conjugates(args)
    except _UsageError as exc:
        print(f"meden: error: {exc}", file=sys.stderr)
        return 1
    except MedenError as exc:
        print(f"meden: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
