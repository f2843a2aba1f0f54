"""Deterministic command-line interface tying the toolkit together.

Every command is a pure function of (input files, flags, seed); reports
embed the payload separately from timings so re-runs are bit-comparable.
Exit codes: 0 success, 2 usage, 3 format, 4 numeric or verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from .analysis import (
    BoundInputs,
    competing_capacities,
    generalization_bound,
    losses,
    margins_batch,
    normalized_margins,
    sweep_accuracy_vs_M,
)
from .io_formats import (
    FormatError,
    load_dataset,
    load_model,
    model_digest,
    save_model,
    file_digest,
    write_counts_csv,
)
from .logscaled import LogScaled
from .measures import (
    DegenerateNetworkError,
    path_measures,
    path_norm_phi,
)
from .network import forward_batch
from .norms import PowerIterationError
from .sampling import (
    RNG_ALGORITHM,
    build_sampler,
    compression_stats,
    empirical_markov,
    reconstruct,
    sample_paths,
)
from .verify import SUITES, run_suite, run_suites

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_NUMERIC = 4


class VerificationFailure(RuntimeError):
    def __init__(self, names):
        super().__init__(f"failed checks: {', '.join(names)}")
        self.names = names


def _parse_q(text: str) -> float:
    q = math.inf if text.strip().lower() in ("inf", "infinity") else float(text)
    if q < 1:
        raise argparse.ArgumentTypeError("q must lie in [1, inf]")
    return q


def _scaled_pair(v: LogScaled) -> dict:
    return {"value": v.to_float(strict=False), "log10": v.log10}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model directory or manifest path")
    common.add_argument("--data", help="dataset CSV")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p = argparse.ArgumentParser(prog="pathcap", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("inspect", parents=[common])

    m = sub.add_parser("measures", parents=[common])
    m.add_argument("--q", type=_parse_q, default=1.0)

    s = sub.add_parser("sample", parents=[common])
    s.add_argument("--q", type=_parse_q, default=1.0)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-model", help="write the reconstructed model here")
    s.add_argument("--counts-csv", help="write the sparse path-count table here")

    r = sub.add_parser("reconstruct-eval", parents=[common])
    r.add_argument("--q", type=_parse_q, default=1.0)
    r.add_argument("--M", type=int, required=True)
    r.add_argument("--seed", type=int, required=True)

    w = sub.add_parser("sweep", parents=[common])
    w.add_argument("--q", type=_parse_q, default=1.0)
    w.add_argument("--Ms", required=True, help="comma-separated sample counts")
    w.add_argument("--rounds", type=int, default=10)
    w.add_argument("--seed", type=int, required=True)

    sub.add_parser("margins", parents=[common])

    b = sub.add_parser("bound", parents=[common])
    b.add_argument("--gamma", type=float, help="margin; default: median positive margin")
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--q", type=_parse_q, default=1.0)
    b.add_argument("--mode", choices=("apriori", "posthoc"), default="apriori")

    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--suite", default="all", help=f"one of {sorted(SUITES)} or 'all'")
    v.add_argument("--seed", type=int, required=True)

    sub.add_parser("eval", parents=[common])
    return p


def _emit(args, payload, csv_rows=None, csv_header=None, timings=None) -> None:
    if args.format == "csv" and csv_rows is not None:
        buf = io.StringIO()
        writer = csv.writer(buf)
        if csv_header:
            writer.writerow(csv_header)
        for row in csv_rows:
            writer.writerow(row)
        text = buf.getvalue()
    else:
        report = {
            "command": args.command,
            "rng_algorithm": RNG_ALGORITHM,
            "inputs": _input_digests(args),
            "payload": payload,
            "timings": timings or {},
        }
        if getattr(args, "seed", None) is not None:
            report["seed"] = args.seed
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _input_digests(args) -> dict:
    digests = {}
    if getattr(args, "model", None):
        digests["model"] = model_digest(args.model)
    if getattr(args, "data", None):
        digests["data"] = file_digest(args.data)
    return digests


def _need_model(args):
    if not args.model:
        raise FormatError(f"command {args.command!r} requires --model")
    return load_model(args.model)


def _need_data(args):
    if not args.data:
        raise FormatError(f"command {args.command!r} requires --data")
    return load_dataset(args.data)


def _cmd_inspect(args) -> None:
    net = _need_model(args)
    payload = {
        "dims": net.dims,
        "depth": net.depth,
        "activation": {"kind": net.activation.kind},
        "n_paths": net.n_paths(),
        "n_params": int(sum(w.size for w in net.layers)),
    }
    _emit(args, payload)


def _cmd_measures(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    t0 = time.perf_counter()
    pm_c = path_measures(net, S, args.q, mode="collapsed")
    pm_d = path_measures(net, S, args.q, mode="doubled")
    _, phi1 = path_norm_phi(net, 1, scaled=True)
    _, phi2 = path_norm_phi(net, 2, scaled=True)
    table = competing_capacities(net, S)
    payload = {
        "q": args.q,
        "V": _scaled_pair(pm_c.V),
        "zeta_collapsed": pm_c.zeta,
        "zeta_doubled": pm_d.zeta,
        "phi1": _scaled_pair(phi1),
        "phi2": _scaled_pair(phi2),
        "capacity_table": [
            {"measure": n, "value": v, "log10_value": l} for n, v, l in table.entries
        ],
    }
    rows = [(n, v, l) for n, v, l in table.entries]
    _emit(
        args,
        payload,
        csv_rows=rows,
        csv_header=("measure", "value", "log10_value"),
        timings={"seconds": time.perf_counter() - t0},
    )


def _cmd_sample(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    t0 = time.perf_counter()
    cs = build_sampler(net, S, args.q)
    counts = sample_paths(cs, args.M, args.seed, workers=args.workers)
    em = empirical_markov(counts)
    stats = compression_stats(em, args.M)
    if args.counts_csv:
        write_counts_csv(counts, args.counts_csv)
    if args.out_model:
        rec = reconstruct(em, cs.V, cs.w)
        save_model(
            rec.as_network(),
            args.out_model,
            metadata={
                "reconstruction": {
                    "M": args.M,
                    "seed": args.seed,
                    "q": args.q,
                    "workers": args.workers,
                    "rng_algorithm": RNG_ALGORITHM,
                    "source_digest": model_digest(args.model),
                }
            },
        )
    payload = {
        "M": args.M,
        "q": args.q,
        "workers": args.workers,
        "V": _scaled_pair(cs.V),
        **stats,
    }
    _emit(args, payload, timings={"seconds": time.perf_counter() - t0})


def _cmd_reconstruct_eval(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    t0 = time.perf_counter()
    cs = build_sampler(net, S, args.q)
    counts = sample_paths(cs, args.M, args.seed)
    rec = reconstruct(empirical_markov(counts), cs.V, cs.w)
    out = rec.evaluate(S.X)
    exact = forward_batch(net, S)
    payload = {
        "M": args.M,
        "q": args.q,
        "mse": float(np.mean(np.sum((out - exact) ** 2, axis=1))),
        "nnz": rec.nnz,
    }
    if S.y is not None:
        y = S.labels_checked(net.k)
        payload["accuracy"] = float(np.mean(np.argmax(out, axis=1) + 1 == y))
        payload["accuracy_original"] = float(
            np.mean(np.argmax(exact, axis=1) + 1 == y)
        )
    _emit(args, payload, timings={"seconds": time.perf_counter() - t0})


def _cmd_sweep(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    Ms = [int(x) for x in args.Ms.split(",") if x]
    if not Ms or min(Ms) < 1:
        raise FormatError("--Ms must list positive integers")
    t0 = time.perf_counter()
    result = sweep_accuracy_vs_M(net, S, args.q, Ms, args.rounds, args.seed, threads=args.threads)
    payload = {
        "q": args.q,
        "rounds": args.rounds,
        "rows": [
            {
                "M": r.M,
                "mean_acc": r.mean_acc,
                "min_acc": r.min_acc,
                "max_acc": r.max_acc,
                "mse": r.mse,
            }
            for r in result.rows
        ],
    }
    _emit(
        args,
        payload,
        csv_rows=list(result.csv_rows()),
        csv_header=("M", "mean_acc", "min_acc", "max_acc", "mse"),
        timings={"seconds": time.perf_counter() - t0},
    )


def _cmd_margins(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    stats = normalized_margins(net, S)
    payload = {
        "V1": _scaled_pair(stats.v1),
        "median_normalized": float(np.median(stats.normalized)),
        "histogram": [
            {"bin_lo": lo, "bin_hi": hi, "count": c} for lo, hi, c in stats.csv_rows()
        ],
    }
    _emit(
        args,
        payload,
        csv_rows=list(stats.csv_rows()),
        csv_header=("bin_lo", "bin_hi", "count"),
    )


def _cmd_bound(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    pm = path_measures(net, S, args.q, mode="doubled")
    gamma = args.gamma
    if gamma is None:
        y = S.labels_checked(net.k)
        m = margins_batch(forward_batch(net, S), y)
        positive = m[m > 0]
        if positive.size == 0:
            raise DegenerateNetworkError(
                "no positive margins; pass --gamma explicitly"
            )
        gamma = float(np.median(positive))
    summary = losses(net, S, gamma)
    b = BoundInputs(
        V=pm.V.to_float(),
        zeta=pm.zeta,
        L=net.depth,
        d=net.d,
        n=S.n,
        k=net.k,
        gamma=gamma,
        delta=args.delta,
        margin_loss=summary.margin_loss,
    )
    value = generalization_bound(b, args.mode)
    payload = {
        "mode": args.mode,
        "value": value,
        "vacuous": bool(value > 1.0),
        "gamma": gamma,
        "delta": args.delta,
        "q": args.q,
        "V": pm.V.to_float(strict=False),
        "zeta": pm.zeta,
        "losses": {
            "loss": summary.loss,
            "margin_loss": summary.margin_loss,
            "ramp_mean": summary.ramp_mean,
        },
    }
    _emit(args, payload)


def _cmd_verify(args) -> None:
    t0 = time.perf_counter()
    if args.suite == "all":
        report = run_suites(sorted(SUITES), args.seed, threads=args.threads)
    else:
        report = run_suite(args.suite, args.seed, threads=args.threads)
    _emit(args, report, timings={"seconds": time.perf_counter() - t0})
    if not report["passed"]:
        failed = []
        suites = report.get("suites", [report])
        for sr in suites:
            failed += [f"{sr['suite']}:{c['name']}" for c in sr["checks"] if not c["passed"]]
        raise VerificationFailure(failed)


def _cmd_eval(args) -> None:
    net = _need_model(args)
    S = _need_data(args)
    out = forward_batch(net, S)
    payload = {"outputs": [[float(v) for v in row] for row in out]}
    rows = [tuple(row) for row in out.tolist()]
    _emit(args, payload, csv_rows=rows, csv_header=tuple(f"y{j}" for j in range(net.k)))


_COMMANDS = {
    "inspect": _cmd_inspect,
    "measures": _cmd_measures,
    "sample": _cmd_sample,
    "reconstruct-eval": _cmd_reconstruct_eval,
    "sweep": _cmd_sweep,
    "margins": _cmd_margins,
    "bound": _cmd_bound,
    "verify": _cmd_verify,
    "eval": _cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DegenerateNetworkError, PowerIterationError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
