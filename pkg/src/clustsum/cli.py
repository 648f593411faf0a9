"""Command line interface.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 parse error,
4 refused computation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import io
from .epl import ExhaustiveRefused, GreedyConfig, exhaustive_minimize, greedy_minimize
from .partition import LossKind
from .psm import compute_psm, minimize_vi_lb
from .simulate import (
    AnchorSpec,
    GibbsConfig,
    gen_gmm_data,
    gen_multimodal_sample,
    gen_uniform_square,
    gibbs_gmm,
)
from .uncertainty import credible_ball, empirical_pmf, hpd_region

EXIT_IO, EXIT_USAGE, EXIT_PARSE, EXIT_REFUSED = 1, 2, 3, 4


class UsageError(Exception):
    pass


def _open_unit(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return v


def _gamma(text: str) -> float:
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _loss(text: str) -> LossKind:
    try:
        return LossKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _greedy_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("greedy search")
    g.add_argument("--restarts", type=_positive_int, default=10)
    g.add_argument("--max-clusters", type=_positive_int, default=None)
    g.add_argument("--max-sweeps", type=_positive_int, default=100)
    g.add_argument("--init", choices=["auto", "singletons", "one-cluster", "random"], default="auto")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=_positive_int, default=None,
                   help="concurrent restarts (default: $CLUSTSUM_THREADS or 1)")


def _cfg(args) -> GreedyConfig:
    return GreedyConfig(
        restarts=args.restarts,
        max_clusters=args.max_clusters,
        max_sweeps=args.max_sweeps,
        seed=args.seed,
        init=args.init,
        n_jobs=args.threads,
    )


def _output(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", help="JSON report path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clustsum", description="Summaries of posterior samples of clusterings."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarise", aliases=["summarize"], help="Bayes-optimal partition")
    p.add_argument("sample")
    p.add_argument("--loss", type=_loss, default=LossKind.VI)
    p.add_argument("--exhaustive", action="store_true", help="enumerate all partitions")
    p.add_argument("--limit", type=_positive_int, default=10, help="max N for --exhaustive")
    _greedy_flags(p)
    _output(p)

    for name, helptext in (("ball", "credible ball"), ("hpd", "HPD region")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("sample")
        p.add_argument("--center", default="auto", help="'auto' or a file with one partition")
        p.add_argument("--loss", type=_loss, default=LossKind.VI)
        _greedy_flags(p)
        _output(p)
        if name == "ball":
            p.add_argument("--alpha", type=_open_unit, default=0.05)
            p.add_argument("--distances", help="CSV of (draw_index, distance)")
            mode = p.add_mutually_exclusive_group()
        else:
            mode = p.add_mutually_exclusive_group(required=True)
        mode.add_argument("--gamma", type=_gamma, help="probability threshold")
        mode.add_argument("--mass", type=_open_unit, help="target posterior mass")

    p = sub.add_parser("psm", help="posterior similarity matrix")
    p.add_argument("sample")
    p.add_argument("--psm-out", "--out", dest="psm_out", required=True, help="PSM CSV path")
    p.add_argument("--vi-lb-optimize", action="store_true")
    _greedy_flags(p)
    _output(p)

    p = sub.add_parser("compare-losses", help="summarise under every loss")
    p.add_argument("sample")
    _greedy_flags(p)
    _output(p)

    p = sub.add_parser("simulate", help="generate datasets and posterior samples")
    sim = p.add_subparsers(dest="kind", required=True)

    q = sim.add_parser("uniform-square")
    q.add_argument("-n", type=_positive_int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--data-out", "--out", dest="data_out", required=True)
    _output(q)

    q = sim.add_parser("gmm")
    q.add_argument("-n", type=_positive_int, default=150)
    q.add_argument("--centers", default="-5,0;0,0;5,0", help="';'-separated points")
    q.add_argument("--sds", type=_floats, default=[0.5])
    q.add_argument("--weights", type=_floats, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--data-out", required=True)
    q.add_argument("--labels-out")
    _output(q)

    q = sim.add_parser("multimodal")
    q.add_argument("--anchors", required=True, help="label file, one anchor per row")
    q.add_argument("--weights", type=_floats, default=None)
    q.add_argument("--flips", type=int, default=0)
    q.add_argument("-S", "--draws", dest="S", type=_positive_int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--sample-out", "--out", dest="sample_out", required=True)
    _output(q)

    q = sim.add_parser("gibbs")
    src = q.add_mutually_exclusive_group()
    src.add_argument("--data", help="CSV dataset (default: fresh uniform-square data)")
    src.add_argument("-n", type=_positive_int, default=200)
    d = GibbsConfig()
    q.add_argument("--K", type=_positive_int, default=d.K)
    q.add_argument("--alpha", type=float, default=d.dirichlet_alpha)
    q.add_argument("--prior-mean", type=_floats, default=[d.prior_mean])
    q.add_argument("--prior-scale", type=float, default=d.prior_scale)
    q.add_argument("--prior-shape", type=float, default=d.prior_shape)
    q.add_argument("--prior-rate", type=float, default=d.prior_rate)
    q.add_argument("--iters", type=_positive_int, default=d.iters)
    q.add_argument("--burnin", type=int, default=d.burnin)
    q.add_argument("--thin", type=_positive_int, default=d.thin)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--sample-out", "--out", dest="sample_out", required=True)
    q.add_argument("--data-out")
    _output(q)
    return parser


def _summarise(sample, loss, args):
    if getattr(args, "exhaustive", False):
        return exhaustive_minimize(sample, loss, limit=args.limit)
    return greedy_minimize(sample, loss, _cfg(args))


def _center(sample, args, inputs):
    if args.center == "auto":
        return _summarise(sample, args.loss, args).partition
    inputs[args.center] = io.sha256_file(args.center)
    center = io.read_partition(args.center)
    if center.n != sample.n_items:
        raise UsageError("center length does not match the sample")
    return center


def run(args) -> tuple[dict, dict, dict]:
    """Execute a parsed command; returns (result payload, inputs, files to write)."""
    inputs: dict = {}
    files: dict = {}
    cmd = args.command
    if cmd in ("summarise", "summarize", "ball", "hpd", "psm", "compare-losses"):
        inputs[args.sample] = io.sha256_file(args.sample)
        sample = io.read_sample(args.sample)

    if cmd in ("summarise", "summarize"):
        res = _summarise(sample, args.loss, args)
        return io.opt_json(res, args.loss.value), inputs, files

    if cmd == "ball":
        center = _center(sample, args, inputs)
        ball = credible_ball(center, sample, args.loss, args.alpha)
        hpd = None
        if args.gamma is not None or args.mass is not None:
            hpd = hpd_region(empirical_pmf(sample), center, args.loss, gamma=args.gamma, mass=args.mass)
        if args.distances:
            rows = "draw_index,distance\n" + "".join(
                f"{i},{d!r}\n" for i, d in enumerate(ball.distances.tolist())
            )
            files[args.distances] = rows
        return io.ball_json(ball, hpd), inputs, files

    if cmd == "hpd":
        center = _center(sample, args, inputs)
        region = hpd_region(empirical_pmf(sample), center, args.loss, gamma=args.gamma, mass=args.mass)
        payload = {"center": center.tolist(), "metric": args.loss.value, "hpd": io.hpd_json(region)}
        return payload, inputs, files

    if cmd == "psm":
        psm = compute_psm(sample)
        files[args.psm_out] = io.format_matrix(psm.probs)
        payload = {"psm": args.psm_out, "N": psm.n}
        if args.vi_lb_optimize:
            res = minimize_vi_lb(psm, _cfg(args))
            payload["vi_lower_bound"] = io.opt_json(res, "vi-lb")
        return payload, inputs, files

    if cmd == "compare-losses":
        rows = []
        for kind in LossKind:
            res = greedy_minimize(sample, kind, _cfg(args))
            rows.append(io.opt_json(res, kind.value))
        return {"rows": rows}, inputs, files

    if cmd == "simulate":
        return _simulate(args, inputs, files)
    raise UsageError(f"unknown command {cmd}")


def _simulate(args, inputs, files):
    kind = args.kind
    if kind == "uniform-square":
        data = gen_uniform_square(args.n, args.seed)
        files[args.data_out] = io.format_matrix(data)
        return {"data": args.data_out, "N": args.n, "seed": args.seed}, inputs, files
    if kind == "gmm":
        centers = [_floats(c) for c in args.centers.split(";") if c.strip()]
        try:
            data, truth = gen_gmm_data(args.n, centers, args.sds if len(args.sds) > 1 else args.sds[0],
                                       args.weights, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        files[args.data_out] = io.format_matrix(data)
        if args.labels_out:
            files[args.labels_out] = io.format_label_matrix(truth.labels)
        return {"data": args.data_out, "N": args.n, "K_true": truth.k, "seed": args.seed}, inputs, files
    if kind == "multimodal":
        inputs[args.anchors] = io.sha256_file(args.anchors)
        anchors = io.parse_label_matrix(Path(args.anchors).read_text())
        try:
            spec = AnchorSpec(list(anchors), args.weights, args.flips)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        sample = gen_multimodal_sample(spec, args.S, args.seed)
        files[args.sample_out] = io.format_label_matrix(sample)
        return {"sample": args.sample_out, "S": args.S, "N": sample.n_items, "seed": args.seed}, inputs, files
    # gibbs
    try:
        cfg = GibbsConfig(
            K=args.K, dirichlet_alpha=args.alpha,
            prior_mean=args.prior_mean[0] if len(args.prior_mean) == 1 else tuple(args.prior_mean),
            prior_scale=args.prior_scale, prior_shape=args.prior_shape, prior_rate=args.prior_rate,
            iters=args.iters, burnin=args.burnin, thin=args.thin, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.data:
        inputs[args.data] = io.sha256_file(args.data)
        data = io.read_dataset(args.data)
    else:
        data = gen_uniform_square(args.n, args.seed)
    if args.data_out:
        files[args.data_out] = io.format_matrix(data)
    try:
        sample = gibbs_gmm(data, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    files[args.sample_out] = io.format_label_matrix(sample)
    k = sample.draw_k
    payload = {
        "sample": args.sample_out,
        "N": int(data.shape[0]),
        "S": sample.n_draws,
        "seed": args.seed,
        "occupied_clusters": {"min": int(k.min()), "mean": float(k.mean()), "max": int(k.max())},
    }
    return payload, inputs, files


_OUT_ATTRS = ("output", "distances", "psm_out", "data_out", "labels_out", "sample_out")


def _check_writable(args) -> None:
    for attr in _OUT_ATTRS:
        path = getattr(args, attr, None)
        if not path:
            continue
        parent = Path(path).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise OSError(f"cannot write {path}")
        if Path(path).is_dir():
            raise OSError(f"{path} is a directory")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        _check_writable(args)
        payload, inputs, files = run(args)
    except (io.LabelFileError,) as exc:
        print(f"clustsum: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ExhaustiveRefused as exc:
        print(f"clustsum: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (UsageError, ValueError) as exc:
        print(f"clustsum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"clustsum: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = {
        "command": ["clustsum", *argv],
        "inputs": inputs,
        "seed": getattr(args, "seed", None),
        "elapsed_seconds": round(time.perf_counter() - start, 6),
        "result": payload,
    }
    try:
        for path, text in files.items():
            io.atomic_write(path, text)
        if args.output:
            io.atomic_write(args.output, io.dumps(report))
        else:
            sys.stdout.write(io.dumps(report))
    except OSError as exc:
        print(f"clustsum: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.command == "compare-losses":
        print(f"{'loss':<8}{'K':>4}{'EPL':>14}", file=sys.stderr)
        for row in payload["rows"]:
            print(f"{row['loss']:<8}{row['K']:>4}{row['epl']:>14.6f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
