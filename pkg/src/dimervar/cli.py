"""Command-line interface: machine-readable JSON on stdout, a one-line
human summary on stderr.  Exit codes: 0 success, 2 invalid input,
3 numeric failure."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import counting, lattice, sampler, svg, thermo, torus, variational
from .errors import DimerError, InputError, NumericError


def _fmt(x: float) -> float:
    return float(f"{x:.12g}")


def _emit(payload: dict, out: str | None, summary: str):
    text = json.dumps(payload)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    print(summary, file=sys.stderr)


def _weights(text: str) -> thermo.WeightVector:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise InputError("--weights expects a,b,c,d")
    return thermo.WeightVector(*parts)


def _tilt(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 2:
        raise InputError("--tilt expects s,t")
    return parts


def _load_region(path: str) -> lattice.Region:
    with open(path) as fh:
        return lattice.region_from_json(fh.read())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dimervar", description=__doc__)
    ap.add_argument("--threads", type=int, default=1, help="worker threads where supported")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="exact tiling count of a lattice region")
    p.add_argument("--region", required=True)
    p.add_argument("--cap", type=int, default=counting.DEFAULT_COUNT_CAP)
    p.add_argument("--out")

    p = sub.add_parser("enumerate", help="stream every tiling of a lattice region")
    p.add_argument("--region", required=True)
    p.add_argument("--limit", type=int, default=counting.DEFAULT_ENUM_CAP)
    p.add_argument("--out", required=True)

    p = sub.add_parser("torus-z", help="partition function of the 2n x 2n torus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--log", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("torus-prob", help="finite-n edge-inclusion probabilities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out")

    p = sub.add_parser("ent", help="local entropy of a tilt")
    p.add_argument("--tilt", required=True)
    p.add_argument("--out")

    p = sub.add_parser("probs", help="edge probabilities from weights or tilt")
    p.add_argument("--weights")
    p.add_argument("--tilt")
    p.add_argument("--out")

    p = sub.add_parser("logz", help="free energy per dimer, log Z")
    p.add_argument("--weights", required=True)
    p.add_argument("--method", choices=("1d", "2d"), default="1d")
    p.add_argument("--out")

    p = sub.add_parser("coupling", help="coupling kernel P at a displacement")
    p.add_argument("--weights", required=True)
    p.add_argument("--disp", required=True, help="dx,dy with dx+dy odd")
    p.add_argument("--out")

    p = sub.add_parser("solve", help="maximize the entropy functional")
    p.add_argument("--region", required=True, help="JSON with a 'polygon' list")
    p.add_argument("--boundary", required=True, help="JSON with 'samples' [[x,y,h],...]")
    p.add_argument("--mesh", type=int, default=64, help="grid steps per unit length")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--out")
    p.add_argument("--svg")

    p = sub.add_parser("sample", help="exact uniform tilings via CFTP")
    p.add_argument("--region", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--svg", help="render the first sample")

    p = sub.add_parser("render", help="render a tiling JSON to SVG")
    p.add_argument("--tiling", required=True)
    p.add_argument("--svg", required=True)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except DimerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _dispatch(args):
    cmd = args.command
    if cmd == "count":
        region = _load_region(args.region)
        n = counting.count_tilings(region, cap=args.cap)
        _emit({"count": str(n)}, args.out, f"{n} tilings")
    elif cmd == "enumerate":
        region = _load_region(args.region)
        k = 0
        with open(args.out, "w") as fh:
            for t in counting.enumerate_tilings(region, limit=args.limit):
                fh.write(lattice.tiling_to_json(t) + "\n")
                k += 1
        print(json.dumps({"count": str(k), "out": args.out}))
        print(f"wrote {k} tilings to {args.out}", file=sys.stderr)
    elif cmd == "torus-z":
        w = _weights(args.weights)
        if args.log:
            val = torus.torus_partition(args.n, w, log=True)
            _emit({"n": args.n, "log_Z": _fmt(val)}, args.out, f"log Z_{args.n} = {val:.12g}")
        else:
            val = torus.torus_partition(args.n, w)
            _emit({"n": args.n, "Z": _fmt(val)}, args.out, f"Z_{args.n} = {val:.12g}")
    elif cmd == "torus-prob":
        w = _weights(args.weights)
        p = torus.edge_probability_finite(args.n, w)
        payload = {k: _fmt(v) for k, v in zip(("p_a", "p_b", "p_c", "p_d"), p.astuple())}
        payload["n"] = args.n
        _emit(payload, args.out, f"p(n={args.n}) = {p.astuple()}")
    elif cmd == "ent":
        s, t = _tilt(args.tilt)
        val = thermo.ent_from_tilt((s, t))
        _emit({"ent": _fmt(val)}, args.out, f"ent({s},{t}) = {val:.12g}")
    elif cmd == "probs":
        if (args.weights is None) == (args.tilt is None):
            raise InputError("give exactly one of --weights or --tilt")
        if args.weights:
            p = thermo.probs_from_weights(_weights(args.weights))
        else:
            p = thermo.probs_from_tilt(_tilt(args.tilt))
        payload = {k: _fmt(v) for k, v in zip(("p_a", "p_b", "p_c", "p_d"), p.astuple())}
        _emit(payload, args.out, f"p = {p.astuple()}")
    elif cmd == "logz":
        w = _weights(args.weights)
        val = thermo.log_Z(w, method=args.method)
        _emit({"log_Z": _fmt(val)}, args.out, f"log Z = {val:.12g}")
    elif cmd == "coupling":
        w = _weights(args.weights)
        dx, dy = (int(x) for x in args.disp.split(","))
        val = thermo.coupling_P(dx, dy, w)
        _emit(
            {"re": _fmt(val.real), "im": _fmt(val.imag)},
            args.out,
            f"P({dx},{dy}) = {val:.12g}",
        )
    elif cmd == "solve":
        with open(args.region) as fh:
            rdata = json.load(fh)
        region = variational.ContinuousRegion(tuple(map(tuple, rdata["polygon"])))
        with open(args.boundary) as fh:
            bdata = json.load(fh)
        boundary = variational.BoundaryData(region, [tuple(s) for s in bdata["samples"]])
        report = variational.solve(region, boundary, 1.0 / args.mesh, levels=args.levels)
        text = report.field.to_json(ent=_fmt(report.ent), residual_norm=_fmt(report.residual_norm))
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        if args.svg:
            svg.render_field(report.field, args.svg)
        print(
            f"Ent = {report.ent:.12g} after {report.iterations} iterations, "
            f"PDE residual {report.residual_norm:.3g}",
            file=sys.stderr,
        )
    elif cmd == "sample":
        region = _load_region(args.region)
        tilings = sampler.sample_tilings(region, seed=args.seed, count=args.count,
                                         threads=args.threads)
        lines = []
        for i, t in enumerate(tilings):
            lines.append(json.dumps({
                "rng": sampler.RNG_NAME,
                "seed": args.seed,
                "sample": i,
                "dominos": sorted([list(d.cell1), list(d.cell2)] for d in t.dominos),
            }))
        if args.out:
            with open(args.out, "w") as fh:
                fh.write("\n".join(lines) + "\n")
        else:
            print("\n".join(lines))
        if args.svg and tilings:
            svg.render_tiling(tilings[0], args.svg)
        print(f"{len(tilings)} exact samples (backend: {sampler.backend()})", file=sys.stderr)
    elif cmd == "render":
        with open(args.tiling) as fh:
            t = lattice.tiling_from_json(fh.read())
        svg.render_tiling(t, args.svg)
        print(json.dumps({"svg": args.svg}))
        print(f"wrote {args.svg}", file=sys.stderr)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
