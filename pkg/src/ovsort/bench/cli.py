"""``ovsort-bench``: run verified timing grids or the property battery.

Exit status is 0 only when every run verified (and, with ``--verify-only``,
every property held).  Usage errors exit with 2.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from ..core_sort import BaseSortKind
from ..errors import OvsortError
from ..keys import read_keyfile, write_keyfile
from .checks import verify_suite
from .grid import ALGOS, DEFAULT_MAX_N, ExperimentSpec, run_grid
from .render import FORMATS, render


def _int_list(text: str) -> tuple[int, ...]:
    try:
        # accept 1e6-style sizes as long as they are whole numbers
        values = [int(v) if v.strip().lstrip("-").isdigit() else int(float(v)) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return tuple(values)


def _a_list(text: str) -> tuple[float | None, ...]:
    out: list[float | None] = []
    for v in text.split(","):
        if v.strip() == "default":
            out.append(None)
            continue
        try:
            out.append(float(v))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad a value {v!r}") from None
    return tuple(out)


def _base_list(text: str) -> tuple[BaseSortKind, ...]:
    try:
        return tuple(BaseSortKind.parse(v.strip()) for v in text.split(","))
    except OvsortError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ovsort-bench", description=__doc__.splitlines()[0])
    ap.add_argument("--algo", choices=ALGOS, default="sqran")
    ap.add_argument("--base", type=_base_list, default=(BaseSortKind.QS,), help="comma list of qs, hs, rq, ref")
    ap.add_argument("--n", type=_int_list, default=(1_024_000,), help="comma list of input sizes")
    ap.add_argument("--p", type=_int_list, default=(4, 32, 64, 128, 256), help="comma list of sequence counts")
    ap.add_argument("--r", type=_int_list, default=(1,), help="deterministic oversampling factors")
    ap.add_argument("--a", type=_a_list, default=(None,), help="randomized sample exponents; 'default' means s = ceil(lg^2 n)")
    ap.add_argument("--threads", type=_int_list, default=None, help="worker threads for --algo mc (default 4)")
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--keylen", type=int, default=32)
    ap.add_argument("--distribution", default="uniform-bytes",
                    help="uniform-bytes, sorted, reverse-sorted, constant, few-distinct(d)")
    ap.add_argument("--format", choices=FORMATS, default="table")
    ap.add_argument("--split-strategy", choices=("binary-search", "merge"), default="binary-search")
    ap.add_argument("--parallel-merge", action="store_true", help="also distribute the bucket merges (mc only)")
    ap.add_argument("--max-n-override", action="store_true", help=f"allow n above {DEFAULT_MAX_N}")
    ap.add_argument("--verify-only", action="store_true", help="run the property battery instead of a grid")
    ap.add_argument("--quick", action="store_true", help="with --verify-only: smaller sizes, a smoke test")
    ap.add_argument("--in", dest="infile", metavar="KEYFILE", help="sort this key file instead of generated inputs")
    ap.add_argument("--out", dest="outfile", metavar="KEYFILE", help="write the last verified sorted output here")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.verify_only:
        ok, _ = verify_suite(quick=args.quick)
        return 0 if ok else 1

    threads = args.threads or ((4,) if args.algo == "mc" else (1,))
    try:
        spec = ExperimentSpec(
            algo=args.algo,
            n_list=args.n,
            p_list=args.p,
            r_list=args.r,
            a_list=args.a,
            bases=args.base,
            threads=threads,
            trials=args.trials,
            seed=args.seed,
            keylen=args.keylen,
            distribution=args.distribution,
            split_strategy=args.split_strategy,
            parallel_merge=args.parallel_merge,
            max_n=sys.maxsize if args.max_n_override else DEFAULT_MAX_N,
        )
        source = read_keyfile(args.infile) if args.infile else None
        if source is not None and source.n > spec.max_n:
            ap.error(f"key file holds {source.n} keys, above the cap {spec.max_n}; pass --max-n-override")
    except OvsortError as exc:
        ap.error(str(exc))
    except OSError as exc:
        ap.error(f"cannot read {args.infile}: {exc}")

    result = run_grid(spec, source)
    print(render(result.rows, args.format))
    if args.outfile:
        if result.last_output is None:
            print("no verified output to write", file=sys.stderr)
            return 1
        write_keyfile(result.last_output, args.outfile)
    return 0 if result.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
