"""
Command-line front end.

    erstruct estimate   --bfile PREFIX | --text PATH   [--alpha --m --k-coarse --maf-min ...]
    erstruct simulate   --design DESIGN.json --seed S --out PREFIX [--format plink|text]
    erstruct null-cache --n N --m M --seed S --out CACHE
    erstruct spectrum   --bfile PREFIX | --text PATH   --out SCREE.tsv

Exit codes: 0 success, 1 input/validation/I/O error, 2 estimation failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import ERStructError
from .estimator import DEFAULT_ALPHA, default_k_coarse, estimate_k
from .genotype_io import DEFAULT_BLOCK_WIDTH, GenotypeSource, open_matrix_text, open_plink_prefix, write_matrix_text, write_plink
from .goe_null import (
    DEFAULT_REPLICATES,
    NullCache,
    build_null_cache,
    check_replicate_budget,
    read_null_cache,
    write_null_cache,
)
from .normalize_gram import write_gram
from .pipeline import DEFAULT_MAF_MIN, compute_spectrum
from .simulator import design_to_dict, load_design, simulate
from .spectrum import write_scree

log = logging.getLogger("erstruct")

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2


class UsageError(ERStructError):
    pass


def _add_input_args(sp: argparse.ArgumentParser) -> None:
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--bfile", help="PLINK binary prefix (PREFIX.bed/.bim/.fam)")
    src.add_argument("--text", help="delimited text matrix, one row per sample, NA = missing")
    sp.add_argument("--delimiter", default=",", help="text delimiter; 'ws' for whitespace (default ',')")
    sp.add_argument("--maf-min", type=float, default=DEFAULT_MAF_MIN)
    sp.add_argument("--block-width", type=int, default=DEFAULT_BLOCK_WIDTH)
    sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sp.add_argument("--dump-gram", help="write the Gram matrix (upper triangle) to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erstruct", description="Estimate the number of sub-populations from genotypes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate K from a genotype matrix")
    _add_input_args(est)
    est.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    est.add_argument("--m", type=int, default=DEFAULT_REPLICATES, help="GOE replicates")
    est.add_argument("--k-coarse", type=int, default=None, help="coarse upper bound (default floor(n/10))")
    est.add_argument("--seed", type=int, default=0, help="master seed for the GOE replicates")
    est.add_argument("--null-cache", help="reuse this null cache (built and saved here if missing)")
    est.add_argument("--report", default="erstruct_report.json")
    est.add_argument("--emit-scree", help="write the eigenvalue/ratio scree table (TSV)")

    sim = sub.add_parser("simulate", help="simulate genotypes from a JSON design")
    sim.add_argument("--design", required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", required=True, help="output prefix")
    sim.add_argument("--format", choices=("plink", "text"), default="plink")

    nc = sub.add_parser("null-cache", help="pre-build GOE null replicates")
    nc.add_argument("--n", type=int, required=True)
    nc.add_argument("--m", type=int, default=DEFAULT_REPLICATES)
    nc.add_argument("--seed", type=int, required=True)
    nc.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="only used for the m*alpha warning")
    nc.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    nc.add_argument("--out", required=True)

    spc = sub.add_parser("spectrum", help="export the scree table without estimating")
    _add_input_args(spc)
    spc.add_argument("--out", required=True, help="scree TSV path")
    return parser


def _check_common(args: argparse.Namespace) -> None:
    if getattr(args, "alpha", None) is not None and not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if getattr(args, "m", None) is not None and args.m < 1:
        raise UsageError(f"--m must be at least 1, got {args.m}")
    if getattr(args, "block_width", None) is not None and args.block_width < 1:
        raise UsageError("--block-width must be at least 1")
    if getattr(args, "maf_min", None) is not None and args.maf_min < 0.0:
        raise UsageError("--maf-min must be non-negative")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        raise UsageError("--threads must be at least 1")


def _open_source(args: argparse.Namespace) -> GenotypeSource:
    if args.bfile:
        for ext in (".bed", ".bim", ".fam"):
            if not Path(args.bfile + ext).is_file():
                raise FileNotFoundError(f"missing {args.bfile + ext}")
        return open_plink_prefix(args.bfile)
    if not Path(args.text).is_file():
        raise FileNotFoundError(f"missing {args.text}")
    return open_matrix_text(args.text, None if args.delimiter == "ws" else args.delimiter)


def _obtain_cache(args: argparse.Namespace, n: int) -> tuple[NullCache, str]:
    if args.null_cache and Path(args.null_cache).is_file():
        cache = read_null_cache(args.null_cache)
        cache.require_dimension(n)
        if cache.m != args.m:
            log.warning("null cache has m=%d replicates (requested %d); using the cache", cache.m, args.m)
        return cache, args.null_cache
    log.info("building null cache: n=%d, m=%d, seed=%d", n, args.m, args.seed)
    cache = build_null_cache(n, args.m, args.seed, workers=args.threads)
    if args.null_cache:
        write_null_cache(args.null_cache, cache)
    return cache, "built"


def cmd_estimate(args: argparse.Namespace) -> int:
    source = _open_source(args)
    if source.n < 4:
        raise UsageError(f"need at least 4 samples, found {source.n}")
    if args.k_coarse is not None and not 1 <= args.k_coarse <= source.n - 2:
        raise UsageError(f"--k-coarse must lie in [1, {source.n - 2}]")
    cache, cache_origin = _obtain_cache(args, source.n)
    check_replicate_budget(cache.m, args.alpha)
    result = compute_spectrum(source, args.maf_min, args.block_width, workers=args.threads)
    if args.dump_gram:
        write_gram(args.dump_gram, result.gram)
    k_coarse = args.k_coarse if args.k_coarse is not None else default_k_coarse(source.n)
    report = estimate_k(result.spectrum, cache, alpha=args.alpha, k_coarse=k_coarse)
    for step in report.steps:
        log.info("K=%-3d r=%.6f xi=%.6f %s", step.k, step.r_k, step.xi, step.decision.value)
    report.provenance = {
        "tool": "erstruct",
        "version": __version__,
        "config": _config_echo(args),
        "seeds": {"null_cache": cache.seed},
        "null_cache": cache_origin,
        "p_total": source.p,
    }
    report.write_json(args.report)
    if args.emit_scree:
        write_scree(args.emit_scree, result.spectrum)
    if report.failed:
        print("FAILED")
        log.error("estimation failed: no K <= %d passed; try a larger --k-coarse or a smaller --alpha", k_coarse)
        return EXIT_FAILED
    print(report.k_hat)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    design = load_design(args.design)
    sim = simulate(design, seed=args.seed)
    if args.format == "plink":
        write_plink(args.out, sim.matrix, labels=[f"pop{g + 1}" for g in sim.labels])
    else:
        write_matrix_text(args.out + ".txt", sim.matrix)
        with open(args.out + ".labels", "w") as fh:
            fh.writelines(f"pop{g + 1}\n" for g in sim.labels)
    print(f"n={design.n} p={design.p} K={design.k}")
    return EXIT_OK


def cmd_null_cache(args: argparse.Namespace) -> int:
    check_replicate_budget(args.m, args.alpha)
    cache = build_null_cache(args.n, args.m, args.seed, workers=args.threads)
    write_null_cache(args.out, cache)
    print(f"n={cache.n} m={cache.m} seed={cache.seed}")
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    source = _open_source(args)
    result = compute_spectrum(source, args.maf_min, args.block_width, workers=args.threads)
    if args.dump_gram:
        write_gram(args.dump_gram, result.gram)
    write_scree(args.out, result.spectrum)
    print(f"n={result.spectrum.n} p_used={result.spectrum.p_used}")
    return EXIT_OK


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "quiet")}


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "null-cache": cmd_null_cache,
    "spectrum": cmd_spectrum,
}


def _show_warning(message, category, filename, lineno, file=None, line=None) -> None:
    print(f"warning: {message}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr, force=True)
    warnings.showwarning = _show_warning
    try:
        _check_common(args)
        return COMMANDS[args.command](args)
    except (ERStructError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
