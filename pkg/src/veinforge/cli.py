"""``veinforge`` command line: generate, validate, cluster.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 generator
exhaustion. Progress goes to stderr; results go to the files under --out.
"""

from __future__ import annotations

import argparse
import csv
import logging
import secrets
import shlex
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .metrics import (
    FeatureStats,
    NonLeptokurticError,
    distance_matrix,
    feature_matrix,
    fid,
    hcluster,
    image_kform,
    kform_distance,
    nn_loo_accuracy_features,
)
from .pipeline import (
    CorruptDatasetError,
    GeneratorExhaustedError,
    generate_database,
    iter_images,
    thread_count,
)
from .raster import load_image
from .vig import GENERATORS

log = logging.getLogger("veinforge")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_EXHAUSTED = 0, 1, 2, 3
METRICS = ("fid", "nnloo", "kform")
REPORT_COLUMNS = ("real", "synthetic", "fid", "accuracy", "mean_d_kl", "mean_d_i")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here usage errors are config errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _resolve_seed(seed: Optional[int]) -> int:
    return int(seed) if seed is not None else secrets.randbits(32)


def _announce(argv: Sequence[str], seed: int) -> None:
    print(f"seed: {seed}", flush=True)
    args = list(argv)
    if "--seed" not in args and not any(a.startswith("--seed=") for a in args):
        args += ["--seed", str(seed)]
    print("invocation: veinforge " + " ".join(shlex.quote(a) for a in args), flush=True)


def _threads(args) -> int:
    return args.threads if args.threads else thread_count()


# --------------------------------------------------------------------------
# generate

def cmd_generate(args, argv) -> int:
    if args.subjects < 1:
        raise ConfigError("--subjects must be >= 1")
    if args.size < 16:
        raise ConfigError("--size must be >= 16")
    out = Path(args.out)
    if out.exists() and not out.is_dir():
        raise OSError(f"--out {out} exists and is not a directory")
    seed = _resolve_seed(args.seed)
    _announce(argv, seed)
    start = time.perf_counter()

    def progress(n, attempts, rejections):
        print(f"[generate] {n}/{args.subjects} subjects, {attempts} candidates, "
              f"{rejections} rejected", file=sys.stderr, flush=True)

    try:
        manifest = generate_database(args.subjects, args.generator, seed, out, size=args.size,
                                     workers=_threads(args), progress=progress)
    except GeneratorExhaustedError as exc:
        print(f"generator exhausted: {exc} (rejection rate {exc.rejection_rate:.2%})", file=sys.stderr)
        return EXIT_EXHAUSTED
    elapsed = time.perf_counter() - start
    print(f"admitted: {len(manifest.subjects)}")
    print(f"rejected: {manifest.rejections}")
    print(f"elapsed: {elapsed:.1f} s")
    return EXIT_OK


# --------------------------------------------------------------------------
# validate

def _sample(paths: list, frac: float, seed: int) -> list:
    k = min(len(paths), max(2, int(round(frac * len(paths)))))
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(paths), size=k, replace=False))
    return [paths[i] for i in idx]


def _image_dir(path: str, flag: str) -> list:
    p = Path(path)
    if not p.is_dir():
        raise OSError(f"{flag} {p} is not a readable directory")
    files = iter_images([p])
    if len(files) < 2:
        raise OSError(f"{flag} {p} holds fewer than 2 PNG/PGM images")
    return files


def _fits(images, names) -> list:
    out = []
    for img, name in zip(images, names):
        try:
            out.append(image_kform(img))
        except NonLeptokurticError as exc:
            log.warning("skipping %s: %s", name, exc)
    return out


def _mean_distance(real, synth, kind) -> float:
    values = [kform_distance(a, b, kind) for a in real for b in synth]
    finite = [v for v in values if np.isfinite(v)]
    if len(finite) < len(values):
        log.warning("%d of %d d_%s values are infinite (p <= 1/4) and were left out",
                    len(values) - len(finite), len(values), "I" if kind == "l2" else "KL")
    return float(np.mean(finite)) if finite else float("nan")


def cmd_validate(args, argv) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = sorted(set(metrics) - set(METRICS))
    if unknown or not metrics:
        raise ConfigError(f"unknown metric(s) {', '.join(unknown) or '(none)'}; choose from {', '.join(METRICS)}")
    if not 0 < args.sample_frac <= 1:
        raise ConfigError("--sample-frac must lie in (0, 1]")
    real_files = _image_dir(args.real, "--real")
    synth_files = _image_dir(args.synthetic, "--synthetic")
    seed = _resolve_seed(args.seed)
    _announce(argv, seed)

    # the same seed for both sets: validating a directory against itself
    # compares identical subsets
    real_files = _sample(real_files, args.sample_frac, seed)
    synth_files = _sample(synth_files, args.sample_frac, seed)
    print(f"[validate] {len(real_files)} real, {len(synth_files)} synthetic images",
          file=sys.stderr, flush=True)
    real = [load_image(p) for p in real_files]
    synth = [load_image(p) for p in synth_files]

    row = {"real": str(args.real), "synthetic": str(args.synthetic),
           "fid": "", "accuracy": "", "mean_d_kl": "", "mean_d_i": ""}
    if "fid" in metrics or "nnloo" in metrics:
        fr, fs = feature_matrix(real), feature_matrix(synth)
        if "fid" in metrics:
            row["fid"] = repr(fid(FeatureStats.from_features(fr), FeatureStats.from_features(fs)))
        if "nnloo" in metrics:
            row["accuracy"] = repr(nn_loo_accuracy_features(fr, fs))
    if "kform" in metrics:
        kr = _fits(real, real_files)
        ks = _fits(synth, synth_files)
        if kr and ks:
            row["mean_d_kl"] = repr(_mean_distance(kr, ks, "kl"))
            row["mean_d_i"] = repr(_mean_distance(kr, ks, "l2"))
        else:
            log.warning("no leptokurtic images on one side; K-form distances left empty")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerow(row)
    print(f"report: {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# cluster

def _parse_group(arg: str) -> tuple[str, Path]:
    name, sep, path = arg.partition("=")
    if not sep or not name or not path:
        raise ConfigError(f"--group expects name=dir, got {arg!r}")
    return name, Path(path)


def cmd_cluster(args, argv) -> int:
    groups = [_parse_group(g) for g in args.group]
    if len({name for name, _ in groups}) != len(groups):
        raise ConfigError("group names must be unique")
    files = []
    for name, path in groups:
        if not path.exists():
            raise OSError(f"group {name}: {path} does not exist")
        found = iter_images([path])
        if not found:
            log.warning("group %s: no PNG/PGM images under %s", name, path)
        files.extend((name, f) for f in found)
    seed = _resolve_seed(args.seed)
    _announce(argv, seed)

    labels, leaf_groups, params, skipped = [], [], [], []
    for name, f in files:
        try:
            kf = image_kform(load_image(f))
        except NonLeptokurticError as exc:
            log.warning("skipping %s: %s", f, exc)
            skipped.append({"file": str(f), "group": name, "reason": "non-leptokurtic"})
            continue
        if args.distance == "l2" and kf.p <= 0.25:
            log.warning("skipping %s: p=%.3f <= 1/4, density not square-integrable", f, kf.p)
            skipped.append({"file": str(f), "group": name, "reason": "p <= 1/4"})
            continue
        labels.append(str(f))
        leaf_groups.append(name)
        params.append(kf)
    if len(params) < 2:
        raise ConfigError(f"only {len(params)} usable image(s); clustering needs at least 2")
    print(f"[cluster] {len(params)} images, {len(skipped)} skipped", file=sys.stderr, flush=True)

    d = distance_matrix(params, args.distance, workers=_threads(args))
    dendro = hcluster(d)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dendro.to_json(
        labels, leaf_groups,
        distance=args.distance,
        kforms=[{"p": k.p, "c": k.c} for k in params],
        skipped=skipped,
    ), encoding="utf-8")
    print(f"dendrogram: {out}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="veinforge", description="Synthetic palm-vein database generator and validator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log each IUD decision")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (random and printed when omitted)")
    common.add_argument("--threads", type=int, help="worker threads (default: VEINFORGE_THREADS or CPU count)")

    g = sub.add_parser("generate", parents=[common], help="build a synthetic database")
    g.add_argument("--subjects", type=int, required=True)
    g.add_argument("--generator", choices=GENERATORS, default="physarum")
    g.add_argument("--out", required=True, help="dataset directory")
    g.add_argument("--size", type=int, default=128, help="ROI side in pixels")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", parents=[common], help="compare two image directories")
    v.add_argument("--real", required=True)
    v.add_argument("--synthetic", required=True)
    v.add_argument("--metrics", default="fid,nnloo,kform", help="comma list of fid, nnloo, kform")
    v.add_argument("--sample-frac", type=float, default=0.10)
    v.add_argument("--out", required=True, help="CSV report path")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("cluster", parents=[common], help="K-form dendrogram over labelled image groups")
    c.add_argument("--group", action="append", required=True, metavar="NAME=DIR")
    c.add_argument("--distance", choices=("kl", "l2"), default="l2")
    c.add_argument("--out", required=True, help="dendrogram JSON path")
    c.set_defaults(func=cmd_cluster)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads is not None and args.threads < 1:
        print("veinforge: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, argv)
    except (ConfigError, ValueError) as exc:
        print(f"veinforge: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CorruptDatasetError) as exc:
        print(f"veinforge: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
