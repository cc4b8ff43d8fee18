"""``kspacebench`` command line.

Images (phantoms, reconstructions) are stored as single-coil KSR files.
Exit codes: 0 success, 2 parameter error, 3 data-format error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bench import METHODS, BenchConfig, reconstruct, run_bench, summarize
from .calib import estimate_sensitivities
from .core import AccelerationSpec, GridShape, KspaceBenchError, ParameterError, Scheme
from .io import FormatError, read_ksr, read_mask, read_maps, write_ksr, write_mask, write_maps, write_metrics_csv, write_pgm
from .masks import SchemeParams, generate
from .metrics import ReconReport, evaluate
from .operators import apply_mask, ifft2c, rss
from .phantom import CoilArraySpec, PhantomSpec, make_coils, make_phantom, simulate_acquisition

logger = logging.getLogger("kspacebench")

EXIT_OK, EXIT_PARAM, EXIT_FORMAT, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParameterError(message)


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _scheme_list(text: str) -> list[Scheme]:
    if text.strip() == "all":
        return list(Scheme)
    return [Scheme.parse(t.strip()) for t in text.split(",") if t.strip()]


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment and keys use dashes or underscores."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    # config values become defaults so explicit flags win
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None:
            raise ParameterError(f"unknown config key {key!r}")
        defaults[key] = action.type(value) if action.type else value
        action.required = False
    parser.set_defaults(**defaults)


def _write_image(path, img) -> None:
    write_ksr(path, np.asarray(img)[None], dtype=1)


def _read_image(path) -> np.ndarray:
    data = read_ksr(path)
    if data.shape[0] != 1:
        raise FormatError(f"{path}: expected a single-coil image, got {data.shape[0]} coils")
    img = data[0]
    if np.any(img.imag != 0):
        return np.abs(img)
    return img.real


# ------------------------------------------------------------------ commands


def cmd_mask_gen(args) -> int:
    shape = GridShape.of(args.shape)
    params = SchemeParams(args.scheme, AccelerationSpec(args.accel, args.acs_frac, args.tolerance), seed=args.seed)
    mask = generate(shape, params)
    write_mask(args.out, mask)
    if args.pgm:
        write_pgm(args.pgm, mask)
    print(f"{mask.scheme.label} {shape.n_x}x{shape.n_y} R_target={args.accel:g} R_achieved={mask.acceleration:.4f} sampled={mask.count}")
    return EXIT_OK


def cmd_phantom(args) -> int:
    shape = GridShape.of(args.shape)
    img = make_phantom(PhantomSpec(shape, args.kind, seed=args.seed))
    maps = make_coils(CoilArraySpec(args.coils, seed=args.seed), shape)
    ksp = simulate_acquisition(img, maps, args.noise, seed=args.seed)
    write_ksr(args.out, ksp)
    if args.maps_out:
        write_maps(args.maps_out, maps)
    if args.truth_out:
        _write_image(args.truth_out, rss(ifft2c(ksp)))
    return EXIT_OK


def cmd_subsample(args) -> int:
    ksp = read_ksr(args.input)
    mask = read_mask(args.mask)
    write_ksr(args.out, apply_mask(ksp, mask))
    return EXIT_OK


def cmd_estimate_sens(args) -> int:
    ksp = read_ksr(args.input)
    mask = read_mask(args.mask)
    write_maps(args.out, estimate_sensitivities(ksp, mask))
    return EXIT_OK


def cmd_recon(args) -> int:
    ksp = read_ksr(args.input)
    mask = read_mask(args.mask)
    maps = read_maps(args.maps) if args.maps else None
    cfg = BenchConfig(method=args.method, lam=args.lam, max_iters=args.max_iters)
    img = reconstruct(args.method, ksp, mask, cfg, maps)
    _write_image(args.out, img)
    return EXIT_OK


def cmd_eval(args) -> int:
    ref = _read_image(args.ref)
    pred = _read_image(args.pred)
    m = evaluate(ref, pred)
    print(f"ssim={m.ssim:.6f} psnr={m.psnr_db:.4f} nmse={m.nmse:.6e}")
    if args.out:
        write_metrics_csv(args.out, [ReconReport(Path(args.pred).stem, args.scheme_label, args.accel, m)])
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.out is None:
        raise ParameterError("bench needs --out DIR")
    cfg = BenchConfig(
        schemes=args.scheme,
        accels=args.accel,
        acs_fracs=args.acs_frac,
        cases=args.cases,
        slices=args.slices,
        shape=GridShape.of(args.shape),
        coils=args.coils,
        noise=args.noise,
        method=args.method,
        lam=args.lam,
        max_iters=args.max_iters,
        seed=args.seed,
        out=Path(args.out),
    )
    reports = run_bench(cfg, workers=args.workers)
    failed = sum(r.failed for r in reports)
    for group, R, s, p, n_mse, n in summarize(reports):
        print(f"{group:16s} R={R:<4g} ssim={s:.4f} psnr={p:7.3f} nmse={n_mse:.4e} n={n}")
    print(f"{len(reports)} rows, {failed} failed -> {Path(args.out) / 'metrics.csv'}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _shape_arg(text: str) -> GridShape:
    return GridShape.of(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kspacebench", description="k-space subsampling benchmark toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key = value file; flags override it")
        return p

    mask = sub.add_parser("mask", help="sampling masks")
    mask_sub = mask.add_subparsers(dest="mask_command", required=True, parser_class=_Parser)
    gen = common(mask_sub.add_parser("gen", help="generate an MSK1 mask"))
    gen.add_argument("--scheme", type=Scheme.parse, required=True)
    gen.add_argument("--accel", type=float, required=True)
    gen.add_argument("--acs-frac", type=float, default=0.08)
    gen.add_argument("--tolerance", type=float, default=0.10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--shape", type=_shape_arg, default=GridShape(64, 64))
    gen.add_argument("--out", required=True)
    gen.add_argument("--pgm", help="also write a PGM preview")
    gen.set_defaults(func=cmd_mask_gen)

    ph = common(sub.add_parser("phantom", help="simulate a fully sampled multi-coil acquisition"))
    ph.add_argument("--shape", type=_shape_arg, default=GridShape(64, 64))
    ph.add_argument("--kind", default="ellipse-standard", choices=["ellipse-standard", "random-ellipses"])
    ph.add_argument("--coils", type=int, default=8)
    ph.add_argument("--noise", type=float, default=0.0)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--out", required=True, help="k-space KSR")
    ph.add_argument("--maps-out", help="true sensitivity maps KSR")
    ph.add_argument("--truth-out", help="RSS reference image KSR")
    ph.set_defaults(func=cmd_phantom)

    ss = common(sub.add_parser("subsample", help="retrospectively mask k-space"))
    ss.add_argument("--in", dest="input", required=True)
    ss.add_argument("--mask", required=True)
    ss.add_argument("--out", required=True)
    ss.set_defaults(func=cmd_subsample)

    es = common(sub.add_parser("estimate-sens", help="estimate sensitivity maps from the ACS"))
    es.add_argument("--in", dest="input", required=True)
    es.add_argument("--mask", required=True)
    es.add_argument("--out", required=True)
    es.set_defaults(func=cmd_estimate_sens)

    rc = common(sub.add_parser("recon", help="reconstruct subsampled k-space"))
    rc.add_argument("--in", dest="input", required=True)
    rc.add_argument("--mask", required=True)
    rc.add_argument("--maps", help="sensitivity maps KSR; estimated from the ACS when omitted")
    rc.add_argument("--method", choices=METHODS, default="cg")
    rc.add_argument("--lam", type=float, default=1e-4)
    rc.add_argument("--max-iters", type=int, default=50)
    rc.add_argument("--out", required=True)
    rc.set_defaults(func=cmd_recon)

    ev = common(sub.add_parser("eval", help="score a reconstruction against a reference"))
    ev.add_argument("--ref", required=True)
    ev.add_argument("--pred", required=True)
    ev.add_argument("--scheme-label", default="-")
    ev.add_argument("--accel", type=float, default=1.0)
    ev.add_argument("--out", help="CSV file")
    ev.set_defaults(func=cmd_eval)

    b = common(sub.add_parser("bench", help="scheme x acceleration sweep"))
    b.add_argument("--scheme", type=_scheme_list, default=list(Scheme), help="comma list or 'all'")
    b.add_argument("--accel", type=_float_list, default=[2.0, 4.0, 8.0])
    b.add_argument("--acs-frac", type=_float_list, default=[0.16, 0.08, 0.04])
    b.add_argument("--cases", type=int, default=4)
    b.add_argument("--slices", type=int, default=1)
    b.add_argument("--shape", type=_shape_arg, default=GridShape(64, 64))
    b.add_argument("--coils", type=int, default=8)
    b.add_argument("--noise", type=float, default=1e-3)
    b.add_argument("--method", choices=METHODS, default="cg")
    b.add_argument("--lam", type=float, default=1e-4)
    b.add_argument("--max-iters", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, help="worker processes; default from KSPACEBENCH_WORKERS")
    b.add_argument("--out", help="output directory")
    b.set_defaults(func=cmd_bench)
    return parser


def _subparser_for(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.ArgumentParser:
    p = parser
    for token in argv:
        action = next((a for a in p._actions if isinstance(a, argparse._SubParsersAction)), None)
        if action is None:
            break
        if token in action.choices:
            p = action.choices[token]
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            _apply_config(_subparser_for(parser, argv), read_config(known.config))
        args = parser.parse_args(argv)
        return args.func(args)
    except FormatError as exc:
        print(f"kspacebench: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except KspaceBenchError as exc:
        print(f"kspacebench: {exc}", file=sys.stderr)
        return getattr(exc, "code", 1)
    except (ValueError, TypeError) as exc:
        print(f"kspacebench: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"kspacebench: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"kspacebench: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
