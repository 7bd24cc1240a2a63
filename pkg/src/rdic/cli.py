"""``rdic`` command line.

Exit codes: 0 success, 1 usage error, 2 parse / format error, 3 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .imagecore import PnmError, read_pfm, read_pnm, write_pfm, write_pnm
from .jpegcodec import JpegError, decode, encode
from .lrp import DEFAULT_EPSILON, DegenerateDenominatorError, LrpError, relevance_of_image
from .nn import ModelFormatError, ShapeError, load_network
from .pipeline import PipelineError, RdicConfig, benchmark_corpus, compress_with_mask, run_rdic
from .roimask import dilate, read_mask, spatial_relevance, threshold_mask, write_mask

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_PIPELINE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text):
    if text == "argmax":
        return "argmax"
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError("seed is 'argmax' or comma-separated floats") from None


def _quality(text):
    q = int(text)
    if not 1 <= q <= 100:
        raise argparse.ArgumentTypeError("quality must be in 1..100")
    return q


def _write_report(path, report):
    with open(path, "w") as f:
        f.write(report.to_json() + "\n")


def cmd_lrp(args):
    net = load_network(args.model)
    img = read_pnm(args.image)
    try:
        rel = relevance_of_image(net, img, args.epsilon, args.seed)
    except (ShapeError, LrpError, DegenerateDenominatorError, ValueError) as e:
        raise PipelineError("relevance", e) from e
    write_pfm(spatial_relevance(rel.reshape(img.channels, img.height, img.width)), args.out)


def cmd_mask(args):
    rel = read_pfm(args.relevance)
    mask = dilate(threshold_mask(rel), args.dilate_radius, args.dilate_iters)
    write_mask(mask, args.out)


def cmd_jpeg(args):
    with open(args.out, "wb") as f:
        f.write(encode(read_pnm(args.image), args.quality))


def cmd_decode(args):
    with open(args.inp, "rb") as f:
        write_pnm(decode(f.read()), args.out)


def cmd_compress(args):
    img = read_pnm(args.image)
    mask = read_mask(args.mask)
    stream, _, report = compress_with_mask(img, mask, args.q_roi, args.q_bg)
    with open(args.out, "wb") as f:
        f.write(stream)
    if args.report:
        _write_report(args.report, report)


def _config(args):
    return RdicConfig(q_roi=args.q_roi, q_bg=args.q_bg, epsilon=args.epsilon,
                      dilate_radius=args.dilate_radius, dilate_iterations=args.dilate_iters,
                      seed_mode=args.seed)


def cmd_pipeline(args):
    net = load_network(args.model)
    img = read_pnm(args.image)
    stream, mask, report = run_rdic(img, net, _config(args))
    with open(args.out, "wb") as f:
        f.write(stream)
    if args.mask_out:
        write_mask(mask, args.mask_out)
    if args.report:
        _write_report(args.report, report)


def cmd_bench(args):
    net = load_network(args.model) if args.model else None
    summary = benchmark_corpus(args.corpus, net, _config(args), report_path=args.report,
                               relevance_suffix=args.relevance_suffix, csv_path=args.csv)
    brief = {k: v for k, v in summary.items() if k != "per_image"}
    print(json.dumps(brief, indent=2))


def _add_rdic_options(p):
    p.add_argument("--q-roi", type=_quality, default=100)
    p.add_argument("--q-bg", type=_quality, default=50)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--dilate-radius", type=int, default=1)
    p.add_argument("--dilate-iters", type=int, default=2)
    p.add_argument("--seed", type=_seed, default="argmax")


def build_parser():
    parser = _Parser(prog="rdic", description="Relevance-guided region-adaptive JPEG compression")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lrp", help="epsilon-LRP relevance map of an image (PFM)")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--seed", type=_seed, default="argmax")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lrp)

    p = sub.add_parser("mask", help="threshold + dilate a relevance map into a PGM mask")
    p.add_argument("--relevance", required=True)
    p.add_argument("--dilate-radius", type=int, default=1)
    p.add_argument("--dilate-iters", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("jpeg", help="uniform-quality baseline JPEG")
    p.add_argument("--image", required=True)
    p.add_argument("--quality", type=_quality, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_jpeg)

    p = sub.add_parser("decode", help="decode a baseline JPEG to PGM/PPM")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("compress", help="region-adaptive JPEG from an image and a mask")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--q-roi", type=_quality, default=100)
    p.add_argument("--q-bg", type=_quality, default=50)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("pipeline", help="model -> relevance -> mask -> adaptive JPEG")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    _add_rdic_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", help="corpus size / fidelity benchmark")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model")
    p.add_argument("--relevance-suffix", default=".pfm")
    _add_rdic_options(p)
    p.add_argument("--report")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("pipeline", "bench"):
            try:
                _config(args)
            except ValueError as e:
                parser.error(str(e))
    except SystemExit as e:
        return e.code
    try:
        args.func(args)
    except (PnmError, ModelFormatError, JpegError) as e:
        print(f"rdic: format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except (PipelineError, ShapeError) as e:
        print(f"rdic: pipeline error: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    except OSError as e:
        print(f"rdic: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
