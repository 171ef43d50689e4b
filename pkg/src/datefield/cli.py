"""Command-line entry point.

Subcommands: scan, synth, calibrate, train-knn, evaluate.
Exit codes: 0 success, 1 processing failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from datefield import __version__
from datefield.detector import ScanConfig, candidates_to_json, scan_document
from datefield.ioutil import pgm_bytes, png_bytes, write_bytes_atomic, write_text_atomic
from datefield.layout import LayoutParams
from datefield.raster import ImageFormatError, RasterError, ValidationError, load_binary

log = logging.getLogger("datefield")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
IMAGE_SUFFIXES = (".pgm", ".png", ".pnm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg")


class UsageError(Exception):
    pass


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# scan


def _scan_config(args) -> ScanConfig:
    cfg = ScanConfig.load(args.ranges) if args.ranges else ScanConfig()
    layout = cfg.layout.to_dict()
    for key in ("min_gap", "min_ink", "noise_min_pixels"):
        val = getattr(args, key)
        if val is not None:
            layout[key] = val
    updates = {"layout": LayoutParams.from_dict(layout)}
    if args.threshold is not None:
        updates["threshold"] = args.threshold
    if args.spacing_multiplier is not None:
        updates["spacing_multiplier"] = args.spacing_multiplier
    return replace(cfg, **updates)


def _image_inputs(paths) -> list[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(
                os.path.join(p, f) for f in sorted(os.listdir(p)) if f.lower().endswith(IMAGE_SUFFIXES)
            )
        elif os.path.isfile(p):
            out.append(p)
        else:
            raise UsageError(f"no such file or directory: {p}")
    return out


def _scan_one(job):
    path, out_dir, cfg_dict, model_json, overlays = job
    from datefield.knn import load_samples_data, train
    from datefield.overlay import annotate, dates_only

    cfg = ScanConfig.from_dict(cfg_dict)
    model = None
    if model_json is not None:
        model = train(load_samples_data(model_json["samples"]), int(model_json.get("k", 3)))
    img = load_binary(path, cfg.threshold)
    cands = scan_document(img, cfg, model)
    stem = os.path.splitext(os.path.basename(path))[0]
    write_text_atomic(os.path.join(out_dir, stem + ".json"), candidates_to_json(cands))
    if overlays:
        write_bytes_atomic(os.path.join(out_dir, stem + ".dates.pgm"), pgm_bytes(dates_only(img, cands).to_gray()))
        write_bytes_atomic(os.path.join(out_dir, stem + ".boxes.png"), png_bytes(annotate(img, cands)))
    return stem, len(cands)


def cmd_scan(args) -> int:
    inputs = _image_inputs(args.inputs)
    if not inputs:
        raise UsageError("no input images")
    cfg = _scan_config(args)
    model_json = None
    if args.knn:
        if not os.path.isfile(args.knn):
            raise UsageError(f"no such KNN model: {args.knn}")
        with open(args.knn, encoding="utf-8") as fh:
            model_json = json.load(fh)
        if isinstance(model_json, list):
            model_json = {"k": 3, "samples": model_json}
    os.makedirs(args.out, exist_ok=True)
    jobs = [(p, args.out, cfg.to_dict(), model_json, not args.no_overlay) for p in inputs]
    for stem, n in _map(_scan_one, jobs, args.jobs):
        log.info("%s: %d candidate(s)", stem, n)
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def _synth_one(job):
    from datefield.synth import SynthSpec, generate, page_stem, write_page

    spec_dict, out_dir, i = job
    spec = SynthSpec.from_dict(spec_dict)
    img, truth = generate(spec, i)
    write_page(img, truth, out_dir, page_stem(i))
    return i


def cmd_synth(args) -> int:
    from datefield.synth import SynthSpec

    spec = SynthSpec.load(args.spec) if args.spec else SynthSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    spec_dict = spec.to_dict()
    _map(_synth_one, [(spec_dict, args.out, i) for i in range(args.pages)], args.jobs)
    write_text_atomic(os.path.join(args.out, "spec.json"), json.dumps(spec_dict, indent=2) + "\n")
    log.info("wrote %d page(s) to %s", args.pages, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate / train-knn / evaluate


def _corpus_pages(corpus):
    from datefield.evaluation import TRUTH_SUFFIX, truth_stems
    from datefield.synth import GroundTruth

    if not os.path.isdir(corpus):
        raise UsageError(f"no such corpus directory: {corpus}")
    for stem in truth_stems(corpus):
        image = next(
            (os.path.join(corpus, stem + s) for s in IMAGE_SUFFIXES if os.path.isfile(os.path.join(corpus, stem + s))),
            None,
        )
        yield stem, image, GroundTruth.load(os.path.join(corpus, stem + TRUTH_SUFFIX))


def cmd_calibrate(args) -> int:
    from datefield.evaluation import calibrate_ranges, labeled_windows

    cfg = _scan_config(args)
    labeled = []
    for stem, image, truth in _corpus_pages(args.corpus):
        if image is None:
            raise UsageError(f"{stem}: truth file without an image")
        labeled.extend(labeled_windows(load_binary(image, cfg.threshold), truth, cfg))
    ranges = calibrate_ranges(labeled, q=args.q, margin=args.margin)
    out = replace(cfg, ranges=ranges)
    write_text_atomic(args.out, json.dumps(out.to_dict(), indent=2) + "\n")
    log.info("calibrated on %d positive window(s)", sum(1 for _, p in labeled if p))
    return EXIT_OK


def cmd_train_knn(args) -> int:
    from datefield.evaluation import extract_knn_samples, knn_pairs_from_truth
    from datefield.knn import load_samples_data, train

    if os.path.isdir(args.input):
        truths = [t for _, _, t in _corpus_pages(args.input)]
        samples = extract_knn_samples(knn_pairs_from_truth(truths))
    elif os.path.isfile(args.input):
        with open(args.input, encoding="utf-8") as fh:
            data = json.load(fh)
        samples = load_samples_data(data["samples"] if isinstance(data, dict) else data)
    else:
        raise UsageError(f"no such file or directory: {args.input}")
    model = train(samples, args.k)
    write_text_atomic(args.out, model.to_json())
    log.info("trained k=%d on %d sample(s)", model.k, len(model.samples))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from datefield.evaluation import evaluate_dirs

    for d in (args.detections, args.truth):
        if not os.path.isdir(d):
            raise UsageError(f"no such directory: {d}")
    rep, _ = evaluate_dirs(args.detections, args.truth, args.iou, args.include_expected_miss)
    if args.report:
        write_text_atomic(args.report, rep.to_json())
    sys.stdout.write(rep.table())
    return EXIT_OK


# ---------------------------------------------------------------------------


def _layout_flags(p):
    p.add_argument("--threshold", type=int, choices=range(256), metavar="0..255", help="binarization threshold (default: Otsu)")
    p.add_argument("--min-gap", type=int, help="blank rows that separate text lines (default 3)")
    p.add_argument("--min-ink", type=int, help="ink pixels for a row to count as text (default 1)")
    p.add_argument("--noise-min-pixels", type=int, help="drop components lighter than this (default 4)")
    p.add_argument("--spacing-multiplier", type=float, help="gap limit as a multiple of the widest component (default 1.5)")
    p.add_argument("--ranges", "--config", dest="ranges", help="detector config JSON (feature ranges, layout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datefield", description="Localize handwritten numerical date fields.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="detect dates in images")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--knn", help="KNN model JSON for dash/dot refinement")
    p.add_argument("--no-overlay", action="store_true", help="skip overlay images")
    p.add_argument("--jobs", type=int, default=1)
    _layout_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", help="SynthSpec JSON (default spec if omitted)")
    p.add_argument("--out", required=True)
    p.add_argument("--pages", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("calibrate", help="learn feature ranges from a labelled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--q", type=float, default=0.01, help="quantile trim")
    p.add_argument("--margin", type=float, default=1.05)
    _layout_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train-knn", help="train the dash/dot classifier")
    p.add_argument("--in", dest="input", required=True, help="samples JSON or a corpus directory with truth files")
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_train_knn)

    p = sub.add_parser("evaluate", help="score detections against ground truth")
    p.add_argument("--detections", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--report")
    p.add_argument("--include-expected-miss", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, FileNotFoundError, ImageFormatError) as exc:
        print(f"datefield: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, RasterError, ValueError, OSError, KeyError) as exc:
        print(f"datefield: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
