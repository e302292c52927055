"""Command-line front end.

    handshape classify IMAGE --templates M [--annotate OUT]
    handshape run DIR --templates M [--background PATH|first-frame] --out OUT
    handshape evaluate DIR|LABELS.csv [--templates M] --out OUT
    handshape synth [SPEC.json] --out OUT [--seed N]
    handshape tables
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path
from typing import Sequence

from . import synth
from .annotate import annotate
from .config import FIRST_FRAME, ConfigError, RunConfig, resolve
from .evaluation import ConfusionMatrix, MetricsReport, format_report, format_summary, reference_summary, summary_row
from .imagecore import ImageFormatError, as_gray, load_image, save_image, to_grayscale
from .matching import HAND_LABELS, ClassLabel, NoValidScaleError, classify, load_manifest
from .moments import BoundingBox
from .tracking import NO_HAND_MESSAGE, FrameDecision, process_frame, run_pipeline

IMAGE_SUFFIXES = (".pgm", ".ppm", ".png")


class CliError(Exception):
    pass


def _gray(path: Path):
    img = load_image(path)
    return to_grayscale(img) if img.ndim == 3 else as_gray(img)


def _templates(cfg: RunConfig):
    if cfg.templates is None:
        raise CliError("no template manifest given (use --templates or set 'templates' in the config)")
    return load_manifest(cfg.templates)


def list_frames(directory: Path) -> list[Path]:
    """Image files in lexicographic filename order."""
    if not directory.is_dir():
        raise CliError(f"{directory} is not a directory")
    frames = sorted((p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES), key=lambda p: p.name)
    if not frames:
        raise CliError(f"{directory} contains no .pgm/.ppm/.png frames")
    return frames


def _label_text(label: ClassLabel) -> str:
    return NO_HAND_MESSAGE if label is ClassLabel.NO_HAND else label.value


# --- classify ---

def cmd_classify(args, cfg: RunConfig) -> int:
    templates = _templates(cfg)
    frame = _gray(Path(args.image))
    label, results = classify(frame, templates, cfg.match())
    top = max(results, key=lambda r: r.score)
    print(f"{_label_text(label)}  score={top.score:.4f}  scale={top.scale:g}  offset=({top.u}, {top.v})")
    for r in results:
        print(f"  {r.label.value:<10} {r.score:.4f}  scale={r.scale:g}  offset=({r.u}, {r.v})")
    if args.annotate:
        lines = (f"{_label_text(label)} {top.score:.4f}",)
        box = None
        if label is not ClassLabel.NO_HAND:
            box = BoundingBox(top.u, top.v, top.u + top.width - 1, top.v + top.height - 1)
        save_image(annotate(frame, box=box, lines=lines), args.annotate)
    return 0


# --- run ---

def _decision_lines(d: FrameDecision) -> tuple[str, ...]:
    lines = [_label_text(d.label) if d.score is None else f"{_label_text(d.label)} {d.score:.4f}"]
    if d.moving:
        lines.append("MOVING")
    if d.message and d.message != NO_HAND_MESSAGE:
        lines.append(d.message)
    return tuple(lines)


def cmd_run(args, cfg: RunConfig) -> int:
    templates = _templates(cfg)
    paths = list_frames(Path(args.frames))
    frames = [_gray(p) for p in paths]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise CliError(f"frames have mixed dimensions: {sorted(s[::-1] for s in shapes)}")
    if cfg.background == FIRST_FRAME:
        background = frames[0]
    else:
        background = _gray(Path(cfg.background))
    decisions = run_pipeline(frames, background, templates, cfg.pipeline(), names=[p.name for p in paths])
    out = Path(cfg.out)
    ann_dir = out / "annotated"
    ann_dir.mkdir(parents=True, exist_ok=True)
    with (out / "decisions.jsonl").open("w") as fh:
        for d in decisions:
            fh.write(d.to_json() + "\n")
    for path, frame, d in zip(paths, frames, decisions):
        img = annotate(frame, box=d.box, center=d.centroid, lines=_decision_lines(d))
        save_image(img, ann_dir / (path.stem + ".pgm"))
    moving = sum(d.moving for d in decisions)
    print(f"{len(decisions)} frames, {moving} moving, log written to {out / 'decisions.jsonl'}")
    return 0


# --- evaluate ---

def _read_labels(path: Path) -> list[tuple[Path, ClassLabel, ClassLabel | None]]:
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "frame" not in reader.fieldnames:
            raise CliError(f"{path}: labels file needs a 'frame' column")
        actual_key = "actual" if "actual" in reader.fieldnames else "label"
        if actual_key not in reader.fieldnames:
            raise CliError(f"{path}: labels file needs a 'label' (or 'actual') column")
        for row in reader:
            predicted = row.get("predicted") or None
            rows.append((path.parent / row["frame"], ClassLabel.parse(row[actual_key]),
                         ClassLabel.parse(predicted) if predicted else None))
    return rows


def _labeled_dirs(root: Path) -> list[tuple[Path, ClassLabel, None]]:
    rows = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        try:
            label = ClassLabel.parse(sub.name)
        except ValueError:
            continue
        for p in list_frames(sub):
            rows.append((p, label, None))
    if not rows:
        raise CliError(f"{root}: no labels.csv and no per-class subdirectories")
    return rows


def cmd_evaluate(args, cfg: RunConfig) -> int:
    source = Path(args.source)
    if source.is_dir():
        rows = _read_labels(source / "labels.csv") if (source / "labels.csv").exists() else _labeled_dirs(source)
        image_dir = source
    elif source.is_file():
        rows = _read_labels(source)
        image_dir = source.parent
    else:
        raise CliError(f"{source} does not exist")
    labeled = {p.resolve() for p, _, _ in rows}
    if (image_dir / "frames").is_dir():
        for p in list_frames(image_dir / "frames"):
            if p.resolve() not in labeled:
                raise CliError(f"frame {p.name} has no ground-truth label")

    needs_images = any(pred is None for _, _, pred in rows)
    templates = _templates(cfg) if needs_images else None
    background = None
    if needs_images and cfg.background != FIRST_FRAME:
        background = _gray(Path(cfg.background))
    pcfg = cfg.pipeline()

    classes = list(HAND_LABELS) + ([ClassLabel.NO_HAND] if cfg.include_nohand else [])
    pairs, dropped = [], 0
    for path, actual, predicted in rows:
        if predicted is None:
            if not path.exists():
                raise CliError(f"label given for missing frame {path}")
            frame = _gray(path)
            if background is not None:
                _, decision = process_frame(pcfg.tracker, frame, background, templates, pcfg)
                predicted = decision.label
            else:
                predicted, _ = classify(frame, templates, pcfg.match)
        if ClassLabel.NO_HAND in (actual, predicted) and not cfg.include_nohand:
            dropped += 1
            continue
        pairs.append((actual, predicted))
    cm = ConfusionMatrix.from_pairs(classes, pairs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "confusion.csv").write_text(cm.to_csv())
    print(cm.to_csv(), end="")
    print()
    if cm.total == 0:
        raise CliError("no labeled outcomes to evaluate")
    report = MetricsReport.from_matrix(cm)
    print(format_report(report))
    print()
    print(format_summary([summary_row(args.name, cm)]))
    if dropped:
        print(f"\n{dropped} NoHand outcome(s) excluded from the matrix")
    return 0


def cmd_tables(args, cfg: RunConfig) -> int:
    rows = reference_summary()
    print(format_summary(rows))
    flagged = [r.name for r in rows if r.flagged]
    if flagged:
        print(f"\nrows deviating from the reference values beyond display rounding: {', '.join(flagged)}")
    return 0


# --- synth ---

_SYNTH_KEYS = {f.name for f in dataclasses.fields(synth.SynthSpec)}


def _pair(text: str) -> tuple[int, int]:
    a, b = text.split(",")
    return int(a), int(b)


def cmd_synth(args, cfg: RunConfig) -> int:
    values = {}
    if args.spec:
        doc = json.loads(Path(args.spec).read_text())
        unknown = sorted(set(doc) - _SYNTH_KEYS - {"corpus", "scales"})
        if unknown:
            raise CliError(f"{args.spec}: unknown synth keys {unknown}")
        values.update(doc)
    for key in ("kind", "frames", "scale", "noise_sigma"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    for key in ("start", "step"):
        if getattr(args, key) is not None:
            values[key] = _pair(getattr(args, key))
    if args.corpus is not None:
        values["corpus"] = args.corpus
    values["seed"] = cfg.seed
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc.strerror}") from None
    per_class = values.pop("corpus", None)
    if per_class is not None:
        scales = tuple(values.pop("scales", (0.5, 0.75, 1.0)))
        synth.write_corpus(out, int(per_class), scales, float(values.get("noise_sigma", 5.0)), int(values["seed"]))
        print(f"wrote {4 * int(per_class)} corpus frames to {out}")
        return 0
    values.pop("scales", None)
    for key in ("start", "step"):
        if key in values:
            values[key] = tuple(values[key])
    spec = synth.SynthSpec(**values)
    synth.write_sequence(spec, out)
    print(f"wrote {spec.frames} {spec.kind.value} frames to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--templates", help="template manifest (JSON list of {label, image})")
    common.add_argument("--background", help="background image, or 'first-frame'")
    common.add_argument("--accept-threshold", type=float, dest="accept_threshold")
    common.add_argument("--binary-threshold", type=int, dest="binary_threshold")
    common.add_argument("--scales", help="comma list or start:stop:step")
    common.add_argument("--motion-threshold", type=float, dest="motion_threshold")
    common.add_argument("--area-threshold", type=int, dest="area_threshold")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="handshape", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="classify one image")
    p.add_argument("image")
    p.add_argument("--annotate", help="write an annotated copy here")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("run", parents=[common], help="run the tracking pipeline over a frame directory")
    p.add_argument("frames")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", parents=[common], help="confusion matrix and metrics for labeled frames")
    p.add_argument("source", help="directory (labels.csv or per-class subdirs) or labels CSV")
    p.add_argument("--name", default="Evaluation", help="row name in the summary table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tables", parents=[common], help="recompute the reference summary table")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic templates and frames")
    p.add_argument("spec", nargs="?", help="JSON synth spec")
    p.add_argument("--kind")
    p.add_argument("--frames", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--noise", type=float, dest="noise_sigma")
    p.add_argument("--start", help="x,y of the first placement")
    p.add_argument("--step", help="dx,dy per frame")
    p.add_argument("--corpus", type=int, help="write N random frames per class instead of a sequence")
    p.set_defaults(func=cmd_synth)
    return parser


_OVERRIDES = ("templates", "background", "accept_threshold", "binary_threshold", "scales",
              "motion_threshold", "area_threshold", "out", "seed")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.config, {k: getattr(args, k) for k in _OVERRIDES})
        return args.func(args, cfg)
    except (CliError, ConfigError, ImageFormatError, NoValidScaleError, FileNotFoundError, ValueError) as exc:
        print(f"handshape {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
