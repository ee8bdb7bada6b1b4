"""fuzzquant command line: quantize, segment, batch, synth.

JSON goes to stdout, everything meant for humans goes to stderr.
Exit codes: 0 success, 1 segmentation failure, 2 usage or I/O error.
"""

import argparse
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from tqdm import tqdm

from .cfis import BAND_NAMES, PROFILE_NAMES, SegmentationResult, Segmenter
from .config import CfisConfig, load_config
from .errors import FuzzquantError
from .indicators import combined_indicators, verify_triplet
from .quantizer import kmeans_quantize
from .raster_io import GrayImage, load_image, render_overlay, save_image, save_rgb
from .synth import SynthEyeSpec, generate_eye, sweep_specs

logger = logging.getLogger("fuzzquant.cli")

console = Console(stderr=True)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

IMAGE_SUFFIXES = {".pgm", ".png"}
MANIFEST_FILE = "manifest.json"

# acceptance thresholds used when a batch directory carries a ground-truth manifest
CENTER_TOLERANCE_PX = 2.0
RADIUS_TOLERANCE_PX = 2.0
LIMBIC_TOLERANCE_ROWS = 3

_SEPARATORS = re.compile(r"[\s,;]+")


class UsageError(Exception):
    pass


def _emit(payload: Any) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def read_signal(path: Path) -> np.ndarray:
    """Whitespace, comma or semicolon separated numbers."""
    if not path.exists():
        raise FileNotFoundError(f"Signal file not found: {path}")
    tokens = [t for t in _SEPARATORS.split(path.read_text()) if t]
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as e:
        raise UsageError(f"cannot parse {path}: {e}") from e


def _error_payload(error: FuzzquantError) -> dict[str, Any]:
    return {
        "error": type(error).__name__,
        "stage": error.stage,
        "category": error.category,
        "message": str(error),
    }


# quantize

def cmd_quantize(args: argparse.Namespace) -> int:
    config = load_config(args.config, k=args.k)
    values = read_signal(Path(args.input))
    try:
        options = config.quantize if args.init is None else config.quantize.model_copy(update={"init": args.init})
        q = kmeans_quantize(values, config.k, options)
    except FuzzquantError as e:
        raise UsageError(f"cannot quantize {args.input}: {e}") from e

    ind = combined_indicators(values, q)
    report = verify_triplet(ind)
    if not report:
        logger.error(f"indicator triplet inconsistent: {report.describe()}")
        return EXIT_FAILURE

    _emit(
        {
            "k": q.k,
            "centroids": q.centroids.tolist(),
            "labels": q.labels.tolist(),
            "sse": q.sse,
            "iterations": q.iterations,
            "cci": ind.cci.tolist(),
            "cfi": ind.cfi.tolist(),
            "fib": ind.fib.tolist(),
        }
    )

    if not (args.json or config.json_output):
        table = Table(title=f"[bold blue]{q.k}-means of {args.input}[/bold blue]", box=box.ROUNDED, header_style="bold cyan")
        table.add_column("Cluster", style="bold green")
        table.add_column("Centroid", style="yellow")
        table.add_column("Samples", style="yellow")
        for j, (centroid, count) in enumerate(zip(q.centroids, q.counts), start=1):
            table.add_row(str(j), f"{centroid:.4f}", str(int(count)))
        table.caption = f"SSE {q.sse:.4f} after {q.iterations} iterations"
        console.print(table)
    return EXIT_OK


# segment

def write_dumps(result: SegmentationResult, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    save_image(GrayImage.from_array(result.ui.pixels), directory / "ui.pgm")
    save_image(GrayImage.from_array(np.clip(np.rint(result.rui.pixels), 0, 255).astype(np.uint8)), directory / "rui.pgm")

    rows = pd.RangeIndex(1, result.profiles.length + 1, name="row")
    pd.DataFrame(dict(zip(PROFILE_NAMES, result.profiles)), index=rows).to_csv(directory / "profiles.csv")
    pd.DataFrame(
        {name: band.quantization.labels for name, band in zip(BAND_NAMES, result.bands)}, index=rows
    ).to_csv(directory / "quantizations.csv")

    indicators = {}
    for name, band in zip(BAND_NAMES, result.bands):
        indicators[f"cfi_{name}"] = band.cfi
        indicators[f"fib_{name}"] = band.fib
        indicators[f"band_{name}"] = band.crisp.astype(int)
    indicators["voted"] = result.voted.astype(int)
    pd.DataFrame(indicators, index=rows).to_csv(directory / "indicators.csv")
    logger.info(f"Dumped intermediate artifacts to {directory}")


def _segment_overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "rui_width": args.rui_width,
        "max_radius": args.max_radius,
        "min_area": args.min_area,
        "disc_likeness": args.disc_likeness,
    }


def cmd_segment(args: argparse.Namespace) -> int:
    config = load_config(
        args.config,
        overlay=args.overlay,
        dump=args.dump,
        json_output=True if args.json else None,
        **_segment_overrides(args),
    )
    img = load_image(args.image)

    try:
        result = Segmenter(config).segment(img)
    except FuzzquantError as e:
        if e.stage is None:
            raise
        logger.warning(f"{args.image}: {e.category} failure at stage {e.stage}: {e}")
        _emit(_error_payload(e))
        return EXIT_FAILURE

    _emit(result.to_dict())

    if config.overlay is not None:
        save_rgb(render_overlay(img, result.pupil, result.limbic_radius_px), config.overlay)
        logger.info(f"Overlay written to {config.overlay}")
    if config.dump is not None:
        write_dumps(result, config.dump)
    if not config.json_output:
        cx, cy, r = result.pupil.center[0], result.pupil.center[1], result.pupil.radius
        console.print(
            f"[bold green]pupil[/bold green] ({cx:.1f}, {cy:.1f}) r={r:.1f}  "
            f"[bold green]limbic row[/bold green] {result.limbic_row}  "
            f"[white]{result.timings_ms['total']:.1f}[/white] ms"
        )
    return EXIT_OK


# batch

_worker_segmenter: Optional[Segmenter] = None


def _init_worker(config: CfisConfig) -> None:
    global _worker_segmenter
    _worker_segmenter = Segmenter(config)


def _process_image(path: Path) -> dict[str, Any]:
    record: dict[str, Any] = {"file": path.name}
    try:
        img = load_image(path)
    except (OSError, FuzzquantError) as e:
        return {**record, "ok": False, "error": type(e).__name__, "stage": "io", "category": "io", "message": str(e)}
    try:
        result = _worker_segmenter.segment(img)
    except FuzzquantError as e:
        return {**record, "ok": False, **_error_payload(e)}
    return {**record, "ok": True, **result.to_dict()}


def run_batch(files: Sequence[Path], config: CfisConfig, jobs: int, progress: bool = True) -> list[dict[str, Any]]:
    """Segment every file; results come back in the order of `files`."""
    bar = tqdm(total=len(files), desc="Segmenting", file=sys.stderr, disable=not progress)
    records = []
    if jobs <= 1:
        _init_worker(config)
        for path in files:
            records.append(_process_image(path))
            bar.update()
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(config,)) as pool:
            for record in pool.map(_process_image, files, chunksize=max(1, len(files) // (4 * jobs))):
                records.append(record)
                bar.update()
    bar.close()
    return records


def summarize(records: list[dict[str, Any]]) -> dict[str, Any]:
    df = pd.DataFrame(records)
    category = df["category"] if "category" in df else pd.Series([None] * len(df))
    summary: dict[str, Any] = {
        "total": len(df),
        "succeeded": int(df["ok"].sum()),
        "pupil_failures": int((category == "pupil").sum()),
        "limbic_failures": int((category == "limbic").sum()),
        "io_failures": int((category == "io").sum()),
        "median_ms_pupil": None,
        "median_ms_total": None,
        "fps_pupil": None,
        "fps_total": None,
    }
    succeeded = df[df["ok"]]
    if not succeeded.empty:
        timings = pd.DataFrame(list(succeeded["timings_ms"]))
        for stage in ("pupil", "total"):
            median = float(timings[stage].median())
            summary[f"median_ms_{stage}"] = round(median, 3)
            summary[f"fps_{stage}"] = round(1000.0 / median, 3) if median > 0 else None
    return summary


def score_against_manifest(records: list[dict[str, Any]], manifest: dict[str, Any]) -> dict[str, Any]:
    """Compare segmentation output with the ground truth of a synthetic corpus."""
    truth = {entry["file"]: SynthEyeSpec.model_validate(entry["spec"]) for entry in manifest.get("images", [])}
    rows = []
    for record in records:
        spec = truth.get(record["file"])
        if spec is None:
            continue
        row = {"file": record["file"], "ok": record["ok"]}
        if record["ok"]:
            pupil = record["pupil"]
            row["center_error"] = math.hypot(pupil["cx"] - spec.pupil_center[0], pupil["cy"] - spec.pupil_center[1])
            row["radius_error"] = abs(pupil["r"] - spec.r_p)
            row["limbic_error"] = abs(record["limbic_row"] - spec.r_i)
            row["ok"] = (
                row["center_error"] <= CENTER_TOLERANCE_PX
                and row["radius_error"] <= RADIUS_TOLERANCE_PX
                and row["limbic_error"] <= LIMBIC_TOLERANCE_ROWS
            )
        rows.append(row)
    if not rows:
        return {"scored": 0}
    df = pd.DataFrame(rows)
    scored = {"scored": len(df), "success_rate": round(float(df["ok"].mean()), 4)}
    for column in ("center_error", "radius_error", "limbic_error"):
        if column in df and df[column].notna().any():
            scored[f"max_{column}"] = round(float(df[column].max()), 3)
            scored[f"mean_{column}"] = round(float(df[column].mean()), 3)
    return scored


def cmd_batch(args: argparse.Namespace) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Batch directory not found: {directory}")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        logger.error(f"No .pgm or .png images in {directory}")
        return EXIT_USAGE

    config = load_config(args.config, **_segment_overrides(args))
    jobs = args.jobs or os.cpu_count() or 1
    logger.info(f"Segmenting {len(files)} images with {jobs} workers")
    records = run_batch(files, config, jobs, progress=not args.json)

    report: dict[str, Any] = {"images": records, "summary": summarize(records)}
    manifest_path = directory / MANIFEST_FILE
    if manifest_path.exists():
        with open(manifest_path, "r") as f:
            report["accuracy"] = score_against_manifest(records, json.load(f))

    _emit(report)
    if args.out:
        with open(args.out, "w") as f:
            json.dump(report, f, indent=2)
        logger.info(f"Report written to {args.out}")

    if not args.json:
        table = Table(title="[bold blue]CFIS Batch Report[/bold blue]", box=box.ROUNDED, header_style="bold cyan")
        table.add_column("Metric", style="bold green")
        table.add_column("Value", style="yellow")
        for key, value in {**report["summary"], **report.get("accuracy", {})}.items():
            table.add_row(key, "-" if value is None else str(value))
        console.print(table)
    return EXIT_OK


# synth

def _load_specs(path: Path) -> list[SynthEyeSpec]:
    with open(path, "r") as f:
        data = json.load(f)
    entries = data if isinstance(data, list) else [data]
    return [SynthEyeSpec.model_validate(entry) for entry in entries]


def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    specs = _load_specs(Path(args.spec)) if args.spec else sweep_specs(args.n, seed=args.seed, noises=args.noise)

    entries = []
    for i, spec in enumerate(tqdm(specs, desc="Generating", file=sys.stderr, disable=args.json)):
        img, truth = generate_eye(spec)
        name = f"eye_{i:04d}.png"
        save_image(img, out / name)
        entries.append({"file": name, "spec": truth.model_dump(mode="json")})

    manifest = {"seed": args.seed, "count": len(entries), "images": entries}
    manifest_path = out / MANIFEST_FILE
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2)
    _emit({"out": str(out), "count": len(entries), "manifest": str(manifest_path)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzquant", description="Fuzzy k-means quantization and circular fuzzy iris segmentation")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    quantize = sub.add_parser("quantize", help="k-means quantize a signal file and emit its indicator triplet")
    quantize.add_argument("input", help="File of whitespace or comma separated numbers")
    quantize.add_argument("--k", type=int, default=None, help="Cluster count (default 3)")
    quantize.add_argument("--init", choices=["quantile", "optimal"], default=None, help="Centroid seeding (default optimal)")
    quantize.add_argument("--config", default=None, help="YAML config file")
    quantize.add_argument("--json", action="store_true", help="JSON only, no table on stderr")
    quantize.set_defaults(func=cmd_quantize)

    def add_segment_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--rui-width", type=int, default=None, help="Width of the stretched unwrapped image (default 512)")
        p.add_argument("--max-radius", type=int, default=None, help="Cap on the unwrap radius (default: largest disc that fits)")
        p.add_argument("--min-area", type=int, default=None, help="Smallest pupil component in pixels")
        p.add_argument("--disc-likeness", type=float, default=None, help="Minimum area / bounding-box ratio of the pupil blob")
        p.add_argument("--json", action="store_true", help="JSON only, nothing human-readable on stderr")

    segment = sub.add_parser("segment", help="Segment one eye image")
    segment.add_argument("image")
    segment.add_argument("--overlay", type=Path, default=None, help="Write the annotated PNG here")
    segment.add_argument("--dump", type=Path, default=None, help="Write UI/RUI PGMs and profile CSVs to this directory")
    add_segment_options(segment)
    segment.set_defaults(func=cmd_segment)

    batch = sub.add_parser("batch", help="Segment every image in a directory")
    batch.add_argument("directory")
    batch.add_argument("--jobs", type=int, default=None, help="Worker processes (default: available cores)")
    batch.add_argument("--out", default=None, help="Also write the JSON report to this file")
    add_segment_options(batch)
    batch.set_defaults(func=cmd_batch)

    synth = sub.add_parser("synth", help="Generate a synthetic eye corpus with ground truth")
    synth.add_argument("--n", type=int, default=10, help="Images per noise level")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--noise", type=float, nargs="+", default=[0.0], help="Noise sigma values to sweep")
    synth.add_argument("--spec", default=None, help="JSON file with one spec or a list of specs")
    synth.add_argument("--out", default="synth", help="Output directory")
    synth.add_argument("--json", action="store_true", help="No progress bar")
    synth.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except (UsageError, ValidationError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (OSError, ValueError, FuzzquantError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
