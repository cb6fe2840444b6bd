"""Command-line interface.

A thin client over the service handlers: subcommands read corpus files,
build the same request models the HTTP API accepts, and print or write
the responses.  Exit codes: 0 success, 1 internal failure, 2 input error.

Corpus layout: one file per image named ``<image_id>.txt``, one directory
per model.  ``TEXTFUSE_THREADS`` caps per-image parallelism.
"""

from __future__ import annotations

import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable

import click

from . import formats
from .formats import CorpusManifest, FormatError, parse_annotation_file
from .fusion import FixpointNotReached, FusionError
from .geometry import GeometryError
from .service import handlers, schemas

EXIT_INTERNAL = 1
EXIT_INPUT = 2


def _n_workers() -> int:
    env = os.environ.get("TEXTFUSE_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _fail(message: str, code: int = EXIT_INPUT) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_file(path: Path) -> list[formats.AnnotationRecord]:
    return parse_annotation_file(path.read_bytes())


def _records_to_models(records: Iterable[formats.AnnotationRecord], model_id: str) -> list[schemas.PredictionModel]:
    return [
        schemas.PredictionModel(
            corners=list(r.box.flat()), text=r.text, model_id=model_id
        )
        for r in records
    ]


def _gt_models(records: Iterable[formats.AnnotationRecord]) -> list[schemas.GroundTruthModel]:
    return [
        schemas.GroundTruthModel(corners=list(r.box.flat()), text=r.text)
        for r in records
    ]


def _load_corpus(
    manifest: CorpusManifest,
) -> tuple[dict[str, dict[str, list[formats.AnnotationRecord]]], list[str]]:
    """Parse every referenced file; returns (image -> model -> records, errors)."""
    parsed: dict[str, dict[str, list[formats.AnnotationRecord]]] = {}
    errors: list[str] = []
    for image_id, (_, model_paths) in manifest.images.items():
        parsed[image_id] = {}
        for model_id, path in model_paths.items():
            try:
                parsed[image_id][model_id] = _parse_file(path)
            except FormatError as exc:
                errors.append(f"{path}: {exc}")
    return parsed, errors


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _print_report(resp: schemas.EvalResponse, report_format: str) -> None:
    if report_format == "structured":
        click.echo(json.dumps(resp.model_dump(), indent=2, ensure_ascii=False))
        return
    header = f"{'image':<24}{'P':>8}{'R':>8}{'Hmean':>8}{'CA':>8}{'E2E-F':>8}{'tp':>6}{'fp':>6}{'fn':>6}"
    click.echo(header)
    click.echo("-" * len(header))

    def row(name: str, m: schemas.MetricsModel) -> str:
        return (
            f"{name:<24}{m.precision:>8.4f}{m.recall:>8.4f}{m.hmean:>8.4f}"
            f"{m.char_acc:>8.4f}{m.e2e_fmeasure:>8.4f}{m.tp:>6}{m.fp:>6}{m.fn:>6}"
        )

    for image_id in sorted(resp.per_image):
        click.echo(row(image_id, resp.per_image[image_id]))
    click.echo("-" * len(header))
    click.echo(row("corpus", schemas.MetricsModel(**resp.model_dump(exclude={"per_image"}))))


@click.group()
def main() -> None:
    """Fuse and evaluate quadrilateral scene-text predictions."""


@main.command()
@click.option("--models", "model_dirs", multiple=True, required=True, type=click.Path(path_type=Path), help="One prediction directory per model, in priority order.")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--iou-threshold", default=0.5, show_default=True)
@click.option("--label-policy", type=click.Choice(["highest-score", "model-priority", "largest-area"]), default="highest-score", show_default=True)
@click.option("--priority", default="", help="Comma-separated model ids for tie-breaking.")
@click.option("--max-passes", default=16, show_default=True)
def fuse(model_dirs, out_dir, iou_threshold, label_policy, priority, max_passes) -> None:
    """Fuse per-model prediction directories into one directory."""
    model_ids = [d.name for d in model_dirs]
    if len(set(model_ids)) != len(model_ids):
        _fail("model directories must have distinct basenames")
    try:
        manifest = CorpusManifest.from_directories(dict(zip(model_ids, model_dirs)))
    except FormatError as exc:
        _fail(str(exc))
    parsed, errors = _load_corpus(manifest)
    if errors:
        for e in errors:
            click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_INPUT)

    config = schemas.FusionConfigModel(
        iou_threshold=iou_threshold,
        label_policy=label_policy,
        model_priority=[p for p in priority.split(",") if p],
        max_passes=max_passes,
    )

    def fuse_one(image_id: str) -> tuple[str, schemas.FuseResponse]:
        sets = [
            schemas.PredictionSetModel(
                image_id=image_id,
                model_id=model_id,
                predictions=_records_to_models(parsed[image_id].get(model_id, []), model_id),
            )
            for model_id in model_ids
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FixpointNotReached)
            return image_id, handlers.fuse(schemas.FuseRequest(sets=sets, config=config))

    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        with ThreadPoolExecutor(max_workers=_n_workers()) as pool:
            results = dict(pool.map(fuse_one, sorted(parsed)))
    except (GeometryError, FusionError) as exc:
        _fail(str(exc), EXIT_INTERNAL)

    unconverged = []
    for image_id in sorted(results):
        resp = results[image_id]
        records = [
            (handlers.corners_to_box(p.corners), p.text) for p in resp.predictions
        ]
        _write_atomic(out_dir / f"{image_id}.txt", formats.write_records(records))
        if not resp.fixpoint_reached:
            unconverged.append(image_id)
    if unconverged:
        click.echo(f"warning: fixpoint not reached for: {', '.join(unconverged)}", err=True)
    click.echo(f"fused {len(results)} images into {out_dir}")


@main.command("eval")
@click.option("--preds", "pred_dir", required=True, type=click.Path(path_type=Path))
@click.option("--gt", "gt_dir", required=True, type=click.Path(path_type=Path))
@click.option("--match-iou", default=0.5, show_default=True)
@click.option("--char-acc-micro", is_flag=True, help="Aggregate CA over characters instead of words.")
@click.option("--report", "report_format", type=click.Choice(["human", "structured"]), default="human", show_default=True)
def eval_cmd(pred_dir, gt_dir, match_iou, char_acc_micro, report_format) -> None:
    """Score a prediction directory against a ground-truth directory."""
    if not gt_dir.is_dir():
        _fail(f"ground-truth directory not found: {gt_dir}")
    images: list[schemas.EvalImageModel] = []
    for gt_path in sorted(gt_dir.glob("*.txt")):
        image_id = gt_path.stem
        try:
            gts = _parse_file(gt_path)
        except FormatError as exc:
            _fail(f"{gt_path}: {exc}")
        pred_path = pred_dir / f"{image_id}.txt"
        preds: list[formats.AnnotationRecord] = []
        if pred_path.is_file():
            try:
                preds = _parse_file(pred_path)
            except FormatError as exc:
                _fail(f"{pred_path}: {exc}")
        images.append(
            schemas.EvalImageModel(
                image_id=image_id,
                predictions=_records_to_models(preds, ""),
                ground_truth=_gt_models(gts),
            )
        )
    resp = handlers.evaluate(
        schemas.EvalRequest(images=images, match_iou=match_iou, char_acc_micro=char_acc_micro)
    )
    _print_report(resp, report_format)


@main.command()
@click.option("--det", "det_dir", required=True, type=click.Path(path_type=Path), help="Directory of detector outputs: 8 comma-separated coordinates per line.")
@click.option("--rec", "rec_file", required=True, type=click.Path(path_type=Path), help="Recognizer output: image_id,index,score,text per line.")
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--model-id", default="two-stage", show_default=True)
def convert(det_dir, rec_file, out_dir, model_id) -> None:
    """Join detector boxes and recognizer texts into spotting predictions."""
    if not det_dir.is_dir():
        _fail(f"detector directory not found: {det_dir}")
    try:
        rec_text = rec_file.read_bytes().decode("utf-8")
    except OSError as exc:
        _fail(str(exc))
    except UnicodeDecodeError as exc:
        _fail(f"{rec_file}: invalid UTF-8 at byte offset {exc.start}")

    rec_by_image: dict[str, list[schemas.RecognitionEntryModel]] = {}
    for line_no, line in enumerate(rec_text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",", 3)
        if len(parts) < 4:
            _fail(f"{rec_file}:{line_no}: expected image_id,index,score,text")
        image_id, index, score, word = parts
        try:
            entry = schemas.RecognitionEntryModel(
                index=int(index), text=word, score=float(score) if score else None
            )
        except ValueError:
            _fail(f"{rec_file}:{line_no}: bad index or score")
        rec_by_image.setdefault(image_id, []).append(entry)

    out_dir.mkdir(parents=True, exist_ok=True)
    n_flagged = 0
    for det_path in sorted(det_dir.glob("*.txt")):
        image_id = det_path.stem
        boxes: list[list[float]] = []
        for line_no, line in enumerate(det_path.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                coords = [float(v) for v in line.split(",")]
            except ValueError:
                _fail(f"{det_path}:{line_no}: non-numeric coordinate")
            if len(coords) != 8:
                _fail(f"{det_path}:{line_no}: expected 8 coordinates")
            boxes.append(coords)
        try:
            resp = handlers.convert(
                schemas.ConvertRequest(
                    image_id=image_id,
                    boxes=boxes,
                    recognized=rec_by_image.get(image_id, []),
                    model_id=model_id,
                )
            )
        except (FormatError, GeometryError, formats.IndexOutOfRange) as exc:
            _fail(f"{det_path}: {exc}")
        if resp.missing_text_indices:
            n_flagged += len(resp.missing_text_indices)
            click.echo(
                f"warning: {image_id}: boxes without recognized text: "
                f"{resp.missing_text_indices}",
                err=True,
            )
        # boxes without a recognized word keep an empty text field
        records = [
            (handlers.corners_to_box(p.corners), p.text) for p in resp.set.predictions
        ]
        _write_atomic(out_dir / f"{image_id}.txt", formats.write_records(records))
    click.echo(f"converted {det_dir} -> {out_dir} ({n_flagged} boxes without text)")


@main.command()
@click.option("--gt", "gt_dir", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--model-id", default="synthetic", show_default=True)
@click.option("--drop-rate", default=0.0, show_default=True)
@click.option("--jitter", default=0.0, show_default=True)
@click.option("--char-error-rate", default=0.0, show_default=True)
@click.option("--spurious-rate", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--partition", default="", help="slot/of, e.g. 0/2: only boxes with index % of == slot may drop.")
def synth(gt_dir, out_dir, model_id, drop_rate, jitter, char_error_rate, spurious_rate, seed, partition) -> None:
    """Generate one synthetic model's predictions from a ground-truth corpus."""
    if not gt_dir.is_dir():
        _fail(f"ground-truth directory not found: {gt_dir}")
    drop_partition = None
    if partition:
        try:
            slot, of = (int(v) for v in partition.split("/"))
            drop_partition = (slot, of)
        except ValueError:
            _fail(f"bad --partition value: {partition}")
    images = []
    for gt_path in sorted(gt_dir.glob("*.txt")):
        try:
            records = _parse_file(gt_path)
        except FormatError as exc:
            _fail(f"{gt_path}: {exc}")
        images.append(
            schemas.SynthImageModel(image_id=gt_path.stem, ground_truth=_gt_models(records))
        )
    try:
        resp = handlers.synthesize(
            schemas.SynthRequest(
                images=images,
                profile=schemas.NoiseProfileModel(
                    drop_rate=drop_rate,
                    jitter_px=jitter,
                    char_error_rate=char_error_rate,
                    spurious_rate=spurious_rate,
                    seed=seed,
                    drop_partition=drop_partition,
                ),
                model_id=model_id,
            )
        )
    except ValueError as exc:
        _fail(str(exc))
    out_dir.mkdir(parents=True, exist_ok=True)
    for s in resp.sets:
        records = [(handlers.corners_to_box(p.corners), p.text) for p in s.predictions]
        _write_atomic(out_dir / f"{s.image_id}.txt", formats.write_records(records))
    click.echo(f"synthesized {len(resp.sets)} images into {out_dir}")


@main.command("oracle-check")
@click.option("--quad-a", required=True, help="8 comma-separated coordinates.")
@click.option("--quad-b", required=True, help="8 comma-separated coordinates.")
@click.option("--resolution", default=1024, show_default=True)
def oracle_check(quad_a, quad_b, resolution) -> None:
    """Compare exact IoU against the raster oracle for two quads."""
    try:
        corners_a = [float(v) for v in quad_a.split(",")]
        corners_b = [float(v) for v in quad_b.split(",")]
        resp = handlers.oracle_check(
            schemas.OracleCheckRequest(
                corners_a=corners_a, corners_b=corners_b, resolution=resolution
            )
        )
    except (ValueError, GeometryError) as exc:
        _fail(str(exc))
    click.echo(json.dumps(resp.model_dump(), indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
