"""Command-line surface: seg2d, seg3d, and eval.

Exit codes: 0 success, 2 unreadable input or unusable invocation, 3 invalid
box, 4 backend failure, 5 volume/dataset manifest inconsistency.

Configuration precedence is defaults < config file < explicit flags. The
config file is plain text, one `key = value` per line with PipelineConfig
field names and # comments. Every run's effective configuration, seed
included, is echoed to result.json so it can be replayed exactly.
"""

from __future__ import annotations

import dataclasses
import json
import os
import secrets
import sys

import click

from .core import BoundingBox, PipelineConfig
from .correction import run_fnpc_2d
from .fileio import (
    ManifestError,
    load_gray_png,
    load_mask_png,
    load_volume_manifest,
    render_overlay,
    save_f32_map,
    save_gray_png,
    save_mask_png,
    save_rgb_png,
    scaled_uc_png,
)
from .harness import CoarsenessLevel, evaluate, render_csv
from .segmenter import BackendError, MockBackend, MockOracleConfig, RemoteBackend
from .ss2v import run_ss2v

EXIT_UNREADABLE = 2
EXIT_BAD_BOX = 3
EXIT_BACKEND = 4
EXIT_MANIFEST = 5

COORD_NOTE = "half-open pixel coordinates: [xmin, xmax) x [ymin, ymax), origin top-left"

CONFIG_FIELDS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_box(text: str) -> BoundingBox:
    parts = text.split(",")
    if len(parts) != 4:
        _fail(EXIT_BAD_BOX, f"--box wants xmin,ymin,xmax,ymax, got {text!r}")
    try:
        xmin, ymin, xmax, ymax = (int(p) for p in parts)
        return BoundingBox(xmin, ymin, xmax, ymax)
    except ValueError as e:
        _fail(EXIT_BAD_BOX, f"invalid box {text!r}: {e}")


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        _fail(EXIT_UNREADABLE, f"cannot read config file: {e}")
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            _fail(EXIT_UNREADABLE, f"{path}:{lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if key not in CONFIG_FIELDS:
            _fail(EXIT_UNREADABLE, f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = raw
    return values


def _coerce(key: str, raw):
    if isinstance(raw, str):
        if key in ("n_samples", "t_b", "seed", "backend_parallelism"):
            return int(raw)
        if key == "uc_formula":
            return raw
        return float(raw)
    return raw


def _build_config(config_path, seed, overrides) -> PipelineConfig:
    values = {}
    if config_path:
        for key, raw in _parse_config_file(config_path).items():
            values[key] = _coerce(key, raw)
    for key, val in overrides.items():
        if val is not None:
            values[key] = _coerce(key, val)
    values["seed"] = seed
    try:
        return PipelineConfig(**values)
    except (TypeError, ValueError) as e:
        _fail(EXIT_UNREADABLE, f"bad configuration: {e}")


def _build_backend(backend, endpoint, mock_threshold, mock_keep_largest, mock_dilation):
    if backend == "mock":
        try:
            cfg = MockOracleConfig(
                intensity_threshold=mock_threshold,
                keep_largest_component=mock_keep_largest,
                dilation_radius=mock_dilation,
            )
        except ValueError as e:
            _fail(EXIT_UNREADABLE, f"bad mock configuration: {e}")
        return MockBackend(cfg)
    if not endpoint:
        _fail(EXIT_UNREADABLE, "--backend remote needs --endpoint")
    return RemoteBackend(endpoint)


def _config_dict(cfg: PipelineConfig) -> dict:
    return dataclasses.asdict(cfg)


def pipeline_options(fn):
    fn = click.option("--config", "config_path", type=str, default=None, help="key = value config file")(fn)
    fn = click.option("--seed", type=int, default=None, help="PRNG seed; random when omitted")(fn)
    fn = click.option("--backend", type=click.Choice(["mock", "remote"]), default="mock")(fn)
    fn = click.option("--endpoint", type=str, default=None, help="model server URL for --backend remote")(fn)
    fn = click.option("--mock-threshold", type=int, default=128, help="mock: intensity threshold")(fn)
    fn = click.option("--mock-keep-largest", is_flag=True, default=False, help="mock: keep largest blob")(fn)
    fn = click.option("--mock-dilation", type=int, default=0, help="mock: dilation radius")(fn)
    fn = click.option("--n-samples", type=int, default=None)(fn)
    fn = click.option("--radius-ratio", type=float, default=None)(fn)
    fn = click.option("--t-ave", type=float, default=None)(fn)
    fn = click.option("--t-uc", type=float, default=None)(fn)
    fn = click.option("--t-fn-low", type=float, default=None)(fn)
    fn = click.option("--t-fn-high", type=float, default=None)(fn)
    fn = click.option("--t-fp-low", type=float, default=None)(fn)
    fn = click.option("--t-fp-high", type=float, default=None)(fn)
    fn = click.option("--t-b", type=int, default=None)(fn)
    fn = click.option("--epsilon", type=float, default=None)(fn)
    fn = click.option("--uc-formula", type=click.Choice(["variance", "entropy"]), default=None)(fn)
    fn = click.option("--backend-parallelism", type=int, default=None)(fn)
    return fn


def _collect(kwargs) -> tuple:
    overrides = {
        key: kwargs.pop(key)
        for key in (
            "n_samples",
            "radius_ratio",
            "t_ave",
            "t_uc",
            "t_fn_low",
            "t_fn_high",
            "t_fp_low",
            "t_fp_high",
            "t_b",
            "epsilon",
            "uc_formula",
            "backend_parallelism",
        )
    }
    seed = kwargs.pop("seed")
    if seed is None:
        seed = secrets.randbits(64)
    cfg = _build_config(kwargs.pop("config_path"), seed, overrides)
    backend = _build_backend(
        kwargs.pop("backend"),
        kwargs.pop("endpoint"),
        kwargs.pop("mock_threshold"),
        kwargs.pop("mock_keep_largest"),
        kwargs.pop("mock_dilation"),
    )
    return cfg, backend


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group()
def main():
    """Prompt-augmentation segmentation pipeline."""


@main.command("seg2d")
@click.argument("image_path", type=str)
@click.option("--box", "box_text", required=True, help="xmin,ymin,xmax,ymax (half-open)")
@click.option("--out", "out_dir", required=True, type=str)
@pipeline_options
def cmd_seg2d(image_path, box_text, out_dir, **kwargs):
    """Segment one image from one box prompt; write all artifacts to --out."""
    cfg, backend = _collect(kwargs)
    try:
        image = load_gray_png(image_path)
    except (OSError, ValueError) as e:
        _fail(EXIT_UNREADABLE, f"cannot load image {image_path}: {e}")
    box = _parse_box(box_text)
    if not box.within(image.width, image.height):
        _fail(
            EXIT_BAD_BOX,
            f"box {box.as_tuple()} outside image {image.width}x{image.height}",
        )
    try:
        result = run_fnpc_2d(image, box, cfg, backend)
    except BackendError as e:
        _fail(EXIT_BACKEND, str(e))
    os.makedirs(out_dir, exist_ok=True)
    save_mask_png(result.m_ave, os.path.join(out_dir, "mask_ave.png"))
    save_mask_png(result.m_fnpc, os.path.join(out_dir, "mask_fnpc.png"))
    save_gray_png(scaled_uc_png(result.uc_raw), os.path.join(out_dir, "uc.png"))
    save_f32_map(result.uc_raw, os.path.join(out_dir, "uc_raw.f32"))
    overlay = render_overlay(image, result.m_ave, result.m_fnpc, box)
    save_rgb_png(overlay, os.path.join(out_dir, "overlay.png"))
    _write_json(
        os.path.join(out_dir, "boxes.json"),
        {
            "coordinate_convention": COORD_NOTE,
            "initial_box": list(result.boxes_used[0].as_tuple()),
            "sampled_boxes": [list(b.as_tuple()) for b in result.boxes_used[1:]],
        },
    )
    _write_json(
        os.path.join(out_dir, "result.json"),
        {
            "command": "seg2d",
            "image": os.path.abspath(image_path),
            "box": list(box.as_tuple()),
            "coordinate_convention": COORD_NOTE,
            "config": _config_dict(cfg),
            "backend": backend.name,
            "artifacts": [
                "mask_ave.png",
                "mask_fnpc.png",
                "uc.png",
                "uc_raw.f32",
                "boxes.json",
                "overlay.png",
            ],
            "uc_raw": {
                "path": "uc_raw.f32",
                "width": image.width,
                "height": image.height,
                "dtype": "float32-le",
                "order": "row-major",
            },
            "foreground_pixels": {
                "m_ave": result.m_ave.foreground_count(),
                "m_fn": result.m_fn.foreground_count(),
                "m_fp": result.m_fp.foreground_count(),
                "m_fnpc": result.m_fnpc.foreground_count(),
            },
        },
    )
    click.echo(f"seg2d: wrote 7 artifacts to {out_dir}")


@main.command("seg3d")
@click.argument("manifest_path", type=str)
@click.option("--box", "box_text", required=True, help="xmin,ymin,xmax,ymax on the start slice")
@click.option("--start-slice", type=int, default=None, help="default: central slice")
@click.option("--out", "out_dir", required=True, type=str)
@pipeline_options
def cmd_seg3d(manifest_path, box_text, start_slice, out_dir, **kwargs):
    """Propagate one slice's box prompt through a manifest-listed volume."""
    cfg, backend = _collect(kwargs)
    try:
        volume = load_volume_manifest(manifest_path)
    except ManifestError as e:
        _fail(EXIT_MANIFEST, str(e))
    except OSError as e:
        _fail(EXIT_UNREADABLE, f"cannot load manifest {manifest_path}: {e}")
    if start_slice is None:
        start_slice = volume.slice_count // 2
    if not 0 <= start_slice < volume.slice_count:
        _fail(
            EXIT_UNREADABLE,
            f"start slice {start_slice} out of range for {volume.slice_count} slices",
        )
    box = _parse_box(box_text)
    if not box.within(volume.width, volume.height):
        _fail(
            EXIT_BAD_BOX,
            f"box {box.as_tuple()} outside slices {volume.width}x{volume.height}",
        )
    try:
        result = run_ss2v(volume, start_slice, box, cfg, backend)
    except BackendError as e:
        _fail(EXIT_BACKEND, str(e))
    os.makedirs(out_dir, exist_ok=True)
    mask_names = []
    for i in range(result.mask_volume.slice_count):
        name = f"mask_{i:04d}.png"
        save_mask_png(result.mask_volume[i], os.path.join(out_dir, name))
        mask_names.append(name)
    _write_json(
        os.path.join(out_dir, "boxes.json"),
        {
            "coordinate_convention": COORD_NOTE,
            "slices": {
                str(i): {
                    "box": list(b.as_tuple()),
                    "provenance": "manual" if i == start_slice else "synthetic",
                }
                for i, b in sorted(result.boxes_per_slice.items())
            },
        },
    )
    _write_json(
        os.path.join(out_dir, "result.json"),
        {
            "command": "seg3d",
            "manifest": os.path.abspath(manifest_path),
            "start_slice": start_slice,
            "box": list(box.as_tuple()),
            "coordinate_convention": COORD_NOTE,
            "config": _config_dict(cfg),
            "backend": backend.name,
            "termination_reasons": result.termination_reasons,
            "segmented_slices": sorted(result.boxes_per_slice),
            "artifacts": mask_names + ["boxes.json"],
        },
    )
    click.echo(
        f"seg3d: {len(result.boxes_per_slice)} of {volume.slice_count} slices "
        f"segmented, up={result.termination_reasons['up']}, "
        f"down={result.termination_reasons['down']}"
    )


@main.command("eval")
@click.argument("dataset_path", type=str)
@click.option("--out", "out_csv", required=True, type=str)
@pipeline_options
def cmd_eval(dataset_path, out_csv, **kwargs):
    """Score a dataset manifest of (image, gt, level) samples to CSV.

    Manifest: JSON {"samples": [{"id": ..., "image": PNG, "gt": PNG,
    "level": "fine"|"medium"|"coarse"}, ...]} with paths relative to the
    manifest location.
    """
    cfg, backend = _collect(kwargs)
    try:
        with open(dataset_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except OSError as e:
        _fail(EXIT_UNREADABLE, f"cannot read dataset manifest: {e}")
    except json.JSONDecodeError as e:
        _fail(EXIT_MANIFEST, f"dataset manifest is not valid JSON: {e}")
    samples = meta.get("samples", [])
    if not samples:
        _fail(EXIT_UNREADABLE, "dataset manifest lists no samples; nothing to evaluate")
    base = os.path.dirname(os.path.abspath(dataset_path))
    dataset, ids = [], []
    for i, entry in enumerate(samples):
        try:
            img_path = entry["image"]
            gt_path = entry["gt"]
            level = CoarsenessLevel.from_name(entry["level"])
        except (KeyError, TypeError, ValueError) as e:
            _fail(EXIT_MANIFEST, f"dataset sample {i}: {e}")
        img_path = img_path if os.path.isabs(img_path) else os.path.join(base, img_path)
        gt_path = gt_path if os.path.isabs(gt_path) else os.path.join(base, gt_path)
        try:
            image = load_gray_png(img_path)
            gt = load_mask_png(gt_path)
        except (OSError, ValueError) as e:
            _fail(EXIT_UNREADABLE, f"dataset sample {i}: {e}")
        if gt.data.shape != image.data.shape:
            _fail(
                EXIT_MANIFEST,
                f"dataset sample {i}: gt is {gt.width}x{gt.height}, "
                f"image is {image.width}x{image.height}",
            )
        if gt.is_empty:
            _fail(EXIT_MANIFEST, f"dataset sample {i}: ground truth is empty")
        dataset.append((image, gt, level))
        ids.append(str(entry.get("id", f"s{i:03d}")))
    outcome = evaluate(dataset, cfg, backend, sample_ids=ids)
    csv_text = render_csv(outcome)
    out_dir = os.path.dirname(os.path.abspath(out_csv))
    os.makedirs(out_dir, exist_ok=True)
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    _write_json(
        out_csv + ".result.json",
        {
            "command": "eval",
            "dataset": os.path.abspath(dataset_path),
            "config": _config_dict(cfg),
            "backend": backend.name,
            "csv": os.path.abspath(out_csv),
            "failures": [list(f) for f in outcome.failures],
        },
    )
    for sample_id, message in outcome.failures:
        click.echo(f"sample {sample_id} failed: {message}", err=True)
    click.echo(
        f"eval: {len(outcome.rows)} rows for {len(samples)} samples -> {out_csv}"
        + (f" ({len(outcome.failures)} failed)" if outcome.failures else "")
    )
    if outcome.failures:
        sys.exit(EXIT_BACKEND)


if __name__ == "__main__":
    main()
