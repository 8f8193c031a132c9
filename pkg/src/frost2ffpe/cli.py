"""Command-line entry point for the full workflow.

Configuration precedence: built-in defaults < config file (--config or the
FROST2FFPE_CONFIG env var; JSON or TOML, one section per subcommand) <
explicit flags. Every randomized subcommand takes an explicit seed.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import click
import numpy as np
from PIL import Image

from . import __version__
from .errors import Frost2FFPEError

CONFIG_ENV_VAR = "FROST2FFPE_CONFIG"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise Frost2FFPEError(f"config file not found: {p}")
    if p.suffix.lower() == ".toml":
        return tomllib.loads(p.read_text())
    return json.loads(p.read_text())


class ConfigCommand(click.Command):
    """Command that fills unset params from the config file section of its name."""

    def invoke(self, ctx: click.Context):
        root = ctx.find_root()
        config = (root.obj or {}).get("config", {})
        for key, value in config.get(self.name, {}).items():
            param = key.replace("-", "_")
            if (
                param in ctx.params
                and ctx.get_parameter_source(param) == click.core.ParameterSource.DEFAULT
            ):
                ctx.params[param] = value
        return super().invoke(ctx)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Frost2FFPEError as exc:
            _fail(str(exc))
        except (FileNotFoundError, OSError) as exc:
            _fail(str(exc))

    return wrapper


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise Frost2FFPEError(f"{what} not found: {path}")
    return p


def _require_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise Frost2FFPEError(f"{what} not found: {path}")
    return p


def _parse_color(text: str) -> tuple[int, int, int]:
    try:
        parts = [int(v) for v in text.split(",")]
    except ValueError:
        parts = []
    if len(parts) != 3 or any(not (0 <= v <= 255) for v in parts):
        raise Frost2FFPEError(f"background must be 'R,G,B' with 0-255 components, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _load_patch_dir(directory: Path) -> list[Path]:
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise Frost2FFPEError(f"no .png patches found in {directory}")
    return files


def _emit(doc: dict, report: str | None) -> None:
    text = json.dumps(doc, indent=2)
    click.echo(text)
    if report:
        Path(report).parent.mkdir(parents=True, exist_ok=True)
        Path(report).write_text(text + "\n")


@click.group(name="frost2ffpe")
@click.version_option(version=__version__)
@click.option(
    "--config",
    "config_path",
    envvar=CONFIG_ENV_VAR,
    default=None,
    help=f"JSON/TOML config with one section per subcommand (env: {CONFIG_ENV_VAR}).",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Frozen-section to FFPE-style translation toolkit."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = _load_config(config_path)
    except Frost2FFPEError as exc:
        _fail(str(exc))


# ---- WSI pipeline ------------------------------------------------------------


def _segmentation_params(patch_size, downsample, sat_threshold, blur_kernel, min_tissue_area, min_hole_area):
    from .wsi.segment import SegmentationParams

    params = SegmentationParams.default_for(patch_size=patch_size, segmentation_downsample=downsample)
    overrides = {}
    if sat_threshold is not None:
        overrides["saturation_threshold"] = sat_threshold
    if blur_kernel is not None:
        overrides["median_blur_kernel"] = blur_kernel
    if min_tissue_area is not None:
        overrides["min_tissue_area"] = min_tissue_area
    if min_hole_area is not None:
        overrides["min_hole_area"] = min_hole_area
    if overrides:
        from dataclasses import replace

        params = replace(params, **overrides)
    return params


_seg_options = [
    click.option("--downsample", default=64.0, show_default=True, help="Segmentation downsample target."),
    click.option("--sat-threshold", default=None, type=int, help="Saturation threshold override."),
    click.option("--blur-kernel", default=None, type=int, help="Median blur kernel override (odd)."),
    click.option("--min-tissue-area", default=None, type=float, help="Min tissue contour area override."),
    click.option("--min-hole-area", default=None, type=float, help="Min hole area override."),
]


def seg_options(fn):
    for opt in reversed(_seg_options):
        fn = opt(fn)
    return fn


@main.command(cls=ConfigCommand)
@click.option("--slide", required=True, help="Input slide image.")
@click.option("--out", required=True, help="Output directory.")
@click.option("--slide-id", default=None, help="Override the slide id (default: file stem).")
@click.option("--patch-size", default=512, show_default=True)
@seg_options
@handle_errors
def segment(slide, out, slide_id, patch_size, downsample, sat_threshold, blur_kernel, min_tissue_area, min_hole_area):
    """Compute and save the tissue mask of a slide."""
    from .wsi.segment import segment_tissue
    from .wsi.slide import open_slide

    slide_path = _require_file(slide, "slide")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = _segmentation_params(patch_size, downsample, sat_threshold, blur_kernel, min_tissue_area, min_hole_area)
    record = open_slide(slide_path, slide_id=slide_id)
    mask = segment_tissue(record, params)

    sid = record.record.slide_id
    Image.fromarray((mask.binary_mask * np.uint8(255))).save(out_dir / f"{sid}_mask.png")
    summary = {
        "slide_id": sid,
        "level": mask.level,
        "empty": mask.empty,
        "n_contours": len(mask.contours),
        "n_holes": len(mask.holes),
        "tissue_fraction": round(mask.tissue_fraction, 6),
        "params": {
            "saturation_threshold": params.saturation_threshold,
            "median_blur_kernel": params.median_blur_kernel,
            "min_tissue_area": params.min_tissue_area,
            "min_hole_area": params.min_hole_area,
            "segmentation_downsample": params.segmentation_downsample,
        },
    }
    (out_dir / f"{sid}_segmentation.json").write_text(json.dumps(summary, indent=2) + "\n")
    click.echo(json.dumps({"mask": f"{sid}_mask.png", "n_contours": len(mask.contours), "empty": mask.empty}))


@main.command(cls=ConfigCommand)
@click.option("--slide", required=True, help="Input slide image.")
@click.option("--out", required=True, help="Output directory (manifest.json + patches/).")
@click.option("--slide-id", default=None)
@click.option("--patch-size", default=512, show_default=True)
@click.option("--magnification", default=20.0, show_default=True)
@click.option("--min-coverage", default=0.5, show_default=True, help="Tissue fraction required to keep a tile.")
@seg_options
@handle_errors
def patchify(slide, out, slide_id, patch_size, magnification, min_coverage, downsample, sat_threshold, blur_kernel, min_tissue_area, min_hole_area):
    """Segment a slide and extract non-overlapping tissue patches."""
    from .wsi.patches import extract_patches, save_patch
    from .wsi.segment import segment_tissue
    from .wsi.slide import open_slide

    slide_path = _require_file(slide, "slide")
    out_dir = Path(out)
    patches_dir = out_dir / "patches"
    patches_dir.mkdir(parents=True, exist_ok=True)
    params = _segmentation_params(patch_size, downsample, sat_threshold, blur_kernel, min_tissue_area, min_hole_area)
    record = open_slide(slide_path, slide_id=slide_id)
    mask = segment_tissue(record, params)
    manifest, stream = extract_patches(
        record, mask, patch_size=patch_size, magnification=magnification, min_coverage=min_coverage
    )
    for patch in stream:
        save_patch(patch, patches_dir)
    manifest.save(out_dir / "manifest.json")
    click.echo(json.dumps({"manifest": "manifest.json", "n_patches": len(manifest)}))


@main.command(cls=ConfigCommand)
@click.option("--manifest", "manifest_path", required=True)
@click.option("--patches-dir", required=True)
@click.option("--out", required=True, help="Output raster PNG path.")
@click.option("--width", default=None, type=int, help="Output width (default: manifest extent).")
@click.option("--height", default=None, type=int)
@click.option("--background", default="255,255,255", show_default=True)
@click.option("--level-downsample", default=1.0, show_default=True)
@handle_errors
def stitch(manifest_path, patches_dir, out, width, height, background, level_downsample):
    """Reassemble patches into a whole-slide raster."""
    from .wsi.patches import PatchManifest, load_patch
    from .wsi.stitch import stitch as stitch_op

    manifest = PatchManifest.load(_require_file(manifest_path, "manifest"))
    directory = _require_dir(patches_dir, "patches directory")
    patches = [load_patch(directory / f"{e.patch_id}.png") for e in manifest.entries]
    size = (width, height) if width and height else None
    raster = stitch_op(
        manifest,
        patches,
        background=_parse_color(background),
        size=size,
        level_downsample=level_downsample,
    )
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raster).save(out_path)
    click.echo(json.dumps({"raster": str(out_path), "size": [raster.shape[1], raster.shape[0]]}))


# ---- training / inference -----------------------------------------------------


@main.command(cls=ConfigCommand)
@click.option("--source-dir", required=True, help="Frozen-section patch directory.")
@click.option("--target-dir", required=True, help="FFPE patch directory.")
@click.option("--out", required=True)
@click.option("--epochs", default=5, show_default=True)
@click.option("--lr", default=0.002, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--checkpoint-every", default=0, show_default=True)
@click.option("--gan-mode", default="lsgan", show_default=True, type=click.Choice(["lsgan", "logistic", "none"]))
@click.option("--lambda-x", default=1.0, show_default=True)
@click.option("--lambda-y", default=1.0, show_default=True)
@click.option("--lambda-sreg", default=10.0, show_default=True)
@click.option("--nce-temperature", default=0.07, show_default=True)
@click.option("--identity-temperature", default=0.08, show_default=True)
@click.option("--locations", default=512, show_default=True, help="Feature locations sampled per image.")
@click.option("--n-res-blocks", default=9, show_default=True)
@click.option("--base-channels", default=64, show_default=True)
@click.option("--sab-positions", default="0", show_default=True, help="Comma list; empty string disables attention.")
@click.option("--resume", default=None, help="Checkpoint to resume from.")
@handle_errors
def train(source_dir, target_dir, out, epochs, lr, seed, checkpoint_every, gan_mode,
          lambda_x, lambda_y, lambda_sreg, nce_temperature, identity_temperature,
          locations, n_res_blocks, base_channels, sab_positions, resume):
    """Train the translation networks on unpaired patch sets."""
    from .losses import LossWeights
    from .models.generator import GeneratorConfig
    from .training import TrainConfig, Trainer

    source = _load_patch_dir(_require_dir(source_dir, "source directory"))
    target = _load_patch_dir(_require_dir(target_dir, "target directory"))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    positions = tuple(int(p) for p in str(sab_positions).split(",") if str(p).strip() != "")
    cfg = TrainConfig(
        lr=lr,
        epochs=epochs,
        seed=seed,
        checkpoint_every=checkpoint_every,
        gan_mode=gan_mode,
        patches_per_image_queue=locations,
        loss_weights=LossWeights(
            lambda_x=lambda_x,
            lambda_y=lambda_y,
            lambda_sreg=lambda_sreg,
            nce_temperature=nce_temperature,
            identity_temperature=identity_temperature,
        ),
        generator=GeneratorConfig(
            n_res_blocks=n_res_blocks, base_channels=base_channels, sab_positions=positions
        ),
    )
    cfg.save(out_dir / "run_config.json")
    trainer = Trainer.from_checkpoint(_require_file(resume, "checkpoint"), cfg) if resume else Trainer(cfg)
    checkpoints = trainer.fit(source, target, out_dir)
    click.echo(json.dumps({"iterations": trainer.iteration, "final_checkpoint": checkpoints[-1].name}))


@main.command(cls=ConfigCommand)
@click.option("--slide", default=None, help="Input slide image (whole-slide mode).")
@click.option("--patches-dir", default=None, help="Directory of patch PNGs (patch mode).")
@click.option("--checkpoint", required=True)
@click.option("--out", required=True, help="Output directory.")
@click.option("--slide-id", default=None)
@click.option("--patch-size", default=512, show_default=True)
@click.option("--magnification", default=20.0, show_default=True)
@click.option("--min-coverage", default=0.5, show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--background", default="255,255,255", show_default=True)
@seg_options
@handle_errors
def translate(slide, patches_dir, checkpoint, out, slide_id, patch_size, magnification,
              min_coverage, batch_size, background, downsample, sat_threshold, blur_kernel,
              min_tissue_area, min_hole_area):
    """Translate a slide (segment+tile+translate+stitch) or a patch directory."""
    from .inference import load_generator, translate_patches, translate_slide
    from .wsi.patches import load_patch, save_patch
    from .wsi.slide import open_slide

    if (slide is None) == (patches_dir is None):
        raise Frost2FFPEError("pass exactly one of --slide or --patches-dir")
    if slide is not None:
        _require_file(slide, "slide")
    else:
        _require_dir(patches_dir, "patches directory")
    generator = load_generator(_require_file(checkpoint, "checkpoint"))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if slide is not None:
        record = open_slide(_require_file(slide, "slide"), slide_id=slide_id)
        params = _segmentation_params(
            patch_size, downsample, sat_threshold, blur_kernel, min_tissue_area, min_hole_area
        )
        raster, manifest, timing = translate_slide(
            record,
            generator,
            seg_params=params,
            patch_size=patch_size,
            magnification=magnification,
            min_coverage=min_coverage,
            batch_size=batch_size,
            background=_parse_color(background),
        )
        sid = record.record.slide_id
        Image.fromarray(raster).save(out_dir / f"{sid}_translated.png")
        manifest.save(out_dir / "manifest.json")
        (out_dir / f"{sid}_timing.json").write_text(json.dumps(timing, indent=2) + "\n")
        click.echo(json.dumps(timing))
    else:
        import time as _time

        files = _load_patch_dir(_require_dir(patches_dir, "patches directory"))
        started = _time.perf_counter()
        n = 0
        for translated in translate_patches((load_patch(f) for f in files), generator, batch_size=batch_size):
            save_patch(translated, out_dir)
            n += 1
        timing = {"n_tiles": n, "seconds_total": round(_time.perf_counter() - started, 4)}
        (out_dir / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")
        click.echo(json.dumps(timing))


# ---- evaluation ----------------------------------------------------------------


def _build_extractor(extractor: str, dim: int, extractor_seed: int):
    from .evaluation.features import InceptionFeatureExtractor, RandomProjectionExtractor

    if extractor == "randproj":
        return RandomProjectionExtractor(dim=dim, seed=extractor_seed)
    if extractor == "inception":
        return InceptionFeatureExtractor()
    raise Frost2FFPEError(f"unknown extractor {extractor!r}")


@main.command(cls=ConfigCommand)
@click.option("--dir-a", required=True, help="First patch directory (e.g. real FFPE).")
@click.option("--dir-b", required=True, help="Second patch directory (e.g. translated).")
@click.option("--extractor", default="randproj", show_default=True, type=click.Choice(["randproj", "inception"]))
@click.option("--dim", default=64, show_default=True, help="Random-projection dimension.")
@click.option("--extractor-seed", default=0, show_default=True)
@click.option("--report", default=None, help="Also write the JSON result here.")
@handle_errors
def fid(dir_a, dir_b, extractor, dim, extractor_seed, report):
    """Frechet distance between the feature statistics of two patch sets."""
    from .evaluation.features import extract_features
    from .evaluation.fid import fid as fid_op
    from .wsi.patches import load_patch

    ex = _build_extractor(extractor, dim, extractor_seed)
    stats = []
    counts = []
    for d in (dir_a, dir_b):
        files = _load_patch_dir(_require_dir(d, "patch directory"))
        stats.append(extract_features((load_patch(f) for f in files), ex))
        counts.append(len(files))
    value = fid_op(stats[0], stats[1])
    _emit({"fid": value, "n_a": counts[0], "n_b": counts[1], "extractor_id": ex.extractor_id}, report)


@main.command(name="turing-stats", cls=ConfigCommand)
@click.option("--responses", required=True, help="ReaderResponse JSON array.")
@click.option("--report", default=None)
@handle_errors
def turing_stats(responses, report):
    """Precision/recall/F1 and judged-real rates from survey responses."""
    from .evaluation.turing import load_responses, turing_scores

    scores = turing_scores(load_responses(_require_file(responses, "responses file")))
    _emit(scores.to_dict(), report)


@main.command(cls=ConfigCommand)
@click.option("--responses", default=None, help="ReaderResponse JSON array.")
@click.option("--matrix", default=None, help="JSON file with an items x categories count matrix.")
@click.option("--report", default=None)
@handle_errors
def kappa(responses, matrix, report):
    """Fleiss' kappa inter-rater agreement."""
    from .evaluation.kappa import RatingMatrix, fleiss_kappa
    from .evaluation.turing import load_responses

    if (responses is None) == (matrix is None):
        raise Frost2FFPEError("pass exactly one of --responses or --matrix")
    if responses is not None:
        rating = RatingMatrix.from_responses(load_responses(_require_file(responses, "responses file")))
    else:
        rows = json.loads(_require_file(matrix, "matrix file").read_text())
        rating = RatingMatrix(counts=np.asarray(rows))
    _emit(fleiss_kappa(rating).to_dict(), report)


# ---- survey --------------------------------------------------------------------


@main.command(name="deck-build", cls=ConfigCommand)
@click.option("--ffpe-dir", required=True)
@click.option("--ai-dir", required=True)
@click.option("--n-per-class", default=25, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, help="Deck JSON path.")
@handle_errors
def deck_build_cmd(ffpe_dir, ai_dir, n_per_class, seed, out):
    """Build a shuffled survey deck of real and translated patches."""
    from .survey import deck_build

    doc = deck_build(ffpe_dir, ai_dir, n_per_class=n_per_class, seed=seed, out_path=out)
    click.echo(json.dumps({"deck": out, "n_items": len(doc["items"])}))


@main.command(name="serve-survey", cls=ConfigCommand)
@click.option("--deck", required=True)
@click.option("--responses-dir", required=True)
@click.option("--static-dir", default=None, help="Frontend assets to serve at /.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@handle_errors
def serve_survey(deck, responses_dir, static_dir, host, port):
    """Serve the Visual Turing test app and response store."""
    import uvicorn

    from .survey import create_app

    app = create_app(
        _require_file(deck, "deck"),
        responses_dir,
        static_dir=_require_dir(static_dir, "static directory") if static_dir else None,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
