"""Command-line entry point for the whole pipeline.

Every subcommand honors --config (TOML-like sections mirroring module
names) with flag-override precedence, writes its artifacts under --out,
and is deterministic given --seed. Exit codes: 0 success, 1 usage error,
2 runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import catalog as cat_mod
from .config import RunConfig
from .errors import InvalidInputError, StagekitError
from .imaging import (canonicalize, load_image_png, save_image_png, save_mask_png)
from .saliency import SaliencyConfig, binarize, detect_saliency, make_saliency_backend, segment_product
from .retrieval import (EmbeddingVector, embed, build_index, eval_retrieval,
                        load_index, make_feature_extractor, save_index, top_k)

pass_config = click.make_pass_decorator(RunConfig, ensure=True)


@click.group(name="stagekit")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="TOML-like configuration file.")
@click.pass_context
def cli(ctx, config_path):
    """Product staging toolkit: segmentation, retrieval, inpainting,
    staging, parallax animation, evaluation, and perceptual studies."""
    ctx.obj = RunConfig.from_file(config_path)


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _saliency_backend(cfg: RunConfig, name: str | None, model_path: str | None):
    backend_name = cfg.get("saliency", "backend", name, "border-contrast")
    weights = cfg.get("saliency", "model_path", model_path)
    return make_saliency_backend(backend_name, weights)


def _extractor(cfg: RunConfig, name: str | None, weights: str | None):
    fx_name = cfg.get("retrieval", "extractor", name, "toy-histogram")
    fx_weights = cfg.get("retrieval", "extractor_weights", weights)
    return make_feature_extractor(fx_name, fx_weights)


def _threshold(cfg: RunConfig, value: float | None) -> SaliencyConfig:
    return SaliencyConfig(float(cfg.get("saliency", "threshold", value, 0.5)))


# --- catalog ------------------------------------------------------------------

@cli.command()
@click.option("--catalog", "catalog_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--staged/--unstaged", "staged", default=None)
@click.option("--top-category", default=None)
@click.option("--min-impressions", type=int, default=None)
@click.option("--min-subcategory-count", type=int, default=None)
@click.option("--out", default="out", show_default=True)
@pass_config
def ingest(cfg, catalog_path, staged, top_category, min_impressions,
           min_subcategory_count, out):
    """Validate a JSONL catalog, optionally filter it, and re-export it."""
    cat = cat_mod.ingest_catalog(catalog_path)
    cat = cat_mod.filter_catalog(cat, staged=staged, top_category=top_category,
                                 min_impressions=min_impressions,
                                 min_subcategory_count=min_subcategory_count)
    out_path = _out_dir(out) / "catalog.jsonl"
    cat_mod.export_catalog(cat, out_path)
    click.echo(f"{len(cat)} entries -> {out_path}")


@cli.command()
@click.option("--catalog", "catalog_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", type=int, default=2, show_default=True)
@click.option("--out", default=None)
@pass_config
def stats(cfg, catalog_path, depth, out):
    """Category counts at a given hierarchy depth."""
    cat = cat_mod.ingest_catalog(catalog_path)
    rows = cat_mod.category_stats(cat, depth)
    for name, count in rows:
        click.echo(f"{count:6d}  {name}")
    if out:
        path = _out_dir(out) / "category_stats.json"
        path.write_text(json.dumps(
            [{"category": n, "count": c} for n, c in rows], indent=2) + "\n")
        click.echo(f"-> {path}")


# --- segmentation -------------------------------------------------------------

@cli.command()
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", default=None)
@click.option("--model-path", default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--frame-size", type=int, default=256, show_default=True)
@click.option("--out", default="out", show_default=True)
@pass_config
def segment(cfg, image_path, backend, model_path, threshold, frame_size, out):
    """Detect the salient product; write its mask and white-background cutout."""
    sal = _saliency_backend(cfg, backend, model_path)
    img, _ = canonicalize(load_image_png(image_path), frame_size)
    mask = binarize(detect_saliency(img, sal), _threshold(cfg, threshold))
    out_path = _out_dir(out)
    save_mask_png(mask, out_path / "mask.png")
    save_image_png(segment_product(img, mask), out_path / "cutout.png")
    click.echo(f"mask area {mask.area()} px -> {out_path}")


# --- retrieval ------------------------------------------------------------------

@cli.command("index")
@click.option("--catalog", "catalog_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--image-root", default=None, type=click.Path(file_okay=False))
@click.option("--extractor", "extractor_name", default=None)
@click.option("--extractor-weights", default=None)
@click.option("--backend", default=None)
@click.option("--model-path", default=None)
@click.option("--staged-only/--all-entries", default=True, show_default=True)
@click.option("--frame-size", type=int, default=256, show_default=True)
@click.option("--out", default="out", show_default=True)
@pass_config
def index_cmd(cfg, catalog_path, image_root, extractor_name, extractor_weights,
              backend, model_path, staged_only, frame_size, out):
    """Embed catalog entries (segmented) and write the retrieval index."""
    cat = cat_mod.ingest_catalog(catalog_path)
    if staged_only:
        cat = cat_mod.filter_catalog(cat, staged=True)
    fx = _extractor(cfg, extractor_name, extractor_weights)
    sal = _saliency_backend(cfg, backend, model_path)
    root = image_root or str(Path(catalog_path).parent)
    idx = build_index(cat, fx, sal, image_root=root, frame_size=frame_size)
    out_path = _out_dir(out) / "index.stkidx"
    save_index(idx, out_path)
    click.echo(f"{len(idx)} embeddings -> {out_path}")


@cli.command()
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--extractor", "extractor_name", default=None)
@click.option("--extractor-weights", default=None)
@click.option("--backend", default=None)
@click.option("--model-path", default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--frame-size", type=int, default=256, show_default=True)
@click.option("--out", default="out", show_default=True)
@pass_config
def retrieve(cfg, index_path, image_path, k, extractor_name, extractor_weights,
             backend, model_path, threshold, frame_size, out):
    """Top-k similar catalog entries for a query image."""
    idx = load_index(index_path)
    fx = _extractor(cfg, extractor_name, extractor_weights)
    sal = _saliency_backend(cfg, backend, model_path)
    img, _ = canonicalize(load_image_png(image_path, id="query"), frame_size)
    mask = binarize(detect_saliency(img, sal), _threshold(cfg, threshold))
    vec = embed(img, fx, mask if not mask.is_empty() else None)
    results = top_k(idx, vec, k)
    payload = [{"id": r_.id, "distance": r_.distance} for r_ in results]
    path = _out_dir(out) / "retrieval.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    for row in payload:
        click.echo(f"{row['distance']:.6f}  {row['id']}")


# --- training -------------------------------------------------------------------

def _load_training_images(images_dir: str | None, catalog_path: str | None,
                          image_root: str | None, resolution: int,
                          staged_only: bool = True):
    paths: list[Path] = []
    if images_dir:
        paths = sorted(Path(images_dir).glob("*.png"))
    elif catalog_path:
        cat = cat_mod.ingest_catalog(catalog_path)
        if staged_only:
            cat = cat_mod.filter_catalog(cat, staged=True)
        root = Path(image_root or Path(catalog_path).parent)
        paths = [root / e.image_path for e in cat]
    if not paths:
        raise InvalidInputError("no training images found (use --images-dir or --catalog)")
    return [canonicalize(load_image_png(p, id=p.stem), resolution)[0] for p in paths]


@cli.command("train-inpaint")
@click.option("--images-dir", default=None, type=click.Path(file_okay=False, exists=True))
@click.option("--catalog", "catalog_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--staged-only/--all-entries", default=True, show_default=True,
              help="With --catalog: train on staged scenes only.")
@click.option("--image-root", default=None)
@click.option("--steps", type=int, default=300, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--wbl/--no-wbl", "use_wbl", default=True, show_default=True)
@click.option("--resolution", type=int, default=None)
@click.option("--lambda-boundary", type=float, default=None)
@click.option("--lambda-non-boundary", type=float, default=None)
@click.option("--band-width", type=int, default=None)
@click.option("--out", default="out", show_default=True)
@pass_config
def train_inpaint(cfg, images_dir, catalog_path, staged_only, image_root, steps,
                  seed, use_wbl, resolution, lambda_boundary,
                  lambda_non_boundary, band_width, out):
    """Train the two-stage inpainter; writes a checkpoint and a loss log."""
    from .inpaint import LossWeights, train_inpainter

    seed = cfg.seed(seed)
    res = int(cfg.get("inpaint", "resolution", resolution, 64))
    weights = LossWeights(
        lambda_boundary=float(cfg.get("inpaint", "lambda_boundary", lambda_boundary, 0.9)),
        lambda_non_boundary=float(cfg.get("inpaint", "lambda_non_boundary",
                                          lambda_non_boundary, 0.1)),
        band_width_d=int(cfg.get("inpaint", "band_width_d", band_width, 3)),
    )
    images = _load_training_images(images_dir, catalog_path, image_root, res,
                                   staged_only=staged_only)
    model = train_inpainter(images, weights, steps=steps, seed=seed, use_wbl=use_wbl)
    out_path = _out_dir(out)
    model.save(out_path / "inpainter.ckpt")
    with open(out_path / "inpaint_loss_log.jsonl", "w", encoding="utf-8") as fh:
        for rec in model.history:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    click.echo(f"trained {steps} steps @ {res}px -> {out_path / 'inpainter.ckpt'}")


@cli.command("train-vanilla")
@click.option("--catalog", "catalog_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--image-root", default=None)
@click.option("--steps", type=int, default=300, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--resolution", type=int, default=None)
@click.option("--backend", default=None)
@click.option("--model-path", default=None)
@click.option("--out", default="out", show_default=True)
@pass_config
def train_vanilla_cmd(cfg, catalog_path, image_root, steps, seed, resolution,
                      backend, model_path, out):
    """Train the vanilla staging generator on staged catalog entries."""
    from .staging import make_vanilla_pairs, train_vanilla

    seed = cfg.seed(seed)
    res = int(cfg.get("staging", "resolution", resolution, 64))
    cat = cat_mod.filter_catalog(cat_mod.ingest_catalog(catalog_path), staged=True)
    sal = _saliency_backend(cfg, backend, model_path)
    root = image_root or str(Path(catalog_path).parent)
    pairs = make_vanilla_pairs(cat, sal, frame_size=res, image_root=root)
    model = train_vanilla(pairs, steps=steps, seed=seed)
    out_path = _out_dir(out)
    model.save(out_path / "vanilla.ckpt")
    with open(out_path / "vanilla_loss_log.jsonl", "w", encoding="utf-8") as fh:
        for rec in model.history:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    click.echo(f"trained {steps} steps @ {res}px -> {out_path / 'vanilla.ckpt'}")


# --- staging --------------------------------------------------------------------

@cli.command()
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["vanilla", "copy-paste"]), required=True)
@click.option("--k", type=int, default=2, show_default=True)
@click.option("--catalog", "catalog_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--image-root", default=None)
@click.option("--inpaint-model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--vanilla-model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--backend", default=None)
@click.option("--model-path", default=None)
@click.option("--extractor", "extractor_name", default=None)
@click.option("--extractor-weights", default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--frame-size", type=int, default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", default="out", show_default=True)
@pass_config
def stage(cfg, image_path, mode, k, catalog_path, index_path, image_root,
          inpaint_model, vanilla_model, seed, backend, model_path,
          extractor_name, extractor_weights, threshold, frame_size, jobs, out):
    """Stage a product image (vanilla generation or copy-paste)."""
    from .staging import export_results, stage_from_catalog, stage_vanilla
    from .inpaint.model import InpainterModel
    from .staging import VanillaModel

    seed = cfg.seed(seed)
    sal = _saliency_backend(cfg, backend, model_path)
    thr = _threshold(cfg, threshold)
    out_path = _out_dir(out)

    if mode == "vanilla":
        if vanilla_model is None:
            raise InvalidInputError("--mode vanilla needs --vanilla-model")
        model = VanillaModel.load(vanilla_model)
        size = int(cfg.get("staging", "frame_size", frame_size,
                           model.config["resolution"]))
        img, _ = canonicalize(load_image_png(image_path, id=Path(image_path).stem), size)
        mask = binarize(detect_saliency(img, sal), thr)
        cutout = segment_product(img, mask)
        staged = stage_vanilla(model, cutout, mask)
        save_image_png(staged, out_path / "staged_vanilla.png")
        click.echo(f"1 image -> {out_path / 'staged_vanilla.png'}")
        return

    if catalog_path is None or index_path is None:
        raise InvalidInputError("--mode copy-paste needs --catalog and --index")
    if inpaint_model is not None:
        model = InpainterModel.load(inpaint_model)
        size = int(cfg.get("staging", "frame_size", frame_size,
                           model.config["resolution"]))
    else:
        size = int(cfg.get("staging", "frame_size", frame_size, 256))
        model = InpainterModel.initialize(resolution=size, seed=seed)
    cat = cat_mod.ingest_catalog(catalog_path)
    idx = load_index(index_path)
    fx = _extractor(cfg, extractor_name, extractor_weights)
    img, _ = canonicalize(load_image_png(image_path, id=Path(image_path).stem), size)
    root = image_root or str(Path(catalog_path).parent)
    results = stage_from_catalog(img, idx, cat, k, model, sal, fx, thr,
                                 image_root=root, jobs=jobs)
    paths = export_results(results, out_path)
    click.echo(f"{len(paths)} staged images -> {out_path}")


# --- parallax -------------------------------------------------------------------

@cli.command()
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--inpaint-model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--frames", type=int, default=None)
@click.option("--amplitude", type=float, default=None)
@click.option("--bg-ratio", type=float, default=None)
@click.option("--gif", is_flag=True, default=False)
@click.option("--seed", type=int, default=None)
@click.option("--backend", default=None)
@click.option("--model-path", default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--frame-size", type=int, default=None)
@click.option("--out", default="out", show_default=True)
@pass_config
def parallax(cfg, image_path, inpaint_model, frames, amplitude, bg_ratio, gif,
             seed, backend, model_path, threshold, frame_size, out):
    """Render a parallax animation from a single product image."""
    from .inpaint.model import InpainterModel
    from .parallax import ParallaxConfig, export_frames, make_clean_plate, render_frames

    seed = cfg.seed(seed)
    sal = _saliency_backend(cfg, backend, model_path)
    if inpaint_model is not None:
        model = InpainterModel.load(inpaint_model)
        size = int(cfg.get("parallax", "frame_size", frame_size,
                           model.config["resolution"]))
    else:
        size = int(cfg.get("parallax", "frame_size", frame_size, 256))
        model = InpainterModel.initialize(resolution=size, seed=seed)
    pcfg = ParallaxConfig(
        frames=int(cfg.get("parallax", "frames", frames, 16)),
        amplitude=float(cfg.get("parallax", "amplitude", amplitude, 10.0)),
        bg_ratio=float(cfg.get("parallax", "bg_ratio", bg_ratio, 0.3)),
    )
    img, _ = canonicalize(load_image_png(image_path, id=Path(image_path).stem), size)
    mask = binarize(detect_saliency(img, sal), _threshold(cfg, threshold))
    plate = make_clean_plate(img, mask, model)
    seq = render_frames(img, mask, plate, pcfg)
    manifest = export_frames(seq, pcfg, _out_dir(out), gif=gif)
    click.echo(f"{len(seq)} frames -> {manifest.parent}")


# --- evaluation -----------------------------------------------------------------

@cli.command("eval-fid")
@click.option("--real", "real_dir", required=True, type=click.Path(file_okay=False, exists=True))
@click.option("--gen", "gen_specs", required=True, multiple=True,
              help="Generated-image dir, repeatable; label rows/columns as "
                   "'ROW/COL=DIR' to build a variant table.")
@click.option("--extractor", "extractor_name", default=None)
@click.option("--extractor-weights", default=None)
@click.option("--frame-size", type=int, default=256, show_default=True)
@click.option("--out", default="out", show_default=True)
@pass_config
def eval_fid(cfg, real_dir, gen_specs, extractor_name, extractor_weights,
             frame_size, out):
    """Frechet distance between the real set and each generated set;
    emits JSON plus an aligned variant table."""
    from .evaluation import FIDReport, fid_between_sets, render_fid_table

    fx = _extractor(cfg, extractor_name, extractor_weights)
    load = lambda d: [canonicalize(load_image_png(p), frame_size)[0]  # noqa: E731
                      for p in sorted(Path(d).glob("*.png"))]
    real = load(real_dir)

    variants: dict[str, dict[str, float]] = {}
    first: FIDReport | None = None
    for spec in gen_specs:
        label, _, gen_dir = spec.rpartition("=")
        gen_dir = gen_dir or spec
        row, _, col = (label or "gen").partition("/")
        report = fid_between_sets(real, load(gen_dir), fx)
        variants.setdefault(row, {})[col or "fid"] = report.fid
        first = first or report
    assert first is not None
    summary = FIDReport(fid=first.fid, n_real=first.n_real, n_gen=first.n_gen,
                        extractor=first.extractor, variants=variants)
    out_path = _out_dir(out)
    (out_path / "fid_report.json").write_text(summary.to_json() + "\n")
    table = render_fid_table(variants)
    (out_path / "fid_table.txt").write_text(table + "\n")
    click.echo(table)


@cli.command("eval-retrieval")
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--ks", default="1,3,5", show_default=True)
@click.option("--out", default="out", show_default=True)
@pass_config
def eval_retrieval_cmd(cfg, index_path, ks, out):
    """Self-retrieval precision@k / recall@k over an index (same-subcategory
    relevance, query id excluded)."""
    idx = load_index(index_path)
    ks_list = [int(s) for s in ks.split(",") if s.strip()]
    queries = [(EmbeddingVector(idx.matrix[i].astype("float64"), source_id=idx.ids[i]),
                idx.categories[i]) for i in range(len(idx))]
    metrics = eval_retrieval(idx, queries, ks_list)
    path = _out_dir(out) / "retrieval_metrics.json"
    path.write_text(json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n")
    for k, p, r in metrics.per_k:
        click.echo(f"k={k}: precision={p:.3f} recall={r:.3f}")


# --- study ----------------------------------------------------------------------

@cli.group()
def study():
    """Pairwise perceptual study service and tooling."""


@study.command("serve")
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8008, show_default=True)
def study_serve(data_dir, host, port):
    """Run the study HTTP service."""
    import uvicorn

    from .study import StudyStore, create_app

    uvicorn.run(create_app(StudyStore(data_dir)), host=host, port=port)


@study.command("create")
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--name", required=True)
@click.option("--pairs", "pairs_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {image_a, image_b, method_a, method_b}.")
@click.option("--seed", type=int, default=None)
@click.option("--votes-per-pair", type=int, default=3, show_default=True)
@pass_config
def study_create(cfg, data_dir, name, pairs_path, seed, votes_per_pair):
    """Create a study from a pair-spec JSONL file."""
    from .study import StudyStore

    specs = [json.loads(line) for line in Path(pairs_path).read_text().splitlines()
             if line.strip()]
    store = StudyStore(data_dir)
    s = store.create_study(name, specs, seed=cfg.seed(seed),
                           votes_required_per_pair=votes_per_pair)
    click.echo(f"study {s.study_id} with {len(s.pairs)} pairs")


@study.command("report")
@click.option("--data-dir", required=True, type=click.Path(file_okay=False, exists=True))
@click.option("--study-id", required=True)
@click.option("--out", default=None)
def study_report(data_dir, study_id, out):
    """Print (and optionally save) a study's majority-vote report."""
    from .study import StudyStore

    report = StudyStore(data_dir).report(study_id)
    payload = report.to_dict()
    click.echo(json.dumps(payload, indent=2))
    if out:
        path = _out_dir(out) / f"report_{study_id}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- entry points ---------------------------------------------------------------

def run(argv: list[str] | None = None) -> int:
    """Invoke the CLI; returns the exit code instead of raising SystemExit."""
    try:
        cli.main(args=argv if argv is not None else sys.argv[1:],
                 prog_name="stagekit", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except StagekitError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
