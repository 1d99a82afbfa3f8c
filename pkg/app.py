"""
GEMELOS-V1 - Interfaz de línea de comandos
Entrenamiento conjunto de campos de gaussianas 3D con co-regularización
"""

import argparse
import logging
import os
import sys
import time

from config.settings import RunConfig
from config.train_config import MODES
from generators.artifact_writer import ArtifactWriter, load_dataset, prepare_output_dir, save_dataset
from generators.synthetic_scene import generate_synthetic_scene
from metrics.disagreement import DEFAULT_PERCENTILES, curve_trend, disagreement_study
from metrics.evaluation import evaluate
from metrics.image_metrics import SSIM_WINDOW
from models.errors import (DatasetError, FieldFormatError, InvalidArgumentError, NumericalError,
                           RenderError)
from models.field_io import load_field, save_image_raw, save_png
from models.run_manifest import RunManifest, content_hash, dataset_files
from rendering.projection import RasterSettings
from rendering.rasterizer import render
from training.trainer import train

logger = logging.getLogger("gemelos")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def parse_resolution(text):
    """'64' o '64x48' → (ancho, alto)"""
    parts = text.lower().split("x")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"resolución inválida: {text}")
    if len(values) == 1:
        values = values * 2
    if len(values) != 2 or min(values) < 1:
        raise argparse.ArgumentTypeError(f"resolución inválida: {text}")
    return tuple(values)


def parse_percentiles(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"percentiles inválidos: {text}")


def parse_view(text):
    """'test:2' → ('test', 2)"""
    split, _, index = text.partition(":")
    if split not in ("train", "test") or not index.isdigit():
        raise argparse.ArgumentTypeError(f"vista inválida '{text}', use train:N o test:N")
    return split, int(index)


def check_resolution(width, height, what):
    """SSIM (evaluación y pérdida D-SSIM) necesita imágenes de al menos SSIM_WINDOW píxeles por lado"""
    if min(width, height) < SSIM_WINDOW:
        raise InvalidArgumentError(
            f"{what}: resolución {width}x{height} menor que el mínimo {SSIM_WINDOW}x{SSIM_WINDOW}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--config", default=None, help="archivo clave=valor")
    common.add_argument("--force", action="store_true", help="sobrescribe el directorio de salida")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gemelos", description="GEMELOS-V1")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="genera un dataset sintético")
    synth.add_argument("--out", required=True)
    synth.add_argument("--gaussians", type=int, default=50)
    synth.add_argument("--train-views", type=int, default=3)
    synth.add_argument("--test-views", type=int, default=4)
    synth.add_argument("--res", type=parse_resolution, default=(64, 64))

    train_cmd = sub.add_parser("train", parents=[common], help="entrena los campos")
    train_cmd.add_argument("--dataset", required=True)
    train_cmd.add_argument("--out", required=True)
    train_cmd.add_argument("--mode", choices=MODES, default="corgs")
    train_cmd.add_argument("--fields", type=int, default=None)
    train_cmd.add_argument("--iterations", type=int, default=None)
    train_cmd.add_argument("--tau-rel", type=float, default=None)
    train_cmd.add_argument("--tau-absolute", type=float, default=None)
    train_cmd.add_argument("--lambda-pseudo", type=float, default=None)
    train_cmd.add_argument("--lambda-depth", type=float, default=None)

    eval_cmd = sub.add_parser("eval", parents=[common], help="evalúa un campo en las vistas de prueba")
    eval_cmd.add_argument("--dataset", required=True)
    eval_cmd.add_argument("--field", required=True)
    eval_cmd.add_argument("--out", required=True)
    eval_cmd.add_argument("--tau-absolute", type=float, default=None)
    eval_cmd.add_argument("--require-gt", action="store_true", help="exige campo de verdad para Fitness/RMSE")

    study = sub.add_parser("study", parents=[common], help="curva desacuerdo-calidad")
    study.add_argument("--dataset", required=True)
    study.add_argument("--field-a", required=True)
    study.add_argument("--field-b", required=True)
    study.add_argument("--out", required=True)
    study.add_argument("--percentiles", type=parse_percentiles, default=list(DEFAULT_PERCENTILES))
    study.add_argument("--kind", choices=("color", "depth"), default="color")

    render_cmd = sub.add_parser("render", parents=[common], help="renderiza un campo en una vista")
    render_cmd.add_argument("--dataset", required=True)
    render_cmd.add_argument("--field", required=True)
    render_cmd.add_argument("--view", type=parse_view, default=("test", 0))
    render_cmd.add_argument("--out", required=True)
    return parser


def cmd_synth(args):
    if args.train_views < 2:
        raise InvalidArgumentError("--train-views debe ser ≥ 2 (las vistas virtuales necesitan dos cámaras)")
    check_resolution(*args.res, "--res")
    seed = 0 if args.seed is None else args.seed
    dataset = generate_synthetic_scene(
        seed=seed, n_gaussians=args.gaussians, n_train=args.train_views, n_test=args.test_views,
        resolution=args.res, settings=RasterSettings(threads=args.threads),
    )
    prepare_output_dir(args.out, args.force)
    save_dataset(dataset, args.out)
    logger.info(f"dataset escrito en {args.out}")
    return EXIT_OK


def cmd_train(args):
    run_config = RunConfig(args.config)
    n_fields = args.fields
    if n_fields is None and args.mode == "baseline":
        n_fields = 1
    run_config.apply(
        seed=args.seed, threads=args.threads, iterations=args.iterations, n_fields=n_fields,
        tau_rel=args.tau_rel, tau=args.tau_absolute, lambda_pseudo=args.lambda_pseudo,
        lambda_depth=args.lambda_depth,
    )
    config = run_config.train_config()
    hooks = config.hooks_for_mode(args.mode)
    dataset = load_dataset(args.dataset)
    if config.lambda_dssim > 0:
        for camera in dataset.train_cameras:
            check_resolution(camera.width, camera.height, args.dataset)

    prepare_output_dir(args.out, args.force)
    manifest = RunManifest(
        command="train",
        seed=config.seed,
        config=dict(config.to_dict(), mode=args.mode),
        input_hash=content_hash(dataset_files(args.dataset)),
    )
    manifest_path = os.path.join(args.out, "manifest.json")
    manifest.save(manifest_path)

    print("=" * 60)
    print(f"GEMELOS-V1 - modo {args.mode}, {config.n_fields} campo(s), {config.iterations} iteraciones")
    print("=" * 60)
    start = time.perf_counter()
    fields, log = train(dataset, config, hooks)
    elapsed = time.perf_counter() - start

    writer = ArtifactWriter(args.out)
    outputs = writer.write_fields(fields)
    outputs.append(writer.write_training_log(log))
    outputs.append(writer.write_events(log))
    manifest.outputs = [os.path.relpath(p, args.out) for p in outputs]
    manifest.timings = {"train_seconds": round(elapsed, 3)}
    manifest.status = "done"
    manifest.save(manifest_path)
    logger.info(f"entrenamiento terminado en {elapsed:.1f} s; campo conservado: {outputs[0]}")
    return EXIT_OK


def cmd_eval(args):
    dataset = load_dataset(args.dataset)
    field = load_field(args.field)
    summary = evaluate(field, dataset, RasterSettings(threads=args.threads), tau=args.tau_absolute,
                       require_ground_truth=args.require_gt)
    writer = ArtifactWriter(args.out)
    writer.write_evaluation(summary)
    logger.info(f"PSNR medio {summary.mean_psnr:.3f} dB, SSIM medio {summary.mean_ssim:.4f}")
    return EXIT_OK


def cmd_study(args):
    dataset = load_dataset(args.dataset)
    if dataset.n_test == 0:
        raise DatasetError("el estudio requiere vistas de prueba con imágenes de referencia")
    field_a = load_field(args.field_a)
    field_b = load_field(args.field_b)
    rows = disagreement_study(
        field_a, field_b, dataset.test_images, dataset.test_cameras, args.percentiles,
        gt_depths=dataset.test_depths, gt_alphas=dataset.test_alphas, kind=args.kind,
        background=dataset.background, settings=RasterSettings(threads=args.threads),
    )
    ArtifactWriter(args.out).write_study(rows)
    logger.info(f"tendencia de Spearman percentil-PSNR: {curve_trend(rows):.3f}")
    return EXIT_OK


def cmd_render(args):
    dataset = load_dataset(args.dataset)
    field = load_field(args.field)
    split, index = args.view
    camera = dataset.camera(split, index)
    out = render(field, camera, dataset.background, RasterSettings(threads=args.threads))
    writer = ArtifactWriter(args.out)
    stem = f"render_{split}_{index:03d}"
    save_png(out.color, writer.path(f"{stem}.png"))
    save_image_raw(out.color, writer.path(f"{stem}_color.raw"))
    save_image_raw(out.depth, writer.path(f"{stem}_depth.raw"))
    save_png(out.depth, writer.path(f"{stem}_depth.png"))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "study": cmd_study,
    "render": cmd_render,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.threads < 1:
        logger.error("--threads debe ser ≥ 1")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except InvalidArgumentError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (FieldFormatError, DatasetError, FileNotFoundError) as e:
        logger.error(str(e))
        return EXIT_DATA
    except (NumericalError, RenderError) as e:
        logger.error(str(e))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
