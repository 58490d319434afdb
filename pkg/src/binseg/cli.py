"""Command-line interface.

Verbs: train-hash, segment, baseline, eval, sweep, viz. Flags mirror
PipelineConfig fields in kebab-case; a JSON config file may supply defaults
and explicit flags win. Commands either write every declared output and exit
0, or remove partial outputs and exit 1 with the failing stage on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import egs, evaluate, itq, superpixel, synth, tensor_io, viz
from .binmap import BinaryMap, binary_map_from_tensor, binary_map_to_tensor, visualize_binary_map
from .errors import BinsegError
from .pipeline import PipelineConfig, pool_training_rows, segment_image, train_from_feature_maps


def _threads() -> int:
    env = os.environ.get("BINSEG_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _parallel_map(fn, items):
    """Order-preserving map over the worker pool."""
    n = _threads()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


class _Outputs:
    """Tracks files written by a command so failures leave nothing behind."""

    def __init__(self):
        self.paths: list[Path] = []

    def declare(self, path) -> Path:
        p = Path(path)
        self.paths.append(p)
        return p

    def discard(self) -> None:
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with PipelineConfig defaults")
    for name, typ in [
        ("bits", int), ("itq-iters", int), ("seed", int), ("superpixel-k", int),
        ("compactness", float), ("slic-iters", int), ("max-hamming", int),
        ("egs-sigma", float), ("egs-k", float), ("egs-min-size", int),
        ("sample-cap", int), ("ignore-label", int),
    ]:
        parser.add_argument(f"--{name}", type=typ, default=None)
    parser.add_argument("--merge-scope", choices=["adjacent", "global"], default=None)
    parser.add_argument("--code-assign", choices=["majority", "center"], default=None)
    parser.add_argument("--l2-normalize", action="store_const", const=True, default=None)


def _resolve_config(args) -> PipelineConfig:
    overrides = {
        key: getattr(args, key, None)
        for key in (
            "bits", "itq_iters", "seed", "superpixel_k", "compactness", "slic_iters",
            "max_hamming", "merge_scope", "code_assign", "egs_sigma", "egs_k",
            "egs_min_size", "sample_cap", "l2_normalize", "ignore_label",
        )
    }
    return PipelineConfig.from_sources(args.config, overrides)


def _dataset_ids(directory: Path) -> list[str]:
    ids = sorted(p.name[: -len(".ppm")] for p in directory.glob("*.ppm"))
    if not ids:
        raise BinsegError(f"no <id>.ppm images found in {directory}")
    return ids


def _gt_paths(directory: Path, image_id: str) -> list[Path]:
    return sorted(directory.glob(f"{image_id}.gt*.btsr"))


def cmd_train_hash(args, out: _Outputs) -> int:
    config = _resolve_config(args)
    fmaps = []
    for path in args.features:
        try:
            fmaps.append(tensor_io.read_tensor(path))
        except BinsegError as e:
            raise BinsegError(f"reading features {path}: {e}") from e
    x = pool_training_rows(fmaps, config.sample_cap, config.seed)
    model = itq.train_hash(x, config.bits, config.itq_iters, config.seed,
                           normalize=config.l2_normalize)
    model.meta.update({"sample_cap": config.sample_cap, "seed": config.seed,
                       "rows": int(x.shape[0])})
    itq.write_model(model, out.declare(args.out))
    print(f"trained {model.bits}-bit hash over {x.shape[0]} rows (d={model.dim}); "
          f"quantization loss {itq.quantization_loss(model, x):.4f}")
    return 0


def _load_triple(directory: Path, image_id: str):
    image = tensor_io.read_image(directory / f"{image_id}.ppm")
    fmap = tensor_io.read_tensor(directory / f"{image_id}.feat.btsr")
    return image, fmap


def cmd_segment(args, out: _Outputs) -> int:
    config = _resolve_config(args)
    image = tensor_io.read_image(args.image)
    fmap = tensor_io.read_tensor(args.features)
    model = itq.read_model(args.model)
    inter: dict = {}
    labels = segment_image(image, fmap, model, config, intermediates=inter)
    tensor_io.write_label_map(labels, out.declare(args.out))
    if args.viz_dir:
        vdir = Path(args.viz_dir)
        vdir.mkdir(parents=True, exist_ok=True)
        sp = inter["superpixels"]
        tensor_io.write_image(viz.mark_boundaries(image, sp.labels), out.declare(vdir / "superpixels.ppm"))
        bm_img = visualize_binary_map(inter["binary_map"])
        scale = max(1, image.shape[0] // bm_img.shape[0])
        tensor_io.write_image(viz.upscale_nearest(bm_img, scale), out.declare(vdir / "binary_map.ppm"))
        tensor_io.write_image(viz.colorize_labels(labels), out.declare(vdir / "segments.ppm"))
        tensor_io.write_tensor(binary_map_to_tensor(inter["binary_map"]),
                               out.declare(vdir / "binary_map.btsr"))
    print(f"wrote {args.out}: {int(labels.max()) + 1} segments")
    return 0


def cmd_baseline(args, out: _Outputs) -> int:
    config = _resolve_config(args)
    image = tensor_io.read_image(args.image)
    if args.method == "egs":
        labels = egs.egs_segment(image, config.egs_params())
    elif args.method == "slic":
        labels = superpixel.slic(image, config.superpixel_k, config.compactness,
                                 config.slic_iters).labels
    else:
        raise BinsegError(f"unknown baseline method {args.method!r}")
    tensor_io.write_label_map(labels, out.declare(args.out))
    print(f"wrote {args.out}: {int(labels.max()) + 1} segments")
    return 0


def _predict(method: str, directory: Path, image_id: str, model, config: PipelineConfig):
    image, fmap = _load_triple(directory, image_id)
    if method == "binary-map":
        return segment_image(image, fmap, model, config)
    if method == "egs":
        return egs.egs_segment(image, config.egs_params())
    if method == "slic":
        return superpixel.slic(image, config.superpixel_k, config.compactness,
                               config.slic_iters).labels
    raise BinsegError(f"unknown method {method!r}")


def _evaluate_method(directory: Path, method: str, config: PipelineConfig, model_path=None):
    ids = _dataset_ids(directory)
    model = None
    if method == "binary-map":
        if model_path:
            model = itq.read_model(model_path)
        else:
            fmaps = [tensor_io.read_tensor(directory / f"{i}.feat.btsr") for i in ids]
            model = train_from_feature_maps(fmaps, config)

    def run(image_id: str):
        pred = _predict(method, directory, image_id, model, config)
        results = []
        for gt_path in _gt_paths(directory, image_id):
            gt = tensor_io.read_label_map(gt_path)
            results.append(evaluate.best_match_iou(pred, gt, config.ignore_label))
        if not results:
            raise BinsegError(f"no ground truth found for {image_id}")
        return evaluate.ImageResult(image_id=image_id, best_ious=np.concatenate(results))

    per_image = _parallel_map(run, ids)
    metadata = {"method": method, "config": config.to_dict(), "images": len(ids)}
    return evaluate.EvalReport(per_image=per_image, metadata=metadata)


def cmd_eval(args, out: _Outputs) -> int:
    config = _resolve_config(args)
    report = _evaluate_method(Path(args.dataset), args.method, config, args.model)
    evaluate.write_report_csv(report, out.declare(args.out_csv))
    evaluate.write_report_json(report, out.declare(args.out_json))
    print(f"{args.method}: dataset mean IoU {report.dataset_mean:.4f} "
          f"over {report.segment_count} segments")
    return 0


def cmd_sweep(args, out: _Outputs) -> int:
    config = _resolve_config(args)
    directory = Path(args.dataset)
    k_values = [int(k) for k in args.k_values.split(",")]
    rows = []
    for k in k_values:
        report = _evaluate_method(directory, args.method, config.with_superpixel_k(k), args.model)
        rows.append((k, report.dataset_mean))
        print(f"k={k}: mean IoU {report.dataset_mean:.4f}")
    with open(out.declare(args.out), "w") as f:
        f.write("superpixels,mean_iou\n")
        for k, mean in rows:
            f.write(f"{k},{mean:.6f}\n")
    return 0


def cmd_viz(args, out: _Outputs) -> int:
    if args.make_fixture:
        scene = synth.make_scene(args.grid_h, args.grid_w, args.cell_scale,
                                 args.feature_dim, args.regions, args.seed or 0)
        image_id = synth.write_scene(scene, args.out_dir)
        print(f"wrote scene {image_id} to {args.out_dir}")
        return 0
    if args.label_map:
        labels = tensor_io.read_label_map(args.label_map)
        img = viz.colorize_labels(labels)
        tensor_io.write_image(viz.upscale_nearest(img, args.scale), out.declare(args.out))
        return 0
    if args.binary_map:
        bm = binary_map_from_tensor(tensor_io.read_tensor(args.binary_map))
        img = visualize_binary_map(bm)
        tensor_io.write_image(viz.upscale_nearest(img, args.scale), out.declare(args.out))
        return 0
    raise BinsegError("viz needs one of --make-fixture, --label-map, --binary-map")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binseg",
                                     description="Segmentation by binary hashing of feature maps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-hash", help="learn a hash model from feature-map tensors")
    p.add_argument("--features", nargs="+", required=True, help="BTSR feature maps")
    p.add_argument("--out", required=True, help="output model path")
    _config_flags(p)
    p.set_defaults(fn=cmd_train_hash)

    p = sub.add_parser("segment", help="segment one image with a trained model")
    p.add_argument("--image", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output uint32 label map")
    p.add_argument("--viz-dir", help="also write qualitative PPMs here")
    _config_flags(p)
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("baseline", help="run a low-level baseline segmenter")
    p.add_argument("--image", required=True)
    p.add_argument("--method", required=True, choices=["egs", "slic"])
    p.add_argument("--out", required=True)
    _config_flags(p)
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("eval", help="score a method against dataset ground truth")
    p.add_argument("--dataset", required=True, help="directory of <id>.ppm/.feat.btsr/.gt.btsr")
    p.add_argument("--method", required=True, choices=["binary-map", "egs", "slic"])
    p.add_argument("--model", help="hash model; trained from the dataset when omitted")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json", required=True)
    _config_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="mean IoU across superpixel counts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", default="binary-map", choices=["binary-map", "egs", "slic"])
    p.add_argument("--model")
    p.add_argument("--k-values", required=True, help="comma-separated superpixel counts")
    p.add_argument("--out", required=True, help="output CSV")
    _config_flags(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("viz", help="render label maps / binary maps, or write a synthetic scene")
    p.add_argument("--make-fixture", action="store_true")
    p.add_argument("--out-dir", help="dataset directory for --make-fixture")
    p.add_argument("--grid-h", type=int, default=14)
    p.add_argument("--grid-w", type=int, default=22)
    p.add_argument("--cell-scale", type=int, default=16)
    p.add_argument("--feature-dim", type=int, default=64)
    p.add_argument("--regions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-map")
    p.add_argument("--binary-map")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_viz)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Outputs()
    try:
        return args.fn(args, out)
    except (BinsegError, ValueError, OSError, json.JSONDecodeError) as e:
        out.discard()
        print(f"binseg {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
