"""Command-line entry point: ``walmafa {swap,train,infer,metrics}``.

Exit codes: 0 success, 1 input error, 2 numeric error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import TrainConfig, format_config, load_config, parse_config
from .errors import InputError, NumericError, ShapeError, VersionError
from .fourier import fft2d_polar, ifft2d_polar, swap_polar
from .imageio import crop, load_image, pad_to_multiple, save_png, save_ssim_map
from .metrics import psnr, ssim
from .model import ModelConfig, forward, init_params
from .params import load_checkpoint, save_checkpoint
from .samples import load_pairs
from .train import fit
from .wavelet import dwt2d, iwt2d, swap_bands

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
PRECISIONS = {"f32": np.float32, "f64": np.float64}
SWAP_VARIANTS = ("swap_ll", "swap_amplitude", "swap_ll_then_high", "swap_amplitude_then_phase",
                 "swap_high_only", "swap_phase_only")


def _emit(payload: dict, path: Path) -> None:
    text = json.dumps(payload, indent=2)
    print(text)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n")


# -- swap -----------------------------------------------------------------

def swap_variants(low: np.ndarray, high: np.ndarray) -> dict[str, np.ndarray]:
    """The six component-swap images built from ``low`` with parts taken from ``high``.

    Wavelet swaps reflect-pad to even size first and crop back afterwards.
    """
    if low.shape != high.shape:
        raise InputError(f"image sizes differ: {low.shape} vs {high.shape}")
    lo, size = pad_to_multiple(low, 2)
    hi, _ = pad_to_multiple(high, 2)
    bl, bh = dwt2d(lo), dwt2d(hi)
    ll = swap_bands(bl, bh, "ll")
    sl, sh = fft2d_polar(low), fft2d_polar(high)
    amp = swap_polar(sl, sh, "amplitude")
    return {
        "swap_ll": crop(iwt2d(ll), size),
        "swap_amplitude": ifft2d_polar(amp, warn=False),
        "swap_ll_then_high": crop(iwt2d(swap_bands(ll, bh, "high")), size),
        "swap_amplitude_then_phase": ifft2d_polar(swap_polar(amp, sh, "phase"), warn=False),
        "swap_high_only": crop(iwt2d(swap_bands(bl, bh, "high")), size),
        "swap_phase_only": ifft2d_polar(swap_polar(sl, sh, "phase"), warn=False),
    }


def swap_report(low: np.ndarray, high: np.ndarray, out_dir: Path, pair_id: str = "pair") -> dict:
    """Write every swap variant, its SSIM map against ``high`` and a JSON report.

    Scores are computed on the variants clipped to [0, 1], i.e. on what the
    written images represent before 8-bit rounding.
    """
    report = {"pair": pair_id, "variants": {}}
    for name, image in swap_variants(low, high).items():
        image = np.clip(image, 0.0, 1.0)
        s_high, smap = ssim(image, high)
        image_path = out_dir / f"{name}.png"
        map_path = out_dir / f"{name}_ssim_map.png"
        save_png(image_path, image)
        save_ssim_map(map_path, smap)
        report["variants"][name] = {
            "ssim_vs_low": ssim(image, low)[0], "psnr_vs_low": psnr(image, low),
            "ssim_vs_high": s_high, "psnr_vs_high": psnr(image, high),
            "image": str(image_path), "ssim_map": str(map_path),
        }
    return report


def cmd_swap(args) -> int:
    low, high = load_image(args.low), load_image(args.high)
    out = Path(args.out)
    report = swap_report(low, high, out, pair_id=Path(args.low).stem)
    _emit(report, out / "swap_report.json")
    return EXIT_OK


# -- train ----------------------------------------------------------------

def _configs(args) -> tuple[ModelConfig, TrainConfig]:
    model, train = load_config(args.config) if args.config else parse_config("")
    for key in ("steps", "batch_size", "crop"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(train, key, value)
    if args.seed is not None:
        train.seed = args.seed
    return model, train


def cmd_train(args) -> int:
    model, train = _configs(args)
    dtype = PRECISIONS[args.precision]
    data = Path(args.data_dir)
    if not (data / "low").is_dir() or not (data / "high").is_dir():
        raise InputError(f"{data} must contain low/ and high/ directories")
    pairs = load_pairs(data, dtype)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "train_log.jsonl"
    params = init_params(model, train.seed, dtype)

    with log_path.open("w") as log_file:
        def log(step, record):
            line = json.dumps({k: float(v) if k != "step" else v for k, v in record.items()})
            print(line, flush=True)
            log_file.write(line + "\n")

        history, best = fit(params, pairs, model, train, log=log)
    save_checkpoint(best, out / "checkpoint.wmf")
    (out / "config.txt").write_text(format_config(model, train))
    summary = {"steps": len(history), "initial_total": history[0]["total"],
               "final_total": history[-1]["total"], "checkpoint": str(out / "checkpoint.wmf"),
               "config": str(out / "config.txt"), "log": str(log_path)}
    _emit(summary, out / "train_summary.json")
    return EXIT_OK


# -- infer ----------------------------------------------------------------

def _load_model(checkpoint: Path, config_path, dtype):
    config_path = Path(config_path) if config_path else checkpoint.parent / "config.txt"
    model, _ = load_config(config_path) if config_path.exists() else parse_config("")
    params = load_checkpoint(checkpoint)
    expected = init_params(model, 0)
    mismatch = [n for n in expected if n not in params or params[n].shape != expected[n].shape]
    if mismatch or len(params) != len(expected):
        raise VersionError(f"checkpoint does not match config ({len(mismatch)} differing "
                           f"entries, e.g. {mismatch[:3]})")
    return model, params.astype(dtype)


def enhance(image: np.ndarray, params, model: ModelConfig) -> np.ndarray:
    """Run the network on one (H, W, 3) image of any size via reflect padding."""
    padded, size = pad_to_multiple(image, model.size_multiple)
    return crop(forward(padded, params, model)[0], size)


def _inputs(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob("*.png")) if p.is_dir() else [p])
    if not files:
        raise InputError("no input images")
    return files


def cmd_infer(args) -> int:
    dtype = PRECISIONS[args.precision]
    model, params = _load_model(Path(args.checkpoint), args.config, dtype)
    out = Path(args.out)
    report = {"images": {}}
    for path in _inputs(args.inputs):
        image = load_image(path, dtype)
        result = np.clip(enhance(image, params, model), 0.0, 1.0)
        save_png(out / path.name, result)
        entry = {"output": str(out / path.name)}
        if args.reference:
            ref = load_image(Path(args.reference) / path.name, dtype)
            entry.update(psnr=psnr(result, ref), ssim=ssim(result, ref)[0],
                         input_psnr=psnr(image, ref), input_ssim=ssim(image, ref)[0])
        report["images"][path.name] = entry
    if args.reference:
        entries = report["images"].values()
        report["mean_psnr"] = float(np.mean([e["psnr"] for e in entries]))
        report["mean_ssim"] = float(np.mean([e["ssim"] for e in entries]))
    _emit(report, out / "infer_report.json")
    return EXIT_OK


# -- metrics --------------------------------------------------------------

def compare_dirs(a_dir: Path, b_dir: Path) -> dict:
    """Per-pair and mean PSNR/SSIM over PNG files present in both directories."""
    a_names = {p.name for p in Path(a_dir).glob("*.png")}
    b_names = {p.name for p in Path(b_dir).glob("*.png")}
    orphans = sorted(a_names ^ b_names)
    if orphans:
        raise InputError(f"unmatched files: {', '.join(orphans)}")
    if not a_names:
        raise InputError("no matching PNG files")
    pairs = {}
    for name in sorted(a_names):
        a, b = load_image(Path(a_dir) / name), load_image(Path(b_dir) / name)
        if a.shape != b.shape:
            raise InputError(f"{name}: sizes differ {a.shape} vs {b.shape}")
        pairs[name] = {"psnr": psnr(a, b), "ssim": ssim(a, b)[0]}
    return {"pairs": pairs,
            "mean_psnr": float(np.mean([v["psnr"] for v in pairs.values()])),
            "mean_ssim": float(np.mean([v["ssim"] for v in pairs.values()]))}


def cmd_metrics(args) -> int:
    report = compare_dirs(Path(args.a_dir), Path(args.b_dir))
    _emit(report, Path(args.out) / "metrics_report.json")
    return EXIT_OK


# -- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--config", default=None, help="key = value config file")
    shared.add_argument("--out", default="out", help="output directory")
    shared.add_argument("--precision", choices=sorted(PRECISIONS), default="f64")

    parser = argparse.ArgumentParser(prog="walmafa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("swap", parents=[shared], help="wavelet/Fourier component-swap experiment")
    p.add_argument("low")
    p.add_argument("high")
    p.set_defaults(func=cmd_swap)

    p = sub.add_parser("train", parents=[shared], help="train on data_dir/{low,high}")
    p.add_argument("data_dir")
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--crop", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", parents=[shared], help="enhance images with a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("inputs", nargs="+", help="PNG files or directories")
    p.add_argument("--reference", default=None, help="directory of ground-truth PNGs")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("metrics", parents=[shared], help="PSNR/SSIM between two directories")
    p.add_argument("a_dir")
    p.add_argument("b_dir")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (InputError, ShapeError, VersionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
