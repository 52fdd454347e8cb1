"""Command-line interface.

Exit codes: 2 bad arguments or invalid guidance, 3 unreadable input,
4 config validation, 5 internal invariant failure.
"""

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from genmatte import imgio, metrics
from genmatte.config import load_config
from genmatte.engine import MattingEngine
from genmatte.errors import (ConfigError, FormatError, GenmatteError, InternalError,
                             ValidationError)

EXIT_BAD_ARGS = 2
EXIT_BAD_INPUT = 3
EXIT_BAD_CONFIG = 4
EXIT_INTERNAL = 5


def _mapped_exit(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (FileNotFoundError, IsADirectoryError, PermissionError, FormatError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_BAD_INPUT)
        except (ValidationError,) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_BAD_ARGS)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_BAD_CONFIG)
        except InternalError as exc:
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(EXIT_INTERNAL)
        except GenmatteError as exc:
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(EXIT_INTERNAL)

    return wrapper


@click.group()
def main():
    """Diffusion-based alpha matting engine."""


@main.command()
@click.argument("input_path", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output matte path (default: <input>_alpha.png).")
@click.option("--steps", type=int, default=None, help="Inference step count.")
@click.option("--seeds", "ensemble", type=int, default=None,
              help="LR ensemble size L.")
@click.option("--eta", type=float, default=None, help="Sampler stochasticity in [0,1].")
@click.option("--guidance-mode", type=click.Choice(["literal", "normalized"]),
              default=None, help="Guide-injection scale convention.")
@click.option("--hr/--no-hr", default=False, help="Run high-resolution refinement.")
@click.option("--patch-size", type=int, default=None, help="Refinement patch size (latent).")
@click.option("--overlap", type=int, default=None, help="Patch overlap (latent).")
@click.option("--trimap", type=click.Path(path_type=Path), default=None)
@click.option("--mask", type=click.Path(path_type=Path), default=None)
@click.option("--scribbles", type=click.Path(path_type=Path), default=None,
              help="Scribble JSON document.")
@click.option("--prompt", type=str, default=None, help="Text guidance prompt.")
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--oracle", type=click.Choice(["gaussian", "procedural"]), default=None,
              help="Use a test oracle denoiser regardless of config.")
@click.option("--diagnostics", is_flag=True,
              help="Also write the uncertainty image and patch-plan JSON.")
@_mapped_exit
def matte(input_path, out, steps, ensemble, eta, guidance_mode, hr, patch_size,
          overlap, trimap, mask, scribbles, prompt, seed, config_path, oracle,
          diagnostics):
    """Estimate the alpha matte of INPUT_PATH."""
    config = load_config(str(config_path) if config_path else None)
    engine = MattingEngine(config)
    image = imgio.load_image(str(input_path))
    spatial = [name for name, p in (("trimap", trimap), ("mask", mask),
                                    ("scribbles", scribbles)) if p]
    if len(spatial) > 1:
        raise click.UsageError(f"at most one of --trimap/--mask/--scribbles: got {spatial}")
    guidance = None
    if trimap:
        guidance = {"trimap": imgio.load_image(str(trimap))}
    elif mask:
        guidance = {"mask": imgio.load_image(str(mask))}
    elif scribbles:
        try:
            doc = json.loads(Path(scribbles).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scribble file is not valid JSON: {exc}")
        guidance = {"scribbles": doc}
    result = engine.matte(image, hr=hr, seed=seed, guidance=guidance, prompt=prompt,
                          diagnostics=diagnostics, steps=steps, eta=eta,
                          guidance_mode=guidance_mode, ensemble=ensemble,
                          patch_size=patch_size, overlap=overlap, oracle=oracle)
    out = out or input_path.with_name(input_path.stem + "_alpha.png")
    imgio.save_image(str(out), result.matte, bit_depth=16)
    click.echo(f"wrote {out}")
    if diagnostics:
        if result.uncertainty is not None:
            upath = input_path.with_name(input_path.stem + "_uncertainty.png")
            u = result.uncertainty.grid
            imgio.save_image(str(upath), np.clip(u, 0.0, 1.0), bit_depth=16)
            click.echo(f"wrote {upath}")
        ppath = input_path.with_name(input_path.stem + "_patches.json")
        plan = result.plan.to_dict()
        plan["latent_f"] = result.latent_f
        ppath.write_text(json.dumps(plan, indent=2), encoding="utf-8")
        click.echo(f"wrote {ppath}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8337)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@_mapped_exit
def serve(host, port, config_path):
    """Run the HTTP matting service."""
    import uvicorn

    from genmatte.service import create_app

    config = load_config(str(config_path) if config_path else None)
    app = create_app(MattingEngine(config))
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("eval")
@click.argument("pred_path", type=click.Path(path_type=Path))
@click.argument("gt_path", type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of a table.")
@_mapped_exit
def eval_cmd(pred_path, gt_path, as_json):
    """Matting metrics between a predicted and a ground-truth matte."""
    pred = imgio.load_image(str(pred_path))
    gt = imgio.load_image(str(gt_path))
    report = metrics.evaluate(pred[:1], gt[:1])
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(metrics.format_report_table({pred_path.name: report}))


@main.command()
@click.option("--out", type=click.Path(path_type=Path), required=True,
              help="Weight file to write.")
@click.option("--pairs", type=int, default=32, help="Synthetic dataset size.")
@click.option("--size", type=int, default=32, help="Training image side (pixels).")
@click.option("--iters", type=int, default=2000)
@click.option("--lr", type=float, default=1.0)
@click.option("--f", "factor", type=int, default=2, help="Codec downsample factor.")
@click.option("--seed", type=int, default=0)
@click.option("--data", "data_dir", type=click.Path(path_type=Path), default=None,
              help="Directory of paired fixtures (index.json); default: synthesize.")
@click.option("--export-data", type=click.Path(path_type=Path), default=None,
              help="Write the synthesized dataset to this directory.")
@click.option("--curve", type=click.Path(path_type=Path), default=None,
              help="Optional JSON file for the loss curve.")
@_mapped_exit
def train(out, pairs, size, iters, lr, factor, seed, data_dir, export_data, curve):
    """Train the toy denoiser on synthetic matting data."""
    from genmatte import trainer as trainer_mod
    from genmatte.codec import LatentCodec
    from genmatte.denoiser import ToyMlpDenoiser
    from genmatte.schedule import make_schedule

    schedule = make_schedule(1000, 1e-4, 0.02)
    matte_codec = LatentCodec(factor, 1, None)
    image_codec = LatentCodec(factor, 1, None)
    if data_dir:
        data = trainer_mod.load_dataset(data_dir)
    else:
        samples = trainer_mod.make_synthetic_dataset(pairs, size, size, seed=seed,
                                                     kind="threshold", channels=1)
        if export_data:
            trainer_mod.save_dataset(samples, export_data)
            click.echo(f"wrote dataset to {export_data}")
        data = trainer_mod.dataset_pairs(samples)
    d_lat = factor * factor
    model = ToyMlpDenoiser(d_lat, d_lat, 0, (64, 64), schedule.T, init_seed=seed)
    cfg = trainer_mod.TrainConfig(lr=lr, iters=iters, seed=seed)
    result = trainer_mod.train(model, data, cfg, schedule, matte_codec, image_codec)
    model.save(str(out))
    click.echo(f"wrote {out} (final loss {result.loss_curve[-1]:.5f})")
    if curve:
        Path(curve).write_text(json.dumps(result.loss_curve), encoding="utf-8")
        click.echo(f"wrote {curve}")


if __name__ == "__main__":
    main()
