"""Command-line entry point: configuration, training runs, and experiments.

Commands (one experiment per invocation):

    gen-data     build and export a supervised training set
    train        full GAN training; writes checkpoints and the training log
    eval-dist    held-out KS/W1 and the test-size sweep for a checkpoint
    error-sweep  weak/strong terminal error versus step size
    path-sim     iterative path simulation to CSV
    mean-revert  repeated-sampling mean-reversion experiment
    map-dump     generator map z -> r next to the exact map
    disc-grid    supervised discriminator scores on a (z, r) grid
    autocorr     next-step scatter conditional on exact current levels

Flag > environment (SDEGAN_* prefix) > config file > built-in default.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

import sdegan
from sdegan.checkpoint import (
    Checkpoint,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from sdegan.gan import (
    GanVariant,
    TrainConfig,
    eval_condition,
    generator_eval_metrics,
    held_out_eval_data,
    train,
)
from sdegan.paths import (
    ExactStepper,
    GanSampler,
    autocorr_scatter,
    default_map_grid,
    disc_grid,
    error_rows_to_csv,
    error_vs_dt_experiment,
    generate_paths,
    map_dump,
    mean_reversion_experiment,
)
from sdegan.preprocess import (
    DEFAULT_CIR_S_T_GRID,
    DEFAULT_DT_GRID,
    LogReturn,
    MeanScale,
    Transform,
    build_training_set,
    default_transform,
    transform_name,
)
from sdegan.schemes import SchemeKind, scheme_kinds_for
from sdegan.sde import Cir, Gbm, SdeModel, exact_sample, step_from_z
from sdegan.stats import benchmark_sweep

ENV_PREFIX = "SDEGAN_"
COMMANDS = ("gen-data", "train", "eval-dist", "error-sweep", "path-sim",
            "mean-revert", "map-dump", "disc-grid", "autocorr")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    """Configuration file or flag problem; always names the offending key."""


@dataclasses.dataclass
class RunConfig:
    model: SdeModel
    transform: Transform
    dt_grid: tuple[float, ...]
    s_t_grid: tuple[float, ...]
    gbm_s_t: float
    n_train: int
    variant: GanVariant
    seed: int
    out_dir: str
    train: TrainConfig


_MODEL_KEYS = {"gbm": {"kind", "mu", "sigma"}, "cir": {"kind", "kappa", "s_bar", "gamma"}}
_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"seed"}
_TOP_KEYS = {"model", "transform", "dt_grid", "s_t_grid", "gbm_s_t", "n_train",
             "variant", "seed", "out_dir", "train"}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _parse_model(section: dict) -> SdeModel:
    kind = section.get("kind", "gbm")
    if kind not in _MODEL_KEYS:
        raise ConfigError(f"model.kind must be 'gbm' or 'cir', got {kind!r}")
    _reject_unknown(section, _MODEL_KEYS[kind], f"model ({kind})")
    try:
        if kind == "gbm":
            return Gbm(mu=section.get("mu", 0.05), sigma=section.get("sigma", 0.2))
        return Cir(kappa=section.get("kappa", 0.1), s_bar=section.get("s_bar", 0.1),
                   gamma=section.get("gamma", 0.1))
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    _reject_unknown(data, _TOP_KEYS, "config")
    model = _parse_model(dict(data.get("model", {})))

    transform_key = data.get("transform")
    if transform_key is None:
        transform = default_transform(model)
    elif transform_key == "log_return":
        transform = LogReturn()
    elif transform_key == "mean_scale":
        if not isinstance(model, Cir):
            raise ConfigError("transform: mean_scale needs the CIR long-term mean")
        transform = MeanScale(s_bar=model.s_bar)
    else:
        raise ConfigError(f"transform must be log_return or mean_scale, got {transform_key!r}")

    dt_grid = tuple(data.get("dt_grid", DEFAULT_DT_GRID))
    s_t_grid = tuple(data.get("s_t_grid",
                              DEFAULT_CIR_S_T_GRID if isinstance(model, Cir) else ()))
    variant_key = data.get("variant", "supervised")
    try:
        variant = GanVariant(variant_key)
    except ValueError as exc:
        raise ConfigError(f"variant must be vanilla or supervised, got {variant_key!r}") from exc

    seed = int(data.get("seed", 0))
    train_section = dict(data.get("train", {}))
    _reject_unknown(train_section, _TRAIN_KEYS, "train")
    try:
        train_cfg = TrainConfig(seed=seed, **train_section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"train: {exc}") from exc

    try:
        return RunConfig(
            model=model, transform=transform, dt_grid=dt_grid, s_t_grid=s_t_grid,
            gbm_s_t=float(data.get("gbm_s_t", 1.0)),
            n_train=int(data.get("n_train", 100_000)),
            variant=variant, seed=seed,
            out_dir=str(data.get("out_dir", "runs/out")), train=train_cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> RunConfig:
    """Load and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data)


def serialize_config(config: RunConfig) -> dict:
    model = config.model
    if isinstance(model, Gbm):
        model_dict = {"kind": "gbm", "mu": model.mu, "sigma": model.sigma}
    else:
        model_dict = {"kind": "cir", "kappa": model.kappa, "s_bar": model.s_bar,
                      "gamma": model.gamma}
    train_dict = dataclasses.asdict(config.train)
    train_dict.pop("seed")
    return {
        "model": model_dict,
        "transform": transform_name(config.transform),
        "dt_grid": list(config.dt_grid),
        "s_t_grid": list(config.s_t_grid),
        "gbm_s_t": config.gbm_s_t,
        "n_train": config.n_train,
        "variant": config.variant.value,
        "seed": config.seed,
        "out_dir": config.out_dir,
        "train": train_dict,
    }


def config_hash(config: RunConfig) -> str:
    """Hash of the semantic config fields (out_dir moves artifacts, not results)."""
    data = serialize_config(config)
    data.pop("out_dir")
    canonical = json.dumps(data, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: RunConfig,
                    artifacts: list[str]) -> None:
    manifest = {
        "command": command,
        "version": sdegan.__version__,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "artifacts": artifacts,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _experiment_rng(config: RunConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((config.seed, stream)))


def _build_data(config: RunConfig):
    rng = _experiment_rng(config, 101)
    return build_training_set(config.model, config.transform, config.dt_grid,
                              config.s_t_grid, config.n_train, rng,
                              gbm_s_t=config.gbm_s_t)


def _require_checkpoint(args) -> Checkpoint:
    if not args.checkpoint:
        raise FileNotFoundError("this command needs --checkpoint pointing at a "
                                "trained checkpoint file")
    if not Path(args.checkpoint).exists():
        raise FileNotFoundError(f"checkpoint not found: {args.checkpoint}")
    return load_checkpoint(args.checkpoint)


def _sampler_from(ckpt: Checkpoint) -> GanSampler:
    return GanSampler(net=ckpt.generator, model=ckpt.model, transform=ckpt.transform,
                      variant=ckpt.variant, dt_grid=ckpt.dt_grid)


def cmd_gen_data(args, config: RunConfig, out_dir: Path) -> list[str]:
    ts = _build_data(config)
    ts.to_csv(out_dir / "train_data.csv")
    return ["train_data.csv"]


def cmd_train(args, config: RunConfig, out_dir: Path) -> list[str]:
    ts = _build_data(config)
    artifacts = []

    def checkpoint_name(tag: str) -> str:
        return f"checkpoint_{tag}.txt"

    def save(g_net, d_net, tag: str, log) -> None:
        extra = {
            "gbm_s_t": config.gbm_s_t,
            "eval_n": config.train.eval_n,
            "eval_dt": config.train.eval_dt,
            "eval_s_t": config.train.eval_s_t,
            "final_ks": log.final_ks,
            "final_w1": log.final_w1,
            "init": "glorot_uniform",
            "dtype": config.train.dtype,
        }
        name = checkpoint_name(tag)
        save_checkpoint(out_dir / name, g_net, d_net, config.model,
                        config.transform, config.variant, config.dt_grid,
                        config.s_t_grid, config.seed, extra=extra)
        artifacts.append(name)

    def on_epoch(epoch, g_net, d_net, log):
        if (epoch + 1) % 10 == 0:
            save(g_net, d_net, f"epoch_{epoch + 1:04d}", log)

    result = train(config.variant, ts, config.train, epoch_callback=on_epoch)
    save(result.generator, result.discriminator, "final", result.log)
    result.log.to_csv(out_dir / "training_log.csv")
    artifacts.append("training_log.csv")
    print(f"trained {config.variant.value} GAN: {result.wall_seconds:.0f} s, "
          f"final ks={result.log.final_ks:.5f}, w1={result.log.final_w1:.6f}")
    return artifacts


def _one_step_samplers(ckpt: Checkpoint, s_t: float, dt: float):
    """Single-step scheme samplers at the test condition, per the sweep protocol."""
    model = ckpt.model
    from sdegan.paths import SchemeStepper

    samplers = {}
    for kind in scheme_kinds_for(model):
        stepper = SchemeStepper(model, kind)
        samplers[kind.value] = (
            lambda n, rng, st=stepper: st.step(np.full(n, s_t), dt,
                                               rng.standard_normal(n)))
    return samplers


def cmd_eval_dist(args, config: RunConfig, out_dir: Path) -> list[str]:
    ckpt = _require_checkpoint(args)
    sampler = _sampler_from(ckpt)
    train_cfg = dataclasses.replace(
        config.train, seed=ckpt.seed,
        eval_n=ckpt.extra.get("eval_n", config.train.eval_n),
        eval_dt=ckpt.extra.get("eval_dt", config.train.eval_dt),
        eval_s_t=ckpt.extra.get("eval_s_t", config.train.eval_s_t))
    gbm_s_t = ckpt.extra.get("gbm_s_t", 1.0)
    eval_dt, eval_s_t, z_eval, exact_eval = held_out_eval_data(
        ckpt.model, gbm_s_t, train_cfg)
    ks, w1 = generator_eval_metrics(ckpt.generator, ckpt.transform,
                                    ckpt.generator.in_dim - 1, eval_dt, eval_s_t,
                                    z_eval, exact_eval)

    dt = args.dt if args.dt is not None else eval_dt
    s_t = args.s0 if args.s0 is not None else eval_s_t

    def gan_sampler(n, rng):
        return sampler.step(np.full(n, s_t), dt, rng.standard_normal(n))

    def exact_ref(n, rng):
        return exact_sample(ckpt.model, s_t, dt, rng, size=n)

    sweep_rng = _experiment_rng(config, 102)
    report = benchmark_sweep({"gan": gan_sampler,
                              **_one_step_samplers(ckpt, s_t, dt)},
                             reference=exact_ref, rng=sweep_rng)
    report.to_csv(out_dir / "sweep.csv")
    report.aggregate_to_csv(out_dir / "sweep_agg.csv")

    n_samples = args.n if args.n is not None else 10_000
    sample_rng = _experiment_rng(config, 107)
    with open(out_dir / "samples.csv", "w", newline="") as fh:
        fh.write("source,value\n")
        for name, fn in (("gan", gan_sampler), ("exact", exact_ref)):
            for v in fn(n_samples, sample_rng):
                fh.write(f"{name},{float(v)!r}\n")

    with open(out_dir / "eval.csv", "w", newline="") as fh:
        fh.write("metric,dt,s_t,n,value\n")
        fh.write(f"ks,{eval_dt!r},{eval_s_t!r},{train_cfg.eval_n},{ks!r}\n")
        fh.write(f"w1,{eval_dt!r},{eval_s_t!r},{train_cfg.eval_n},{w1!r}\n")
    logged = ckpt.extra.get("final_ks")
    if logged is not None and not math.isnan(logged):
        drift = abs(ks - logged)
        print(f"held-out ks={ks!r} (training-time {logged!r}, |diff|={drift:.2e})")
        if drift > 1e-12:
            raise RuntimeError("eval-dist does not reproduce the logged final KS")
    return ["eval.csv", "sweep.csv", "sweep_agg.csv", "samples.csv"]


def cmd_error_sweep(args, config: RunConfig, out_dir: Path) -> list[str]:
    ckpt = _require_checkpoint(args)
    sampler = _sampler_from(ckpt)
    s0 = args.s0 if args.s0 is not None else (0.1 if isinstance(ckpt.model, Cir) else 1.0)
    m_paths = args.n if args.n is not None else 100_000
    rows = error_vs_dt_experiment(sampler, ckpt.model, s0, m_paths=m_paths,
                                  rng=_experiment_rng(config, 103))
    error_rows_to_csv(rows, out_dir / "errors.csv")
    return ["errors.csv"]


def cmd_path_sim(args, config: RunConfig, out_dir: Path) -> list[str]:
    if args.checkpoint:
        ckpt = _require_checkpoint(args)
        source = _sampler_from(ckpt)
        model = ckpt.model
    else:
        model = config.model
        source = ExactStepper(model)
    s0 = args.s0 if args.s0 is not None else (0.1 if isinstance(model, Cir) else 1.0)
    dt = args.dt if args.dt is not None else 1.0
    m_paths = args.n if args.n is not None else 100
    ens = generate_paths(source, model, s0, dt, args.steps, m_paths,
                         rng=_experiment_rng(config, 104))
    ens.to_csv(out_dir / "paths.csv")
    return ["paths.csv"]


def cmd_mean_revert(args, config: RunConfig, out_dir: Path) -> list[str]:
    ckpt = _require_checkpoint(args)
    if not isinstance(ckpt.model, Cir):
        raise RuntimeError("mean-revert requires a CIR checkpoint")
    sampler = _sampler_from(ckpt)
    s0 = args.s0 if args.s0 is not None else 0.01
    dt = args.dt if args.dt is not None else 1.0
    m_paths = args.n if args.n is not None else 100_000
    res = mean_reversion_experiment(sampler, ckpt.model, s0=s0, dt=dt,
                                    n_reps=100, m_paths=m_paths,
                                    rng=_experiment_rng(config, 105))
    res.to_csv(out_dir / "mean_revert.csv")
    return ["mean_revert.csv"]


def cmd_map_dump(args, config: RunConfig, out_dir: Path) -> list[str]:
    ckpt = _require_checkpoint(args)
    sampler = _sampler_from(ckpt)
    dt = args.dt if args.dt is not None else 1.0
    s_t = args.s0 if args.s0 is not None else (
        0.1 if isinstance(ckpt.model, Cir) else ckpt.extra.get("gbm_s_t", 1.0))
    dump = map_dump(sampler, ckpt.model, ckpt.transform, s_t, dt)
    dump.to_csv(out_dir / "map.csv")
    return ["map.csv"]


def cmd_disc_grid(args, config: RunConfig, out_dir: Path) -> list[str]:
    ckpt = _require_checkpoint(args)
    if ckpt.variant is not GanVariant.SUPERVISED:
        raise RuntimeError("disc-grid needs a supervised checkpoint "
                           "(the vanilla discriminator has no z input)")
    dt = args.dt if args.dt is not None else 1.0
    s_t = args.s0 if args.s0 is not None else (
        0.1 if isinstance(ckpt.model, Cir) else ckpt.extra.get("gbm_s_t", 1.0))
    z_grid = default_map_grid()
    from sdegan.preprocess import encode_target

    r_exact = encode_target(step_from_z(ckpt.model, s_t, dt, z_grid), s_t,
                            ckpt.transform)
    lo, hi = float(np.min(r_exact)), float(np.max(r_exact))
    pad = 0.3 * (hi - lo)
    r_grid = np.linspace(lo - pad, hi + pad, 100)
    grid = disc_grid(ckpt.discriminator, ckpt.variant, s_t, dt, z_grid, r_grid)
    grid.to_csv(out_dir / "grid.csv")
    return ["grid.csv"]


def cmd_autocorr(args, config: RunConfig, out_dir: Path) -> list[str]:
    ckpt = _require_checkpoint(args)
    if not isinstance(ckpt.model, Cir):
        raise RuntimeError("autocorr requires a CIR checkpoint")
    sampler = _sampler_from(ckpt)
    n = args.n if args.n is not None else 1000
    table = autocorr_scatter(sampler, ckpt.model, n=n,
                             rng=_experiment_rng(config, 106))
    table.to_csv(out_dir / "autocorr.csv")
    return ["autocorr.csv"]


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval-dist": cmd_eval_dist,
    "error-sweep": cmd_error_sweep,
    "path-sim": cmd_path_sim,
    "mean-revert": cmd_mean_revert,
    "map-dump": cmd_map_dump,
    "disc-grid": cmd_disc_grid,
    "autocorr": cmd_autocorr,
}


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdegan",
        description="Conditional-GAN sampling of SDE transition laws")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--checkpoint", default=None, help="trained checkpoint path")
    parser.add_argument("--dt", type=float, default=None, help="time step")
    parser.add_argument("--s0", type=float, default=None,
                        help="start level / conditioning level")
    parser.add_argument("--n", type=int, default=None,
                        help="sample / path count override")
    parser.add_argument("--variant", choices=("vanilla", "supervised"), default=None)
    parser.add_argument("--steps", type=int, default=10,
                        help="steps per path for path-sim")
    return parser


def _apply_env_overrides(args) -> None:
    if args.config is None and _env("CONFIG"):
        args.config = _env("CONFIG")
    if args.seed is None and _env("SEED"):
        args.seed = int(_env("SEED"))
    if args.out is None and _env("OUT"):
        args.out = _env("OUT")
    if args.checkpoint is None and _env("CHECKPOINT"):
        args.checkpoint = _env("CHECKPOINT")
    if args.dt is None and _env("DT"):
        args.dt = float(_env("DT"))
    if args.s0 is None and _env("S0"):
        args.s0 = float(_env("S0"))
    if args.n is None and _env("N"):
        args.n = int(_env("N"))
    if args.variant is None and _env("VARIANT"):
        args.variant = _env("VARIANT")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_env_overrides(args)
    except ValueError as exc:
        print(f"config error: bad environment override: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = parse_config(args.config) if args.config else config_from_dict({})
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
            overrides["train"] = dataclasses.replace(config.train, seed=args.seed)
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.variant is not None:
            overrides["variant"] = GanVariant(args.variant)
        if overrides:
            config = dataclasses.replace(config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = _COMMANDS[args.command](args, config, out_dir)
        _write_manifest(out_dir, args.command, config, artifacts)
    except (FileNotFoundError, CheckpointError, RuntimeError, TypeError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
