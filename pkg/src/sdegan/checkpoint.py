"""Versioned text checkpoints for trained generator/discriminator pairs.

The format is a two-line envelope (format tag, payload checksum) followed
by a JSON payload holding the run metadata and every weight/bias array as
full-precision decimal strings (repr round-trips doubles and singles
exactly), so reloading reproduces forward outputs bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from sdegan.gan import GanVariant
from sdegan.nn import MLP
from sdegan.preprocess import LogReturn, MeanScale, Transform
from sdegan.sde import Cir, Gbm, SdeModel

FORMAT_TAG = "sdegan-checkpoint v1"


class CheckpointError(ValueError):
    """Unreadable, corrupt, or incompatible checkpoint file."""


@dataclass
class Checkpoint:
    generator: MLP
    discriminator: MLP
    model: SdeModel
    transform: Transform
    variant: GanVariant
    dt_grid: tuple[float, ...]
    s_t_grid: tuple[float, ...]
    seed: int
    extra: dict


def _model_to_dict(model: SdeModel) -> dict:
    if isinstance(model, Gbm):
        return {"kind": "gbm", "mu": model.mu, "sigma": model.sigma}
    return {"kind": "cir", "kappa": model.kappa, "s_bar": model.s_bar,
            "gamma": model.gamma}


def _model_from_dict(data: dict) -> SdeModel:
    if data["kind"] == "gbm":
        return Gbm(mu=data["mu"], sigma=data["sigma"])
    if data["kind"] == "cir":
        return Cir(kappa=data["kappa"], s_bar=data["s_bar"], gamma=data["gamma"])
    raise CheckpointError(f"unknown model kind {data['kind']!r}")


def _transform_to_dict(kind: Transform) -> dict:
    if isinstance(kind, LogReturn):
        return {"kind": "log_return"}
    return {"kind": "mean_scale", "s_bar": kind.s_bar}


def _transform_from_dict(data: dict) -> Transform:
    if data["kind"] == "log_return":
        return LogReturn()
    if data["kind"] == "mean_scale":
        return MeanScale(s_bar=data["s_bar"])
    raise CheckpointError(f"unknown transform {data['kind']!r}")


def _net_to_dict(net: MLP) -> dict:
    return {
        "dims": list(net.dims),
        "activations": list(net.activations),
        "dtype": np.dtype(net.dtype).name,
        "weights": [[repr(float(v)) for v in w.ravel()] for w in net.weights],
        "biases": [[repr(float(v)) for v in b.ravel()] for b in net.biases],
    }


def _net_from_dict(data: dict) -> MLP:
    dims = data["dims"]
    dtype = np.dtype(data["dtype"])
    weights, biases = [], []
    for i in range(len(dims) - 1):
        shape = (dims[i], dims[i + 1])
        w = np.array([float(v) for v in data["weights"][i]],
                     dtype=dtype).reshape(shape)
        b = np.array([float(v) for v in data["biases"][i]], dtype=dtype)
        weights.append(w)
        biases.append(b)
    return MLP(weights, biases, tuple(data["activations"]))


def save_checkpoint(path, generator: MLP, discriminator: MLP, model: SdeModel,
                    transform: Transform, variant: GanVariant,
                    dt_grid, s_t_grid, seed: int, extra: dict | None = None) -> None:
    payload = json.dumps({
        "model": _model_to_dict(model),
        "transform": _transform_to_dict(transform),
        "variant": variant.value,
        "dt_grid": list(dt_grid),
        "s_t_grid": list(s_t_grid),
        "seed": seed,
        "extra": extra or {},
        "generator": _net_to_dict(generator),
        "discriminator": _net_to_dict(discriminator),
    }, indent=None, separators=(",", ":"))
    digest = hashlib.sha256(payload.encode()).hexdigest()
    with open(path, "w") as fh:
        fh.write(f"{FORMAT_TAG}\nsha256:{digest}\n{payload}\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path) as fh:
        text = fh.read()
    lines = text.split("\n", 2)
    if len(lines) < 3:
        raise CheckpointError(f"{path}: truncated checkpoint")
    tag, checksum_line, payload = lines[0], lines[1], lines[2].rstrip("\n")
    if tag != FORMAT_TAG:
        raise CheckpointError(f"{path}: unsupported format {tag!r}")
    if not checksum_line.startswith("sha256:"):
        raise CheckpointError(f"{path}: missing checksum line")
    want = checksum_line.removeprefix("sha256:")
    got = hashlib.sha256(payload.encode()).hexdigest()
    if got != want:
        raise CheckpointError(f"{path}: checksum mismatch (corrupt file)")
    data = json.loads(payload)
    return Checkpoint(
        generator=_net_from_dict(data["generator"]),
        discriminator=_net_from_dict(data["discriminator"]),
        model=_model_from_dict(data["model"]),
        transform=_transform_from_dict(data["transform"]),
        variant=GanVariant(data["variant"]),
        dt_grid=tuple(data["dt_grid"]),
        s_t_grid=tuple(data["s_t_grid"]),
        seed=data["seed"],
        extra=data["extra"],
    )
