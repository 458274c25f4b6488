"""Shared forecaster contract and parameter plumbing for the neural models.

Every model maps a normalized lookback window [B, L] to a horizon
[B, H] through `forward`, exposes its learnable tensors in a stable
order, and can be re-initialized deterministically from a seed. Weight
matrices draw from a Glorot-uniform distribution, biases start at zero
(LSTM forget gates at one); the same seed always reproduces the same
bits.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .. import tensor as T
from ..errors import DimensionError, InputError

_CHECKPOINT_MAGIC = b"HRBM"
_CHECKPOINT_VERSION = 1


def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def glorot_matrix(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    return glorot_uniform(rng, (n_in, n_out), n_in, n_out)


def glorot_conv(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    # fan counts include the full receptive field
    receptive = int(np.prod(shape[2:]))
    return glorot_uniform(rng, shape, shape[1] * receptive, shape[0] * receptive)


class ForecastModel:
    """Contract: parameters() in stable order, forward [B,L] -> [B,H],
    reset(seed) reinitializes deterministically."""

    name = "base"

    def __init__(self, lookback: int, horizon: int, config, seed: int = 0):
        self.lookback = lookback
        self.horizon = horizon
        self.config = config
        self._names: list[str] = []
        self._p: dict[str, T.Tensor] = {}
        self.reset(seed)

    # subclasses yield (name, array) pairs in a fixed order
    def _init_arrays(self, rng: np.random.Generator):
        raise NotImplementedError

    def _forward(self, batch: T.Tensor) -> T.Tensor:
        raise NotImplementedError

    def reset(self, seed: int):
        rng = np.random.default_rng(seed)
        self._names = []
        self._p = {}
        for name, array in self._init_arrays(rng):
            self._names.append(name)
            self._p[name] = T.Tensor(array, requires_grad=True, name=f"{self.name}.{name}")
        self.seed = seed

    def parameters(self) -> list[T.Tensor]:
        return [self._p[n] for n in self._names]

    def forward(self, batch: T.Tensor) -> T.Tensor:
        if batch.ndim != 2 or batch.shape[1] != self.lookback:
            raise DimensionError(
                f"{self.name} expects [batch, {self.lookback}], got {batch.shape}"
            )
        return self._forward(batch)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Graph-free forward for evaluation."""
        with T.no_grad():
            return self.forward(T.Tensor(x)).data.copy()

    # -- state ---------------------------------------------------------
    def state_arrays(self) -> list[np.ndarray]:
        return [self._p[n].data.copy() for n in self._names]

    def load_state(self, arrays: list[np.ndarray]):
        if len(arrays) != len(self._names):
            raise InputError(
                f"{self.name} has {len(self._names)} parameters, snapshot holds {len(arrays)}"
            )
        for name, arr in zip(self._names, arrays):
            p = self._p[name]
            if arr.shape != p.data.shape:
                raise InputError(f"snapshot shape {arr.shape} does not match {name} {p.data.shape}")
            p.data = np.ascontiguousarray(arr, dtype=np.float64)

    def zero_grads(self):
        for p in self.parameters():
            p.zero_grad()

    @property
    def config_digest(self) -> str:
        doc = {"model": self.name, "lookback": self.lookback, "horizon": self.horizon,
               "config": asdict(self.config) if self.config is not None else None}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    @property
    def n_scalars(self) -> int:
        return sum(p.size for p in self.parameters())


# ---------------------------------------------------------------------------
# checkpoints: header (model name, config digest, parameter count) then
# little-endian float64 values in parameter-list order


def save_checkpoint(model: ForecastModel, path):
    path = Path(path)
    name = model.name.encode()
    digest = model.config_digest.encode()
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<H", _CHECKPOINT_VERSION))
        fh.write(struct.pack("<H", len(name)))
        fh.write(name)
        fh.write(struct.pack("<H", len(digest)))
        fh.write(digest)
        fh.write(struct.pack("<Q", model.n_scalars))
        for p in model.parameters():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(model: ForecastModel, path):
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != _CHECKPOINT_MAGIC:
        raise InputError(f"{path} is not a model checkpoint")
    off = 4
    (version,) = struct.unpack_from("<H", blob, off); off += 2
    if version != _CHECKPOINT_VERSION:
        raise InputError(f"unsupported checkpoint version {version}")
    (nlen,) = struct.unpack_from("<H", blob, off); off += 2
    name = blob[off : off + nlen].decode(); off += nlen
    (dlen,) = struct.unpack_from("<H", blob, off); off += 2
    digest = blob[off : off + dlen].decode(); off += dlen
    (count,) = struct.unpack_from("<Q", blob, off); off += 8
    if name != model.name:
        raise InputError(f"checkpoint holds {name!r}, expected {model.name!r}")
    if digest != model.config_digest:
        raise InputError("checkpoint config digest does not match this model")
    if count != model.n_scalars:
        raise InputError(f"checkpoint holds {count} values, model needs {model.n_scalars}")
    flat = np.frombuffer(blob, dtype="<f8", offset=off, count=count)
    arrays = []
    pos = 0
    for p in model.parameters():
        arrays.append(flat[pos : pos + p.size].reshape(p.data.shape).copy())
        pos += p.size
    model.load_state(arrays)
