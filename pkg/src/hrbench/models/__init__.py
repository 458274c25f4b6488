"""Forecasting model registry: shared contract plus all architectures."""

from __future__ import annotations

from ..errors import ConfigError
from .base import ForecastModel, load_checkpoint, save_checkpoint
from .itransformer import ITransformerConfig, ITransformerForecaster
from .lstm import LstmConfig, LstmForecaster
from .naive import NaiveLastValue
from .patchtst import PatchTstConfig, PatchTstForecaster
from .tcn import TcnConfig, TcnForecaster
from .timesnet import TimesNetConfig, TimesNetForecaster
from .tsmixer import TsMixerConfig, TsMixerForecaster

# column order of the comparison table follows the fitted metrics, but this
# is the canonical roster: the two classical baselines plus six neural nets
CLASSICAL_MODELS = ("sarima", "prophet")
NEURAL_MODELS = ("lstm", "tcn", "tsmixer", "timesnet", "patchtst", "itransformer")
ALL_MODELS = CLASSICAL_MODELS + NEURAL_MODELS
EXTRA_MODELS = ("naive",)

_NEURAL_CLASSES = {
    "lstm": LstmForecaster,
    "tcn": TcnForecaster,
    "tsmixer": TsMixerForecaster,
    "timesnet": TimesNetForecaster,
    "patchtst": PatchTstForecaster,
    "itransformer": ITransformerForecaster,
    "naive": NaiveLastValue,
}


def build_neural(name: str, lookback: int, horizon: int, seed: int = 0, config=None) -> ForecastModel:
    try:
        cls = _NEURAL_CLASSES[name]
    except KeyError:
        valid = ", ".join(sorted(_NEURAL_CLASSES))
        raise ConfigError(f"unknown neural model {name!r}; expected one of: {valid}") from None
    return cls(lookback, horizon, config, seed=seed)


__all__ = [
    "ALL_MODELS", "CLASSICAL_MODELS", "NEURAL_MODELS", "EXTRA_MODELS",
    "ForecastModel", "build_neural", "save_checkpoint", "load_checkpoint",
    "LstmConfig", "LstmForecaster", "TcnConfig", "TcnForecaster",
    "TsMixerConfig", "TsMixerForecaster", "TimesNetConfig", "TimesNetForecaster",
    "PatchTstConfig", "PatchTstForecaster", "ITransformerConfig", "ITransformerForecaster",
    "NaiveLastValue",
]
