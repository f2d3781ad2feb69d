"""Pipeline configuration: INI-style text files with three sections.

The file mirrors the three stage configs: ``[synth]`` for cohort
generation, ``[oracle]`` for reward-model fitting, ``[replay]`` for the
replay experiment.  Unknown sections or keys are rejected by name.
"""

import configparser
import dataclasses
from dataclasses import dataclass

from .errors import ConfigurationError
from .features import Variant
from .oracle import DEFAULT_CV_FOLDS, DEFAULT_THRESHOLD, RewardMode
from .simulator import ReplayConfig, SamplingMode
from .synth import Mechanism, SynthConfig


@dataclass(frozen=True)
class OracleSettings:
    """How the counterfactual reward model is selected and applied."""

    threshold: float = DEFAULT_THRESHOLD
    mode: RewardMode = RewardMode.BINARY
    folds: int = DEFAULT_CV_FOLDS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError("threshold must be in (0, 1)")
        if not isinstance(self.folds, int) or self.folds < 2:
            raise ConfigurationError("folds must be an integer >= 2")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one end-to-end run needs."""

    synth: SynthConfig = SynthConfig()
    oracle: OracleSettings = OracleSettings()
    replay: ReplayConfig = ReplayConfig()
    variant: Variant = Variant.INTERACTIONS
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigurationError("lam must be > 0")

    def with_seed(self, seed):
        """Copy with the master seed applied to every stage."""
        return dataclasses.replace(
            self,
            synth=dataclasses.replace(self.synth, seed=seed),
            oracle=dataclasses.replace(self.oracle, seed=seed),
            replay=dataclasses.replace(self.replay, master_seed=seed),
        )


def _parse_grid(text):
    values = []
    for piece in text.split(","):
        piece = piece.strip()
        if piece:
            values.append(float(piece))
    if not values:
        raise ValueError("empty grid")
    return tuple(values)


def _parse_popcount(text):
    return int(text)


_SYNTH_KEYS = {
    "seed": int,
    "n_patients": int,
    "n_homes": int,
    "popcount_min": _parse_popcount,
    "popcount_max": _parse_popcount,
    "adverse_rate": float,
    "mechanism": Mechanism.parse,
    "main_scale": float,
    "mask_scale": float,
    "interaction_scale": float,
    "tree_weight_scale": float,
    "logit_noise": float,
    "popcount_mean": float,
    "nurse_candidates": int,
}

_ORACLE_KEYS = {
    "threshold": float,
    "mode": RewardMode.parse,
    "folds": int,
    "seed": int,
}

_REPLAY_KEYS = {
    "horizon": int,
    "replications": int,
    "master_seed": int,
    "sampling": SamplingMode.parse,
    "grid": _parse_grid,
    "variant": Variant.parse,
    "lam": float,
}

_SECTIONS = {"synth": _SYNTH_KEYS, "oracle": _ORACLE_KEYS, "replay": _REPLAY_KEYS}


def _convert_section(parser, section, keymap):
    out = {}
    if not parser.has_section(section):
        return out
    for key, raw in parser.items(section):
        if key not in keymap:
            raise ConfigurationError(f"unknown key '{key}' in section [{section}]")
        try:
            out[key] = keymap[key](raw)
        except ConfigurationError:
            raise
        except (ValueError, TypeError) as err:
            raise ConfigurationError(
                f"bad value for '{key}' in section [{section}]: {err}"
            ) from err
    return out


def load_pipeline_config(path=None, seed=None):
    """Parse a config file (or use defaults) into a PipelineConfig.

    ``seed`` overrides the seed of every stage, matching the CLI's
    ``--seed`` flag.
    """
    synth_kwargs, oracle_kwargs, replay_kwargs = {}, {}, {}
    variant = None
    lam = None
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as err:
            raise ConfigurationError(f"cannot read config file: {err}") from err
        except configparser.Error as err:
            raise ConfigurationError(f"malformed config file: {err}") from err
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigurationError(f"unknown config section [{section}]")
        synth_kwargs = _convert_section(parser, "synth", _SYNTH_KEYS)
        oracle_kwargs = _convert_section(parser, "oracle", _ORACLE_KEYS)
        replay_kwargs = _convert_section(parser, "replay", _REPLAY_KEYS)
        lo = synth_kwargs.pop("popcount_min", None)
        hi = synth_kwargs.pop("popcount_max", None)
        if lo is not None or hi is not None:
            default = SynthConfig.__dataclass_fields__["popcount_range"].default
            synth_kwargs["popcount_range"] = (
                lo if lo is not None else default[0],
                hi if hi is not None else default[1],
            )
        variant = replay_kwargs.pop("variant", None)
        lam = replay_kwargs.pop("lam", None)
    config = PipelineConfig(
        synth=SynthConfig(**synth_kwargs),
        oracle=OracleSettings(**oracle_kwargs),
        replay=ReplayConfig(**replay_kwargs),
        variant=variant if variant is not None else Variant.INTERACTIONS,
        lam=lam if lam is not None else 1.0,
    )
    if seed is not None:
        config = config.with_seed(seed)
    return config


def synth_payload(config):
    return {
        "seed": config.seed,
        "n_patients": config.n_patients,
        "n_homes": config.n_homes,
        "popcount_range": list(config.popcount_range),
        "adverse_rate": config.adverse_rate,
        "mechanism": config.mechanism.value,
        "main_scale": config.main_scale,
        "mask_scale": config.mask_scale,
        "interaction_scale": config.interaction_scale,
        "tree_weight_scale": config.tree_weight_scale,
        "logit_noise": config.logit_noise,
        "popcount_mean": config.popcount_mean,
        "nurse_candidates": config.nurse_candidates,
    }


def oracle_payload(settings):
    return {
        "threshold": settings.threshold,
        "mode": settings.mode.value,
        "folds": settings.folds,
        "seed": settings.seed,
    }


def replay_payload(config, variant, lam):
    return {
        "horizon": config.horizon,
        "replications": config.replications,
        "master_seed": config.master_seed,
        "sampling": config.sampling.value,
        "grid": list(config.grid),
        "variant": variant.value,
        "lam": lam,
    }


def pipeline_payload(config):
    return {
        "synth": synth_payload(config.synth),
        "oracle": oracle_payload(config.oracle),
        "replay": replay_payload(config.replay, config.variant, config.lam),
    }
