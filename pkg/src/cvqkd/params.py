"""
Handles the parameters for running a scenario.
"""

from __future__ import annotations

import collections.abc
import dataclasses
import enum
import json
import logging
import pathlib
import typing

import cvqkd.detect
import cvqkd.model
import cvqkd.reconcile
import cvqkd.sweep


LOGGER = logging.getLogger("cvqkd")


class ScenarioName(enum.Enum):
    BS_SWEEP = "bs-sweep"
    RR_KEYRATE = "rr-keyrate"
    HET_DETECT = "het-detect"
    FALSE_ALARM = "false-alarm"
    TAP_MARGIN = "tap-margin"
    RECONCILE_LEAK = "reconcile-leak"


ALLOWED_SWEEPS: dict[ScenarioName, tuple[str, ...]] = {
    ScenarioName.BS_SWEEP: ("T", "V", "var_n_A"),
    ScenarioName.RR_KEYRATE: ("T", "V", "var_n_A"),
    ScenarioName.HET_DETECT: ("rel_dT", "fraction", "T", "V"),
    ScenarioName.FALSE_ALARM: ("rel_dT", "T", "V"),
    ScenarioName.TAP_MARGIN: (),
    ScenarioName.RECONCILE_LEAK: ("n_slices", "T", "V", "var_n_A", "fraction"),
}

DEFAULT_ATTACKS: dict[ScenarioName, cvqkd.model.AttackKind] = {
    ScenarioName.BS_SWEEP: cvqkd.model.AttackKind.BEAMSPLITTER,
    ScenarioName.RR_KEYRATE: cvqkd.model.AttackKind.BEAMSPLITTER,
    ScenarioName.HET_DETECT: cvqkd.model.AttackKind.HETERODYNE_INTERCEPT_RESEND,
    ScenarioName.FALSE_ALARM: cvqkd.model.AttackKind.NO_ATTACK,
    ScenarioName.TAP_MARGIN: cvqkd.model.AttackKind.NO_ATTACK,
    ScenarioName.RECONCILE_LEAK: cvqkd.model.AttackKind.BEAMSPLITTER,
}

DEFAULT_THRESHOLDS = tuple(0.5 * step for step in range(1, 13))

# built-in values, overridden by a config file and then by flags
DEFAULT_SETTINGS: dict[str, object] = {
    "V": 100.0,
    "T": 0.5,
    "T_true": None,
    "var_nA": None,
    "source": cvqkd.model.SourceKind.IDEAL.value,
    "tap": 0.5,
    "rel_sigma": 0.0,
    "attack": None,
    "fraction": 1.0,
    "rel_dT": 0.0,
    "dT_mode": cvqkd.model.DeviationMode.RELATIVE.value,
    "alpha": 0.01,
    "pulses": 250_000,
    "disclose": 0.5,
    "slices": cvqkd.reconcile.DEFAULT_N_SLICES,
    "sweep": None,
    "seed": None,
    "out": None,
    "trials": 1_000,
    "thresholds": ",".join(f"{scale:g}" for scale in DEFAULT_THRESHOLDS),
    "m": 10.0,
    "loss_db": 10.0,
    "dev": 0.001,
    "workers": 1,
    "bootstrap": cvqkd.reconcile.DEFAULT_BOOTSTRAP,
    "ledger_out": None,
    "show_progress": False,
}


@dataclasses.dataclass
class Scenario:
    name: ScenarioName
    config: cvqkd.model.SessionConfig
    output_path: pathlib.Path
    sweep: cvqkd.sweep.Sweep | None = None
    rel_dT: float = 0.0
    dT_mode: cvqkd.model.DeviationMode = cvqkd.model.DeviationMode.RELATIVE
    alpha: float = 0.01
    n_slices: int = cvqkd.reconcile.DEFAULT_N_SLICES
    n_trials: int = 1_000
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    m_amplitude: cvqkd.model.Snu = 10.0
    loss_db: float = 10.0
    tap_deviation: float = 0.001
    workers: int = 1
    n_bootstrap: int = cvqkd.reconcile.DEFAULT_BOOTSTRAP
    ledger_out: pathlib.Path | None = None
    show_progress: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:

        errors = self._do_validation()

        if any(errors):
            error_msg = "\n".join(
                ["Encountered the following errors with the provided arguments:"]
                + [f"\t{error}" for error in errors]
            )
            raise ValueError(error_msg)

    def _do_validation(self) -> list[str]:

        errors: list[str] = []

        if self.sweep is not None:
            allowed = ALLOWED_SWEEPS[self.name]
            if self.sweep.parameter not in allowed:
                errors.append(
                    f"Scenario `{self.name.value}` cannot sweep "
                    + f"`{self.sweep.parameter}` "
                    + f"(allowed: {', '.join(allowed) or 'none'})"
                )

        if not 0 < self.alpha < 1:
            errors.append(f"Significance level must be in (0,1) ({self.alpha})")

        if self.rel_dT < 0:
            errors.append(
                f"Transmittance deviation must be non-negative ({self.rel_dT})"
            )

        if not 1 <= self.n_slices <= cvqkd.reconcile.MAX_N_SLICES:
            errors.append(
                f"Number of slices must be in [1, {cvqkd.reconcile.MAX_N_SLICES}] "
                + f"({self.n_slices})"
            )

        if (
            self.name in (ScenarioName.HET_DETECT, ScenarioName.FALSE_ALARM)
            and self.n_trials < cvqkd.detect.MIN_TRIALS
        ):
            errors.append(
                f"At least {cvqkd.detect.MIN_TRIALS} trials are needed "
                + f"({self.n_trials})"
            )

        if not self.thresholds or any(scale <= 0 for scale in self.thresholds):
            errors.append(f"Threshold scales must be positive ({self.thresholds})")

        if self.loss_db < 0:
            errors.append(f"User loss must be non-negative ({self.loss_db} dB)")

        if self.workers < 1:
            errors.append(f"Number of workers must be positive ({self.workers})")

        if self.n_bootstrap < 0:
            errors.append(f"Bootstrap count must be non-negative ({self.n_bootstrap})")

        return errors

    def to_dict(self) -> dict[str, object]:

        return {
            "scenario": self.name.value,
            "config": self.config.to_dict(),
            "sweep": None if self.sweep is None else str(self.sweep),
            "rel_dT": self.rel_dT,
            "dT_mode": self.dT_mode.value,
            "alpha": self.alpha,
            "n_slices": self.n_slices,
            "n_trials": self.n_trials,
            "thresholds": list(self.thresholds),
            "m_amplitude": self.m_amplitude,
            "loss_db": self.loss_db,
            "tap_deviation": self.tap_deviation,
            "n_bootstrap": self.n_bootstrap,
        }

    def canonical(self) -> str:
        """
        The settings that determine the output, as compact JSON with sorted keys.

        Worker count, progress display, and paths are excluded as they do not change
        the results.
        """

        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _to_bool(value: object) -> bool:

    if isinstance(value, bool):
        return value

    text = str(value).strip().lower()

    if text in ("1", "true", "yes", "on"):
        return True

    if text in ("0", "false", "no", "off"):
        return False

    raise ValueError(f"Not a boolean: `{value}`")


def _to_thresholds(value: object) -> tuple[float, ...]:

    if isinstance(value, collections.abc.Sequence) and not isinstance(value, str):
        return tuple(float(scale) for scale in value)

    return tuple(float(scale) for scale in str(value).split(",") if scale.strip())


def _convert(
    settings: collections.abc.Mapping[str, object],
    key: str,
    converter: collections.abc.Callable[[typing.Any], typing.Any],
    errors: list[str],
) -> typing.Any:

    value = settings[key]

    if value is None:
        return None

    try:
        return converter(value)
    except ValueError as err:
        errors.append(f"Invalid value for `{key}` ({value}): {err}")
        return None


def merge_settings(
    *layers: collections.abc.Mapping[str, object],
) -> dict[str, object]:
    """
    Combines settings from lowest to highest precedence; None means "not given".
    """

    merged = dict(DEFAULT_SETTINGS)

    for layer in layers:

        unknown = sorted(set(layer) - set(DEFAULT_SETTINGS))

        if unknown:
            raise ValueError(f"Unknown setting(s): {', '.join(unknown)}")

        merged.update(
            {key: value for (key, value) in layer.items() if value is not None}
        )

    return merged


def scenario_from_settings(
    name: str,
    settings: collections.abc.Mapping[str, object],
) -> Scenario:
    """
    Builds a validated scenario from merged settings.

    Raises
    ------
    ValueError
        Listing every invalid or missing setting.
    """

    errors: list[str] = []

    try:
        scenario_name = ScenarioName(name)
    except ValueError:
        raise ValueError(f"Unknown scenario: {name}") from None

    def get(
        key: str,
        converter: collections.abc.Callable[[typing.Any], typing.Any],
    ) -> typing.Any:
        return _convert(settings=settings, key=key, converter=converter, errors=errors)

    seed = get("seed", int)
    out = get("out", pathlib.Path)

    if seed is None and settings["seed"] is None:
        errors.append("A seed is required (--seed)")

    if settings["out"] is None:
        out = pathlib.Path(f"{scenario_name.value}.csv")
        LOGGER.info(f"No output path given; writing to {out}")

    T_nominal = get("T", float)
    T_true = get("T_true", float)
    var_n_A = get("var_nA", float)
    source_kind = get("source", cvqkd.model.SourceKind)
    tap = get("tap", float)
    rel_sigma = get("rel_sigma", float)
    attack_kind = get("attack", cvqkd.model.AttackKind)
    fraction = get("fraction", float)
    sweep = get("sweep", cvqkd.sweep.Sweep.parse)

    scenario_kwargs = {
        "rel_dT": get("rel_dT", float),
        "dT_mode": get("dT_mode", cvqkd.model.DeviationMode),
        "alpha": get("alpha", float),
        "n_slices": get("slices", int),
        "n_trials": get("trials", int),
        "thresholds": get("thresholds", _to_thresholds),
        "m_amplitude": get("m", float),
        "loss_db": get("loss_db", float),
        "tap_deviation": get("dev", float),
        "workers": get("workers", int),
        "n_bootstrap": get("bootstrap", int),
        "ledger_out": get("ledger_out", pathlib.Path),
        "show_progress": get("show_progress", _to_bool),
    }

    V = get("V", float)
    n_pulses = get("pulses", int)
    disclosure_fraction = get("disclose", float)

    if any(errors):
        raise ValueError(
            "\n".join(
                ["Encountered the following errors with the provided arguments:"]
                + [f"\t{error}" for error in errors]
            )
        )

    # Alice can only have self-knowledge noise if she monitors with a tap
    if source_kind is cvqkd.model.SourceKind.IDEAL and var_n_A:
        LOGGER.info(f"Using a tap-homodyne source for var_nA = {var_n_A}")
        source_kind = cvqkd.model.SourceKind.TAP_HOMODYNE

    if source_kind is cvqkd.model.SourceKind.TAP_HOMODYNE:
        source = cvqkd.model.SourceModel.tap(tap_transmittance=tap, var_n_A=var_n_A)
    else:
        source = cvqkd.model.SourceModel(
            kind=source_kind,
            tap_transmittance=tap,
            var_n_A=0.0 if var_n_A is None else var_n_A,
            rel_sigma=rel_sigma,
        )

    if attack_kind is None:
        attack_kind = DEFAULT_ATTACKS[scenario_name]

    config = cvqkd.model.SessionConfig(
        V=V,
        T_nominal=T_nominal,
        T_true=T_nominal if T_true is None else T_true,
        n_pulses=n_pulses,
        seed=seed,
        disclosure_fraction=disclosure_fraction,
        source=source,
        attack=cvqkd.model.AttackModel(kind=attack_kind, fraction=fraction),
    )

    return Scenario(
        name=scenario_name,
        config=config,
        output_path=out,
        sweep=sweep,
        **scenario_kwargs,
    )
