"""
Domain types, unit conventions, and configuration validation.

All quadrature quantities are in shot-noise units (SNU): a vacuum quadrature measured
by homodyne detection has variance 1, and 1 SNU of variance is 1/4 photon.
"""

from __future__ import annotations

import dataclasses
import enum
import typing


Snu: typing.TypeAlias = float

# minimum number of disclosed pulses for the variance check
MIN_DISCLOSED_PULSES = 100

PHOTONS_PER_SNU = 0.25


class SourceKind(enum.Enum):
    IDEAL = "ideal"
    TAP_HOMODYNE = "tap"
    ATTENUATOR_FLUCTUATION = "attenuator"


class AttackKind(enum.Enum):
    NO_ATTACK = "none"
    BEAMSPLITTER = "bs"
    HETERODYNE_INTERCEPT_RESEND = "het"


class Basis(enum.IntEnum):
    X = 0
    P = 1


class DeviationMode(enum.Enum):
    """
    How a deviation in the transmittance is read.
    """

    RELATIVE = "relative"
    ABSOLUTE = "absolute"


class Validated:
    """
    Mixin for frozen dataclasses that check their invariants on construction.
    """

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
        return []


@dataclasses.dataclass(frozen=True)
class SourceModel(Validated):
    """
    How well Alice knows the amplitude that leaves her station.

    Parameters
    ----------
    kind
        Which source imperfection is modelled.
    tap_transmittance
        Transmittance of the tap beamsplitter feeding Alice's monitoring homodyne.
    var_n_A
        Variance of Alice's self-knowledge noise, SNU.
    rel_sigma
        Relative standard deviation of the attenuation.
    """

    kind: SourceKind = SourceKind.IDEAL
    tap_transmittance: float = 0.5
    var_n_A: Snu = 0.0
    rel_sigma: float = 0.0

    @classmethod
    def tap(
        cls,
        tap_transmittance: float = 0.5,
        var_n_A: Snu | None = None,
    ) -> SourceModel:
        """
        A tap-and-homodyne source; without an explicit noise variance, the monitoring
        homodyne noise is referred back to the transmitted arm.
        """

        if var_n_A is None:
            var_n_A = 1.0 / (1.0 - tap_transmittance)

        return cls(
            kind=SourceKind.TAP_HOMODYNE,
            tap_transmittance=tap_transmittance,
            var_n_A=var_n_A,
        )

    def _do_validation(self) -> list[str]:

        errors: list[str] = []

        if not 0 < self.tap_transmittance < 1:
            errors.append(
                f"Tap transmittance must be in (0,1) ({self.tap_transmittance})"
            )

        if self.var_n_A < 0:
            errors.append(f"var_n_A must be non-negative ({self.var_n_A})")

        if self.rel_sigma < 0:
            errors.append(f"rel_sigma must be non-negative ({self.rel_sigma})")

        if self.kind is SourceKind.IDEAL and self.var_n_A != 0:
            errors.append(f"An ideal source has var_n_A = 0 ({self.var_n_A})")

        if self.kind is SourceKind.TAP_HOMODYNE and self.var_n_A < 1:
            errors.append(
                f"A tap-homodyne source has var_n_A of at least 1 ({self.var_n_A})"
            )

        if self.kind is not SourceKind.ATTENUATOR_FLUCTUATION and self.rel_sigma != 0:
            errors.append(
                "rel_sigma only applies to an attenuator-fluctuation source "
                + f"({self.rel_sigma})"
            )

        return errors


@dataclasses.dataclass(frozen=True)
class AttackModel(Validated):
    """
    Eve's attack and the fraction of pulses it is applied to.
    """

    kind: AttackKind = AttackKind.NO_ATTACK
    fraction: float = 1.0

    def __post_init__(self) -> None:

        if self.kind is AttackKind.NO_ATTACK:
            object.__setattr__(self, "fraction", 0.0)

        super().__post_init__()

    @property
    def is_mixture(self) -> bool:
        return 0 < self.fraction < 1

    def _do_validation(self) -> list[str]:

        errors: list[str] = []

        if not 0 <= self.fraction <= 1:
            errors.append(f"Attack fraction must be in [0,1] ({self.fraction})")

        return errors


@dataclasses.dataclass(frozen=True)
class SessionConfig(Validated):
    """
    A full experiment specification.

    Parameters
    ----------
    V
        Modulation variance per quadrature, SNU.
    T_nominal
        Total transmittance assumed by the users.
    T_true
        Actual total transmittance.
    n_pulses
        Number of pulses sent in the session.
    seed
        Seed from which all of the session's randomness is derived.
    disclosure_fraction
        Fraction of pulses sacrificed for the variance check.
    source
        Alice's source model.
    attack
        Eve's attack model.
    """

    V: Snu
    T_nominal: float
    T_true: float
    n_pulses: int
    seed: int
    disclosure_fraction: float = 0.5
    source: SourceModel = dataclasses.field(default_factory=SourceModel)
    attack: AttackModel = dataclasses.field(default_factory=AttackModel)

    @property
    def var_n_A(self) -> Snu:
        return self.source.var_n_A

    @property
    def expected_disclosed(self) -> float:
        return self.n_pulses * self.disclosure_fraction

    def replace(self, **changes: typing.Any) -> SessionConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, object]:
        """
        Flat, JSON-serialisable view of the configuration.
        """

        return {
            "V": self.V,
            "T_nominal": self.T_nominal,
            "T_true": self.T_true,
            "n_pulses": self.n_pulses,
            "seed": self.seed,
            "disclosure_fraction": self.disclosure_fraction,
            "source": self.source.kind.value,
            "tap_transmittance": self.source.tap_transmittance,
            "var_n_A": self.source.var_n_A,
            "rel_sigma": self.source.rel_sigma,
            "attack": self.attack.kind.value,
            "fraction": self.attack.fraction,
        }

    def _do_validation(self) -> list[str]:

        errors: list[str] = []

        if not self.V > 0:
            errors.append(f"V must be positive ({self.V})")

        for name, value in (("T_true", self.T_true), ("T_nominal", self.T_nominal)):
            if not 0 < value <= 1:
                errors.append(f"{name}: transmittance must be in (0,1] ({value})")

        if self.n_pulses < 1:
            errors.append(f"n_pulses must be a positive integer ({self.n_pulses})")

        if not 0 < self.disclosure_fraction < 1:
            errors.append(
                f"Disclosure fraction must be in (0,1) ({self.disclosure_fraction})"
            )
        elif self.expected_disclosed < MIN_DISCLOSED_PULSES:
            errors.append(
                "n_pulses * disclosure_fraction must be at least "
                + f"{MIN_DISCLOSED_PULSES} ({self.expected_disclosed:g})"
            )

        if not 0 <= self.seed < 2**64:
            errors.append(f"Seed must be an unsigned 64-bit integer ({self.seed})")

        return errors


@dataclasses.dataclass(frozen=True)
class PulseRecord:
    """
    What each party holds for a single pulse.

    `m_E` is None when Eve did not attack the pulse.
    """

    m_x: Snu
    m_p: Snu
    basis: Basis
    m: Snu
    m_A: Snu
    m_B: Snu
    m_E: Snu | None
    attacked: bool
    disclosed: bool


def validate(config: SessionConfig) -> SessionConfig:
    """
    Checks every invariant of the configuration, returning it unchanged.

    Raises
    ------
    ValueError
        Naming each violated invariant.
    """

    config.source.validate()
    config.attack.validate()
    config.validate()

    return config


def photons_to_snu(n_photons: float) -> Snu:

    if n_photons < 0:
        raise ValueError(f"Photon number must be non-negative ({n_photons})")

    return n_photons / PHOTONS_PER_SNU


def snu_to_photons(variance: Snu) -> float:

    if variance < 0:
        raise ValueError(f"Variance must be non-negative ({variance})")

    return variance * PHOTONS_PER_SNU
