"""
The users' variance test for attack detection, and its behaviour under uncertainty
in the transmittance.
"""

from __future__ import annotations

import collections.abc
import concurrent.futures
import dataclasses
import enum
import functools
import logging

import numpy as np

import scipy.stats

import alive_progress

import cvqkd.model
import cvqkd.simulate
import cvqkd.streams


LOGGER = logging.getLogger("cvqkd")

# above this many disclosed pulses, the chi-square law is replaced by its normal limit
GAUSSIAN_APPROX_MIN = 10_000

MIN_TRIALS = 100

ROC_COLUMNS = (
    "rel_dT",
    "threshold_scale",
    "false_alarm",
    "missed_detection",
    "n_trials",
)

FALSE_ALARM_COLUMNS = ("rel_dT", "alpha", "false_alarm", "binomial_sigma", "n_trials")

TAP_COLUMNS = (
    "reading",
    "m_amplitude",
    "loss_db",
    "tap_deviation",
    "signal_shift",
    "attack_excess",
    "ratio",
    "critical_deviation",
)


class Decision(enum.Enum):
    ACCEPT = "Accept"
    ABORT_ATTACK_SUSPECTED = "AbortAttackSuspected"


class UnitReading(enum.Enum):
    """
    How an amplitude quoted without units is read.
    """

    SNU_AMPLITUDE = "snu-amplitude"
    PHOTON_NUMBER = "photon-number"


@dataclasses.dataclass(frozen=True)
class DetectionReport:
    n_disclosed: int
    var_hat: cvqkd.model.Snu
    expected_var: cvqkd.model.Snu
    threshold_lo: cvqkd.model.Snu
    threshold_hi: cvqkd.model.Snu
    decision: Decision
    p_value: float

    @property
    def z_score(self) -> float:
        """
        Deviation of the sample variance from its expectation, in units of the
        sample variance's standard deviation.
        """

        sd = self.expected_var * np.sqrt(2.0 / (self.n_disclosed - 1))

        return float(abs(self.var_hat - self.expected_var) / sd)


@dataclasses.dataclass(frozen=True)
class RocPoint:
    threshold_scale: float
    false_alarm: float
    missed_detection: float


@dataclasses.dataclass(frozen=True)
class FalseAlarmEstimate:
    rel_dT: float
    alpha: float
    false_alarm: float
    binomial_sigma: float
    n_trials: int


@dataclasses.dataclass(frozen=True)
class TapSensitivity:
    reading: UnitReading
    m_amplitude: cvqkd.model.Snu
    loss_db: float
    tap_deviation: float
    signal_shift: cvqkd.model.Snu
    attack_excess: cvqkd.model.Snu
    ratio: float
    critical_deviation: float


def expected_variance(config: cvqkd.model.SessionConfig) -> cvqkd.model.Snu:
    """
    The variance of Bob's outcomes that the users expect with no attack.
    """

    return config.T_nominal * config.V + 1.0


def variance_thresholds(
    expected_var: cvqkd.model.Snu,
    n_samples: int,
    alpha: float,
) -> tuple[float, float]:
    """
    Two-sided acceptance interval for the unbiased sample variance at level `alpha`.
    """

    dof = n_samples - 1

    if n_samples > GAUSSIAN_APPROX_MIN:
        z = scipy.stats.norm.ppf(1.0 - alpha / 2.0)
        half_width = z * np.sqrt(2.0 / dof)
        return (expected_var * (1.0 - half_width), expected_var * (1.0 + half_width))

    lo = expected_var * scipy.stats.chi2.ppf(alpha / 2.0, dof) / dof
    hi = expected_var * scipy.stats.chi2.ppf(1.0 - alpha / 2.0, dof) / dof

    return (float(lo), float(hi))


def variance_p_value(
    var_hat: cvqkd.model.Snu,
    expected_var: cvqkd.model.Snu,
    n_samples: int,
) -> float:

    dof = n_samples - 1

    if n_samples > GAUSSIAN_APPROX_MIN:
        z = (var_hat / expected_var - 1.0) / np.sqrt(2.0 / dof)
        p_value = 2.0 * scipy.stats.norm.sf(abs(z))
    else:
        stat = dof * var_hat / expected_var
        p_value = 2.0 * min(
            scipy.stats.chi2.cdf(stat, dof),
            scipy.stats.chi2.sf(stat, dof),
        )

    return float(np.clip(p_value, 0.0, 1.0))


def variance_test(
    ledger: cvqkd.simulate.PulseLedger,
    alpha: float = 0.01,
) -> DetectionReport:
    """
    Tests whether the variance of Bob's disclosed outcomes is consistent with the
    users' presumed transmittance.

    Parameters
    ----------
    ledger
        The session ledger; only disclosed pulses are used.
    alpha
        Significance level of the two-sided test.

    Returns
    -------
        The test statistic, thresholds, and decision.
    """

    if not 0 < alpha < 1:
        raise ValueError(f"Significance level must be in (0,1) ({alpha})")

    m_B = ledger.disclosed.m_B

    n_disclosed = len(m_B)

    if n_disclosed < cvqkd.model.MIN_DISCLOSED_PULSES:
        msg = (
            f"Too few disclosed pulses ({n_disclosed} < "
            + f"{cvqkd.model.MIN_DISCLOSED_PULSES})"
        )
        raise ValueError(msg)

    var_hat = float(np.var(m_B, ddof=1))

    expected_var = expected_variance(config=ledger.config)

    (threshold_lo, threshold_hi) = variance_thresholds(
        expected_var=expected_var,
        n_samples=n_disclosed,
        alpha=alpha,
    )

    decision = (
        Decision.ACCEPT
        if threshold_lo <= var_hat <= threshold_hi
        else Decision.ABORT_ATTACK_SUSPECTED
    )

    return DetectionReport(
        n_disclosed=n_disclosed,
        var_hat=var_hat,
        expected_var=expected_var,
        threshold_lo=threshold_lo,
        threshold_hi=threshold_hi,
        decision=decision,
        p_value=variance_p_value(
            var_hat=var_hat,
            expected_var=expected_var,
            n_samples=n_disclosed,
        ),
    )


def detectability_margin(
    T: float,
    V: cvqkd.model.Snu,
    rel_dT: float,
    mode: cvqkd.model.DeviationMode = cvqkd.model.DeviationMode.RELATIVE,
) -> cvqkd.model.Snu:
    """
    The heterodyne attack's excess variance at Bob, 2T, minus the variance ambiguity
    from not knowing T exactly; a margin of zero or less means the attack cannot be
    told apart from a transmittance error.

    Under the relative reading the ambiguity is rel_dT * T * V; under the absolute
    reading it is rel_dT * V.
    """

    if not 0 < T <= 1:
        raise ValueError(f"Transmittance must be in (0,1] ({T})")

    if not V > 0:
        raise ValueError(f"V must be positive ({V})")

    if rel_dT < 0:
        raise ValueError(f"Transmittance deviation must be non-negative ({rel_dT})")

    if mode is cvqkd.model.DeviationMode.RELATIVE:
        return T * (cvqkd.simulate.HETERODYNE_NOISE_VAR - rel_dT * V)

    return cvqkd.simulate.HETERODYNE_NOISE_VAR * T - rel_dT * V


def draw_T_true(
    rng: np.random.Generator,
    T_nominal: float,
    rel_dT: float,
    mode: cvqkd.model.DeviationMode = cvqkd.model.DeviationMode.RELATIVE,
) -> float:
    """
    A transmittance drawn uniformly within the users' uncertainty about it, capped
    at 1.
    """

    half_width = (
        rel_dT * T_nominal if mode is cvqkd.model.DeviationMode.RELATIVE else rel_dT
    )

    if T_nominal - half_width <= 0:
        msg = (
            f"Transmittance uncertainty ({rel_dT}) reaches a non-positive "
            + "transmittance"
        )
        raise ValueError(msg)

    T_true = float(rng.uniform(T_nominal - half_width, T_nominal + half_width))

    return min(T_true, 1.0)


def measured_excess(ledger: cvqkd.simulate.PulseLedger) -> cvqkd.model.Snu:
    """
    Variance of Bob's disclosed outcomes beyond the no-attack value at the true
    transmittance; converges to 2 T f under a heterodyne attack on a fraction f.
    """

    config = ledger.config

    var_hat = float(np.var(ledger.disclosed.m_B, ddof=1))

    return var_hat - (config.T_true * config.V + 1.0)


def _default_attack(config: cvqkd.model.SessionConfig) -> cvqkd.model.AttackModel:

    if config.attack.kind is not cvqkd.model.AttackKind.NO_ATTACK:
        return config.attack

    LOGGER.info(
        "No attack configured; using a full heterodyne attack as the alternative"
    )

    return cvqkd.model.AttackModel(
        kind=cvqkd.model.AttackKind.HETERODYNE_INTERCEPT_RESEND,
        fraction=1.0,
    )


def run_trials(
    config: cvqkd.model.SessionConfig,
    attack: cvqkd.model.AttackModel,
    label: cvqkd.streams.StreamLabel,
    rel_dT: float,
    n_trials: int,
    alpha: float = 0.01,
    mode: cvqkd.model.DeviationMode = cvqkd.model.DeviationMode.RELATIVE,
    workers: int = 1,
    show_progress: bool = False,
) -> list[DetectionReport]:
    """
    Runs independent sessions, each with its own seed and its own transmittance drawn
    within the uncertainty, and applies the variance test to each.

    The reports are in trial order whatever the number of workers.
    """

    def run_trial(trial: int) -> DetectionReport:

        trial_seed = cvqkd.streams.derive_seed(
            seed=config.seed,
            label=label,
            index=trial,
        )

        T_true = draw_T_true(
            rng=np.random.default_rng(trial_seed),
            T_nominal=config.T_nominal,
            rel_dT=rel_dT,
            mode=mode,
        )

        trial_config = config.replace(T_true=T_true, seed=trial_seed, attack=attack)

        ledger = cvqkd.simulate.simulate_session(config=trial_config)

        return variance_test(ledger=ledger, alpha=alpha)

    reports: list[DetectionReport] = []

    with (
        alive_progress.alive_bar(
            total=n_trials,
            disable=not show_progress,
            unit=" trials",
            title=label.name.lower(),
        ) as progress_bar,
        concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor,
    ):

        for report in executor.map(run_trial, range(n_trials)):
            reports.append(report)
            progress_bar()

    return reports


def roc_sweep(
    config: cvqkd.model.SessionConfig,
    rel_dT: float,
    n_trials: int,
    thresholds: collections.abc.Sequence[float],
    mode: cvqkd.model.DeviationMode = cvqkd.model.DeviationMode.RELATIVE,
    workers: int = 1,
    show_progress: bool = False,
) -> list[RocPoint]:
    """
    False-alarm and missed-detection rates of the variance test for a range of
    acceptance widths.

    Parameters
    ----------
    config
        Session template; its attack (a full heterodyne attack if none) defines the
        alternative hypothesis.
    rel_dT
        Uncertainty in the transmittance, as read by `mode`.
    n_trials
        Number of sessions under each hypothesis.
    thresholds
        Acceptance half-widths, in units of the sample variance's standard deviation.

    Returns
    -------
        One point per threshold, in the order given.
    """

    if n_trials < MIN_TRIALS:
        raise ValueError(f"At least {MIN_TRIALS} trials are needed ({n_trials})")

    if any(scale <= 0 for scale in thresholds):
        raise ValueError(f"Threshold scales must be positive ({list(thresholds)})")

    run = functools.partial(
        run_trials,
        config=config,
        rel_dT=rel_dT,
        n_trials=n_trials,
        mode=mode,
        workers=workers,
        show_progress=show_progress,
    )

    null_reports = run(
        attack=cvqkd.model.AttackModel(kind=cvqkd.model.AttackKind.NO_ATTACK),
        label=cvqkd.streams.StreamLabel.NULL_TRIAL,
    )

    attack_reports = run(
        attack=_default_attack(config=config),
        label=cvqkd.streams.StreamLabel.ATTACK_TRIAL,
    )

    null_z = np.array([report.z_score for report in null_reports])
    attack_z = np.array([report.z_score for report in attack_reports])

    points = [
        RocPoint(
            threshold_scale=float(scale),
            false_alarm=float(np.mean(null_z > scale)),
            missed_detection=float(np.mean(attack_z <= scale)),
        )
        for scale in thresholds
    ]

    for point in points:
        LOGGER.debug(f"rel_dT={rel_dT}: {point}")

    return points


def false_alarm_rate(
    config: cvqkd.model.SessionConfig,
    rel_dT: float,
    alpha: float,
    n_trials: int,
    mode: cvqkd.model.DeviationMode = cvqkd.model.DeviationMode.RELATIVE,
    workers: int = 1,
    show_progress: bool = False,
) -> FalseAlarmEstimate:
    """
    How often the variance test at level `alpha` aborts a session with no Eve.
    """

    if n_trials < MIN_TRIALS:
        raise ValueError(f"At least {MIN_TRIALS} trials are needed ({n_trials})")

    reports = run_trials(
        config=config,
        attack=cvqkd.model.AttackModel(kind=cvqkd.model.AttackKind.NO_ATTACK),
        label=cvqkd.streams.StreamLabel.NULL_TRIAL,
        rel_dT=rel_dT,
        n_trials=n_trials,
        alpha=alpha,
        mode=mode,
        workers=workers,
        show_progress=show_progress,
    )

    n_aborted = sum(
        report.decision is Decision.ABORT_ATTACK_SUSPECTED for report in reports
    )

    return FalseAlarmEstimate(
        rel_dT=rel_dT,
        alpha=alpha,
        false_alarm=n_aborted / n_trials,
        binomial_sigma=float(np.sqrt(alpha * (1.0 - alpha) / n_trials)),
        n_trials=n_trials,
    )


def tap_sensitivity(
    m_amplitude: cvqkd.model.Snu,
    user_loss_db: float,
    tap_deviation: float,
) -> tuple[TapSensitivity, ...]:
    """
    Compares the signal-variance shift caused by a tap transmittance error with the
    heterodyne attack's excess variance, under both readings of the amplitude.

    Parameters
    ----------
    m_amplitude
        Signal amplitude; read either as an SNU amplitude (m^2 SNU) or as giving a
        photon number m^2 (4 m^2 SNU).
    user_loss_db
        Total loss on the users' side, in dB.
    tap_deviation
        Relative error in the tap transmittance.

    Returns
    -------
        One entry per unit reading; neither is singled out.
    """

    if user_loss_db < 0:
        raise ValueError(f"User loss must be non-negative ({user_loss_db} dB)")

    T = 10.0 ** (-user_loss_db / 10.0)

    attack_excess = cvqkd.simulate.HETERODYNE_NOISE_VAR * T

    m_sq_by_reading = {
        UnitReading.SNU_AMPLITUDE: m_amplitude**2,
        UnitReading.PHOTON_NUMBER: cvqkd.model.photons_to_snu(m_amplitude**2),
    }

    rows = []

    for reading, m_sq in m_sq_by_reading.items():

        signal_shift = tap_deviation * T * m_sq

        rows.append(
            TapSensitivity(
                reading=reading,
                m_amplitude=m_amplitude,
                loss_db=user_loss_db,
                tap_deviation=tap_deviation,
                signal_shift=signal_shift,
                attack_excess=attack_excess,
                ratio=signal_shift / attack_excess,
                critical_deviation=(
                    cvqkd.simulate.HETERODYNE_NOISE_VAR / m_sq if m_sq > 0 else np.inf
                ),
            )
        )

    return tuple(rows)
