"""
Gaussian mutual informations, direct/reverse reconciliation advantages, and empirical
estimators for cross-checking the Monte Carlo ledgers.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import typing

import numpy as np
import numpy.typing as npt

import scipy.optimize

import cvqkd.model
import cvqkd.simulate


LOGGER = logging.getLogger("cvqkd")

# smallest reverse-reconciliation advantage, in bits, counted as an advantage
BREAKEVEN_EPSILON = 1e-6

# lower end of the transmittance search interval
BREAKEVEN_T_MIN = 1e-12

MIN_EMPIRICAL_SAMPLES = 100_000

VARIABLES = ("m", "m_A", "m_B", "m_E")

SWEEP_COLUMNS = (
    "T",
    "V",
    "var_nA",
    "attack",
    "i_ab_dr",
    "i_eb_dr",
    "i_ab_rr",
    "i_eb_rr",
    "delta_dr",
    "delta_rr",
    "mode",
)

Variable: typing.TypeAlias = typing.Literal["m", "m_A", "m_B", "m_E"]


class ReportMode(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    EMPIRICAL = "Empirical"


@dataclasses.dataclass(frozen=True)
class InfoReport:
    """
    Mutual informations, in bits per pulse, between the users' and Eve's records.

    Direct reconciliation (DR) compares what Bob learns about Alice's variable m_A with
    what Eve learns about the value m that was sent; reverse reconciliation (RR) asks
    about Bob's measurement m_B.
    """

    i_ab_dr: float
    i_eb_dr: float
    i_ab_rr: float
    i_eb_rr: float
    mode: ReportMode

    def __post_init__(self) -> None:

        for field in ("i_ab_dr", "i_eb_dr", "i_ab_rr", "i_eb_rr"):
            if getattr(self, field) < 0:
                # rounding in the correlation can push a zero slightly negative
                object.__setattr__(self, field, max(0.0, getattr(self, field)))

    @property
    def delta_dr(self) -> float:
        return self.i_ab_dr - self.i_eb_dr

    @property
    def delta_rr(self) -> float:
        return self.i_ab_rr - self.i_eb_rr


@dataclasses.dataclass(frozen=True)
class JointCovariance:
    """
    Covariance of (m, m_A, m_B, m_E) for one quadrature.

    Eve's row and column are all zero when there is no attack.
    """

    matrix: npt.NDArray[np.float64]

    def index(self, variable: Variable) -> int:
        return VARIABLES.index(variable)

    def var(self, variable: Variable) -> float:
        i_var = self.index(variable)
        return float(self.matrix[i_var, i_var])

    def cov(self, first: Variable, second: Variable) -> float:
        return float(self.matrix[self.index(first), self.index(second)])

    def regression(self, target: Variable, given: Variable) -> tuple[float, float]:
        """
        Slope and residual variance of the linear regression of `target` on `given`,
        which are the conditional mean slope and conditional variance for Gaussians.
        """

        var_given = self.var(given)

        if var_given == 0:
            return (0.0, self.var(target))

        cov = self.cov(target, given)

        slope = cov / var_given
        residual_var = self.var(target) - cov * slope

        return (slope, residual_var)

    def mutual_information(self, first: Variable, second: Variable) -> float:

        var_first = self.var(first)
        var_second = self.var(second)

        if var_first == 0 or var_second == 0:
            return 0.0

        rho_sq = self.cov(first, second) ** 2 / (var_first * var_second)

        return correlation_mi(rho_sq=rho_sq)


def gaussian_mi(signal_var: cvqkd.model.Snu, noise_var: cvqkd.model.Snu) -> float:
    """
    Capacity-style mutual information of an additive Gaussian channel, in bits.
    """

    if not noise_var > 0:
        raise ValueError(f"Noise variance must be positive ({noise_var})")

    if signal_var < 0:
        raise ValueError(f"Signal variance must be non-negative ({signal_var})")

    return float(0.5 * np.log2(1.0 + signal_var / noise_var))


def correlation_mi(rho_sq: float) -> float:
    """
    Mutual information, in bits, of a bivariate Gaussian with squared correlation
    `rho_sq`.
    """

    return float(-0.5 * np.log2(1.0 - min(rho_sq, 1.0 - 1e-16)))


def joint_covariance(
    V: cvqkd.model.Snu,
    T: float,
    var_n_A: cvqkd.model.Snu = 0.0,
    attack: cvqkd.model.AttackKind = cvqkd.model.AttackKind.NO_ATTACK,
    rel_sigma: float = 0.0,
) -> JointCovariance:
    """
    The exact covariance implied by the channel and attack equations.

    The covariance is built from the loadings of each observed variable on the
    independent sources (m, n_A, u, n_B, n_E, n~_E), where u = delta * m is the
    attenuator fluctuation of the sent amplitude (uncorrelated with m, variance
    rel_sigma^2 V).
    """

    if not V > 0:
        raise ValueError(f"V must be positive ({V})")

    if not 0 < T <= 1:
        raise ValueError(f"Transmittance must be in (0,1] ({T})")

    if var_n_A < 0:
        raise ValueError(f"var_n_A must be non-negative ({var_n_A})")

    source_vars = np.array(
        [
            V,
            var_n_A,
            rel_sigma**2 * V,
            1.0,
            1.0,
            cvqkd.simulate.HETERODYNE_NOISE_VAR,
        ]
    )

    sqrt_T = np.sqrt(T)
    sqrt_R = np.sqrt(1.0 - T)

    # columns: m, n_A, u, n_B, n_E, n~_E
    loadings = {
        "m": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        "m_A": [1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        "m_B": [sqrt_T, 0.0, sqrt_T, 1.0, 0.0, 0.0],
        "m_E": [0.0] * 6,
    }

    if attack is cvqkd.model.AttackKind.BEAMSPLITTER:
        loadings["m_E"] = [sqrt_R, 0.0, sqrt_R, 0.0, 1.0, 0.0]

    elif attack is cvqkd.model.AttackKind.HETERODYNE_INTERCEPT_RESEND:
        loadings["m_E"] = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0]
        loadings["m_B"] = [sqrt_T, 0.0, sqrt_T, 1.0, 0.0, sqrt_T]

    load_matrix = np.array([loadings[variable] for variable in VARIABLES])

    matrix = load_matrix @ np.diag(source_vars) @ load_matrix.T

    return JointCovariance(matrix=matrix)


def session_covariance(
    config: cvqkd.model.SessionConfig,
    with_attack: bool = True,
) -> JointCovariance:
    """
    The joint covariance for a session configuration, at the true transmittance.
    """

    attack_kind = (
        config.attack.kind
        if with_attack and config.attack.fraction > 0
        else cvqkd.model.AttackKind.NO_ATTACK
    )

    return joint_covariance(
        V=config.V,
        T=config.T_true,
        var_n_A=config.source.var_n_A,
        attack=attack_kind,
        rel_sigma=config.source.rel_sigma,
    )


def report_from_covariance(
    covariance: JointCovariance,
    mode: ReportMode = ReportMode.CLOSED_FORM,
) -> InfoReport:

    i_ab = covariance.mutual_information("m_A", "m_B")

    return InfoReport(
        i_ab_dr=i_ab,
        i_eb_dr=covariance.mutual_information("m_E", "m"),
        i_ab_rr=i_ab,
        i_eb_rr=covariance.mutual_information("m_E", "m_B"),
        mode=mode,
    )


def closed_form_report(
    V: cvqkd.model.Snu,
    T: float,
    var_n_A: cvqkd.model.Snu = 0.0,
    attack: cvqkd.model.AttackModel | cvqkd.model.AttackKind = (
        cvqkd.model.AttackKind.BEAMSPLITTER
    ),
    rel_sigma: float = 0.0,
) -> InfoReport:
    """
    Exact DR and RR informations for a full attack.

    Parameters
    ----------
    V
        Modulation variance, SNU.
    T
        Total transmittance.
    var_n_A
        Variance of Alice's self-knowledge noise, SNU.
    attack
        The attack; a partial attack has no single Gaussian law and is rejected.
    rel_sigma
        Relative standard deviation of the attenuation.
    """

    if isinstance(attack, cvqkd.model.AttackModel):

        if attack.is_mixture:
            msg = (
                "The closed form requires a full attack (fraction 1); "
                + f"got fraction {attack.fraction}"
            )
            raise ValueError(msg)

        attack_kind = (
            attack.kind if attack.fraction == 1 else cvqkd.model.AttackKind.NO_ATTACK
        )

    else:
        attack_kind = attack

    covariance = joint_covariance(
        V=V,
        T=T,
        var_n_A=var_n_A,
        attack=attack_kind,
        rel_sigma=rel_sigma,
    )

    return report_from_covariance(covariance=covariance)


def gaussian_mi_estimate(
    first: npt.NDArray[np.float64],
    second: npt.NDArray[np.float64],
) -> float:
    """
    Mutual information, in bits, from the sample correlation, assuming the two
    variables are jointly Gaussian.
    """

    rho = np.corrcoef(first, second)[0, 1]

    return correlation_mi(rho_sq=float(rho**2))


def empirical_report(
    ledger: cvqkd.simulate.PulseLedger,
    min_samples: int = MIN_EMPIRICAL_SAMPLES,
) -> InfoReport:
    """
    Estimates the informations from the undisclosed pulses of a ledger.

    Raises
    ------
    ValueError
        If there are fewer than `min_samples` undisclosed pulses, or if the ledger
        mixes attacked and unattacked pulses (which are not jointly Gaussian).
    """

    if ledger.config.attack.is_mixture:
        msg = (
            "The Gaussian estimator cannot be applied to a partial attack "
            + f"(fraction {ledger.config.attack.fraction})"
        )
        raise ValueError(msg)

    key_pulses = ledger.undisclosed

    n_samples = len(key_pulses.m_B)

    if n_samples < min_samples:
        msg = f"Insufficient undisclosed pulses ({n_samples} < {min_samples})"
        raise ValueError(msg)

    i_ab = gaussian_mi_estimate(key_pulses.m_A, key_pulses.m_B)

    has_eve = bool(np.all(key_pulses.attacked))

    if has_eve:
        i_eb_dr = gaussian_mi_estimate(key_pulses.m_E, key_pulses.m)
        i_eb_rr = gaussian_mi_estimate(key_pulses.m_E, key_pulses.m_B)
    else:
        i_eb_dr = i_eb_rr = 0.0

    return InfoReport(
        i_ab_dr=i_ab,
        i_eb_dr=i_eb_dr,
        i_ab_rr=i_ab,
        i_eb_rr=i_eb_rr,
        mode=ReportMode.EMPIRICAL,
    )


def rr_breakeven_T(
    V: cvqkd.model.Snu,
    var_n_A: cvqkd.model.Snu = 0.0,
    attack: cvqkd.model.AttackKind = cvqkd.model.AttackKind.BEAMSPLITTER,
    epsilon: float = BREAKEVEN_EPSILON,
) -> float | None:
    """
    The smallest transmittance at which reverse reconciliation gives the users an
    advantage of at least `epsilon` bits per pulse.

    Returns
    -------
        The crossing transmittance, or None if there is no advantage at any
        transmittance in (0, 1].
    """

    def excess_advantage(T: float) -> float:
        report = closed_form_report(V=V, T=T, var_n_A=var_n_A, attack=attack)
        return report.delta_rr - epsilon

    if excess_advantage(1.0) < 0:
        LOGGER.debug(f"No RR advantage of {epsilon} bits for {attack.value} at V={V}")
        return None

    if excess_advantage(BREAKEVEN_T_MIN) >= 0:
        return BREAKEVEN_T_MIN

    breakeven = scipy.optimize.brentq(
        excess_advantage,
        BREAKEVEN_T_MIN,
        1.0,
        xtol=1e-15,
    )

    return float(breakeven)


def sweep_row(
    report: InfoReport,
    T: float,
    V: cvqkd.model.Snu,
    var_n_A: cvqkd.model.Snu,
    attack: cvqkd.model.AttackKind,
) -> dict[str, object]:

    return {
        "T": T,
        "V": V,
        "var_nA": var_n_A,
        "attack": attack.value,
        "i_ab_dr": report.i_ab_dr,
        "i_eb_dr": report.i_eb_dr,
        "i_ab_rr": report.i_ab_rr,
        "i_eb_rr": report.i_eb_rr,
        "delta_dr": report.delta_dr,
        "delta_rr": report.delta_rr,
        "mode": report.mode.value,
    }
