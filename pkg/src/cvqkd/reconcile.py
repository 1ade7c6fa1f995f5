"""
Sliced error correction in reverse reconciliation, with exact accounting of what is
disclosed and a binned estimate of what Eve learns from it.

Bob's outcome is quantised into 2^n_slices equiprobable cells. The most significant
bit of the cell index (the side of the median) is the key bit; the lower bits are
published. Alice decodes the key bit from her record and the published bits, and a
single round of block parities corrects what it can.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np
import numpy.typing as npt

import scipy.special
import scipy.stats

import cvqkd.infotheory
import cvqkd.model
import cvqkd.simulate
import cvqkd.streams


LOGGER = logging.getLogger("cvqkd")

DEFAULT_N_SLICES = 4
MAX_N_SLICES = 8

MIN_SLICE_SAMPLES = 1_000
MIN_RECONCILE_PULSES = 10_000

PARITY_BLOCK_SIZE = 64

EVE_BINS = 16

DEFAULT_BOOTSTRAP = 200

REPORT_COLUMNS = (
    "n_slices",
    "n_key_bits",
    "disclosed_bits",
    "leak_naive",
    "i_eve_prior",
    "i_eve_posterior",
    "gap",
    "boot_lo",
    "boot_hi",
)

IntArray = npt.NDArray[np.int64]


@dataclasses.dataclass(frozen=True)
class SliceScheme:
    """
    Cut points partitioning Bob's outcome axis into 2^n_slices cells.
    """

    n_slices: int
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:

        if not 1 <= self.n_slices <= MAX_N_SLICES:
            msg = f"Number of slices must be in [1, {MAX_N_SLICES}] ({self.n_slices})"
            raise ValueError(msg)

        if len(self.boundaries) != self.n_cells - 1:
            msg = (
                f"{self.n_slices} slices need {self.n_cells - 1} boundaries "
                + f"({len(self.boundaries)} given)"
            )
            raise ValueError(msg)

        if np.any(np.diff(self.boundaries) <= 0):
            raise ValueError("Slice boundaries must be strictly increasing")

    @property
    def n_cells(self) -> int:
        return int(2**self.n_slices)

    @property
    def n_layers(self) -> int:
        """
        Number of cell values for the published (lower) bits.
        """

        return int(2 ** (self.n_slices - 1))

    def cells(self, values: npt.NDArray[np.float64]) -> IntArray:
        return np.searchsorted(self.boundaries, values, side="right").astype(np.int64)

    def key_bits(self, cells: IntArray) -> IntArray:
        return cells >> (self.n_slices - 1)

    def layers(self, cells: IntArray) -> IntArray:
        return cells & (self.n_layers - 1)

    def cell_edges(
        self,
        cells: IntArray,
    ) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:

        edges = np.concatenate([[-np.inf], self.boundaries, [np.inf]])

        return (edges[cells], edges[cells + 1])


@dataclasses.dataclass(frozen=True)
class EveObservations:
    """
    Per-key-pulse discrete symbols used by the leakage estimators.
    """

    key_bits: IntArray
    eve_bins: IntArray
    layers: IntArray
    parities: IntArray
    n_eve_bins: int
    n_layers: int

    @property
    def posterior_labels(self) -> IntArray:
        """
        Eve's record together with everything published about the pulse: its layer
        and the parity of its block.
        """

        return (self.eve_bins * self.n_layers + self.layers) * 2 + self.parities

    def resample(self, idx: IntArray) -> EveObservations:

        return dataclasses.replace(
            self,
            key_bits=self.key_bits[idx],
            eve_bins=self.eve_bins[idx],
            layers=self.layers[idx],
            parities=self.parities[idx],
        )


@dataclasses.dataclass(frozen=True)
class ReconciliationReport:
    n_slices: int
    n_key_bits: int
    disclosed_bits: int
    n_parities: int
    leak_naive: float
    i_eve_prior: float
    i_eve_posterior: float
    residual_advantage: float
    error_rate_a: float
    error_rate_a_corrected: float
    error_rate_e: float
    bootstrap_seed: int
    observations: EveObservations = dataclasses.field(repr=False, compare=False)


@dataclasses.dataclass(frozen=True)
class LeakageGap:
    gap: float
    boot_lo: float
    boot_hi: float
    n_bootstrap: int


def build_slices(
    samples: npt.ArrayLike,
    n_slices: int = DEFAULT_N_SLICES,
) -> SliceScheme:
    """
    Slices at the empirical quantiles, giving 2^n_slices equally populated cells.
    """

    values = np.asarray(samples, dtype=np.float64)

    if len(values) < MIN_SLICE_SAMPLES:
        msg = f"Too few samples to build slices ({len(values)} < {MIN_SLICE_SAMPLES})"
        raise ValueError(msg)

    if not 1 <= n_slices <= MAX_N_SLICES:
        msg = f"Number of slices must be in [1, {MAX_N_SLICES}] ({n_slices})"
        raise ValueError(msg)

    if np.var(values) == 0:
        raise ValueError("Cannot build slices from samples with zero variance")

    n_cells = 2**n_slices

    probs = np.arange(1, n_cells) / n_cells

    boundaries = np.quantile(values, probs)

    return SliceScheme(
        n_slices=n_slices,
        boundaries=tuple(float(boundary) for boundary in boundaries),
    )


def default_slices(
    config: cvqkd.model.SessionConfig,
    n_slices: int = DEFAULT_N_SLICES,
) -> SliceScheme:
    """
    Equiprobable slices for Bob's outcome under the users' presumed, unattacked
    channel, N(0, T_nominal V + 1).
    """

    n_cells = 2**n_slices

    probs = np.arange(1, n_cells) / n_cells

    scale = np.sqrt(config.T_nominal * config.V + 1.0)

    boundaries = scipy.stats.norm.ppf(probs, scale=scale)

    return SliceScheme(
        n_slices=n_slices,
        boundaries=tuple(float(boundary) for boundary in boundaries),
    )


def quantile_bins(values: npt.NDArray[np.float64], n_bins: int) -> IntArray:
    """
    Labels each value by its equiprobable quantile bin, 0 to n_bins - 1.
    """

    edges = np.quantile(values, np.linspace(0, 1, n_bins + 1)[1:-1])

    return np.searchsorted(edges, values, side="right").astype(np.int64)


def _entropy_from_counts(counts: IntArray, miller_madow: bool) -> float:

    counts = counts[counts > 0]

    n_total = counts.sum()

    probs = counts / n_total

    entropy = float(-np.sum(probs * np.log2(probs)))

    if miller_madow:
        entropy += (len(counts) - 1) / (2.0 * n_total * np.log(2))

    return entropy


def binned_mutual_information(
    first: IntArray,
    second: IntArray,
    miller_madow: bool = True,
) -> float:
    """
    Plug-in mutual information, in bits, between two non-negative integer labellings,
    with optional Miller-Madow bias correction of each entropy.
    """

    if len(first) != len(second):
        raise ValueError("Labellings must have the same length")

    n_second = int(second.max()) + 1

    joint = first * n_second + second

    h_first = _entropy_from_counts(np.bincount(first), miller_madow=miller_madow)
    h_second = _entropy_from_counts(np.bincount(second), miller_madow=miller_madow)
    h_joint = _entropy_from_counts(np.bincount(joint), miller_madow=miller_madow)

    return max(0.0, h_first + h_second - h_joint)


def _log_interval_prob(
    lo: npt.NDArray[np.float64],
    hi: npt.NDArray[np.float64],
) -> npt.NDArray[np.float64]:
    """
    log P(lo < Z < hi) for a standard normal Z, evaluated on whichever tail keeps
    the subtraction accurate.
    """

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):

        lower_side = scipy.special.log_ndtr(hi) + np.log1p(
            -np.exp(scipy.special.log_ndtr(lo) - scipy.special.log_ndtr(hi))
        )

        upper_side = scipy.special.log_ndtr(-lo) + np.log1p(
            -np.exp(scipy.special.log_ndtr(-hi) - scipy.special.log_ndtr(-lo))
        )

    return np.where(lo > 0, upper_side, lower_side)


def decode_key_bits(
    record: npt.NDArray[np.float64],
    layers: IntArray,
    scheme: SliceScheme,
    slope: float,
    residual_var: float,
) -> tuple[IntArray, npt.NDArray[np.float64]]:
    """
    Maximum-likelihood key bits given a record correlated with Bob's outcome and the
    published lower bits.

    Bob's outcome given the record is taken as N(slope * record, residual_var).

    Returns
    -------
        The decoded bits, and the log-likelihood ratio of bit 1 against bit 0.
    """

    mean = slope * record
    sd = np.sqrt(residual_var)

    log_probs = []

    for key_bit in (0, 1):

        cells = layers + key_bit * scheme.n_layers

        (lo, hi) = scheme.cell_edges(cells)

        log_probs.append(_log_interval_prob(lo=(lo - mean) / sd, hi=(hi - mean) / sd))

    with np.errstate(invalid="ignore"):
        llr = log_probs[1] - log_probs[0]

    # both cells unreachable; no preference
    llr = np.nan_to_num(llr, nan=0.0)

    return ((llr > 0).astype(np.int64), llr)


def block_parities(bits: IntArray, block_size: int = PARITY_BLOCK_SIZE) -> IntArray:
    """
    Parity of each block of `block_size` bits; the last block is zero-padded.
    """

    n_bits = len(bits)
    n_blocks = -(-n_bits // block_size)

    padded = np.zeros(n_blocks * block_size, dtype=np.int64)
    padded[:n_bits] = bits

    return padded.reshape(n_blocks, block_size).sum(axis=1) % 2


def parity_labels(bits: IntArray, block_size: int = PARITY_BLOCK_SIZE) -> IntArray:
    """
    For each bit, the published parity of the block it belongs to.
    """

    per_bit = np.repeat(block_parities(bits, block_size=block_size), block_size)

    return per_bit[: len(bits)]


def correct_with_parities(
    reference_bits: IntArray,
    decoded_bits: IntArray,
    llr: npt.NDArray[np.float64],
    block_size: int = PARITY_BLOCK_SIZE,
) -> tuple[IntArray, int]:
    """
    One round of block parities: for each block whose parity disagrees, the decoder
    flips its least reliable bit.

    Returns
    -------
        The corrected bits and the number of parities published.
    """

    n_bits = len(reference_bits)
    n_blocks = -(-n_bits // block_size)
    n_padded = n_blocks * block_size

    reference_parities = block_parities(reference_bits, block_size=block_size)
    decoded_parities = block_parities(decoded_bits, block_size=block_size)

    mismatched = reference_parities != decoded_parities

    reliability = np.full(n_padded, np.inf)
    reliability[:n_bits] = np.abs(llr)

    least_reliable = reliability.reshape(n_blocks, block_size).argmin(axis=1)

    flip_indices = np.flatnonzero(mismatched) * block_size
    flip_indices += least_reliable[mismatched]

    corrected = decoded_bits.copy()
    corrected[flip_indices] ^= 1

    return (corrected, n_blocks)


def reconcile_rr(
    ledger: cvqkd.simulate.PulseLedger,
    scheme: SliceScheme,
    parities: bool = True,
    min_pulses: int = MIN_RECONCILE_PULSES,
) -> ReconciliationReport:
    """
    Runs sliced reverse reconciliation over the undisclosed pulses of a ledger.

    Parameters
    ----------
    ledger
        A completed session.
    scheme
        The slicing of Bob's outcomes.
    parities
        Whether the block-parity correction round is run.
    min_pulses
        Minimum number of undisclosed pulses.

    Returns
    -------
        Exact disclosure counts, error rates, and Eve's estimated information about
        the key bits before and after the published messages.
    """

    key_pulses = ledger.undisclosed

    n_key_bits = len(key_pulses.m_B)

    if n_key_bits < min_pulses:
        msg = f"Insufficient undisclosed pulses ({n_key_bits} < {min_pulses})"
        raise ValueError(msg)

    cells = scheme.cells(key_pulses.m_B)
    key_bits = scheme.key_bits(cells)
    layers = scheme.layers(cells)

    top_fraction = float(np.mean(key_bits))

    if not 0.05 <= top_fraction <= 0.95:
        msg = (
            "Slice scheme does not match the ledger: "
            + f"{top_fraction:.3f} of outcomes lie above the median cut"
        )
        raise ValueError(msg)

    config = ledger.config

    # Alice assumes the session's attack only when it is applied to every pulse
    alice_covariance = cvqkd.infotheory.session_covariance(
        config=config,
        with_attack=config.attack.fraction == 1,
    )

    (slope_a, residual_var_a) = alice_covariance.regression(target="m_B", given="m_A")

    (alice_bits, alice_llr) = decode_key_bits(
        record=key_pulses.m_A,
        layers=layers,
        scheme=scheme,
        slope=slope_a,
        residual_var=residual_var_a,
    )

    error_rate_a = float(np.mean(alice_bits != key_bits))

    n_parities = 0
    corrected_bits = alice_bits

    if parities:
        (corrected_bits, n_parities) = correct_with_parities(
            reference_bits=key_bits,
            decoded_bits=alice_bits,
            llr=alice_llr,
        )

    error_rate_a_corrected = float(np.mean(corrected_bits != key_bits))

    has_record = ~np.isnan(key_pulses.m_E)

    eve_bins = np.full(n_key_bits, EVE_BINS, dtype=np.int64)
    error_rate_e = float("nan")

    if np.any(has_record):

        eve_bins[has_record] = quantile_bins(
            key_pulses.m_E[has_record],
            n_bins=EVE_BINS,
        )

        (slope_e, residual_var_e) = cvqkd.infotheory.session_covariance(
            config=config
        ).regression(target="m_B", given="m_E")

        (eve_bits, _) = decode_key_bits(
            record=key_pulses.m_E[has_record],
            layers=layers[has_record],
            scheme=scheme,
            slope=slope_e,
            residual_var=residual_var_e,
        )

        error_rate_e = float(np.mean(eve_bits != key_bits[has_record]))

    observations = EveObservations(
        key_bits=key_bits,
        eve_bins=eve_bins,
        layers=layers,
        parities=(
            parity_labels(key_bits)
            if parities
            else np.zeros(n_key_bits, dtype=np.int64)
        ),
        n_eve_bins=EVE_BINS + 1,
        n_layers=scheme.n_layers,
    )

    (i_eve_prior, i_eve_posterior) = _eve_information(observations=observations)

    i_users = binned_mutual_information(key_bits, corrected_bits)

    disclosed_bits = (scheme.n_slices - 1) * n_key_bits + n_parities

    LOGGER.info(
        f"Reconciled {n_key_bits} key bits with {scheme.n_slices} slices: "
        + f"A error rate {error_rate_a:.2e} -> {error_rate_a_corrected:.2e}, "
        + f"Eve information {i_eve_prior:.4f} -> {i_eve_posterior:.4f} bits"
    )

    return ReconciliationReport(
        n_slices=scheme.n_slices,
        n_key_bits=n_key_bits,
        disclosed_bits=disclosed_bits,
        n_parities=n_parities,
        leak_naive=float(disclosed_bits),
        i_eve_prior=i_eve_prior,
        i_eve_posterior=i_eve_posterior,
        residual_advantage=i_users - i_eve_posterior,
        error_rate_a=error_rate_a,
        error_rate_a_corrected=error_rate_a_corrected,
        error_rate_e=error_rate_e,
        bootstrap_seed=cvqkd.streams.derive_seed(
            seed=config.seed,
            label=cvqkd.streams.StreamLabel.BOOTSTRAP,
            index=scheme.n_slices,
        ),
        observations=observations,
    )


def _eve_information(observations: EveObservations) -> tuple[float, float]:
    """
    Eve's information per key bit from her record alone, and from her record together
    with the published layers and parities.
    """

    prior = binned_mutual_information(observations.key_bits, observations.eve_bins)

    posterior = binned_mutual_information(
        observations.key_bits,
        observations.posterior_labels,
    )

    if posterior < prior:
        LOGGER.debug(
            f"Bias correction put the posterior ({posterior:.5f}) below the "
            + f"prior ({prior:.5f}); using the prior"
        )
        posterior = prior

    return (min(prior, 1.0), min(posterior, 1.0))


def leakage_gap(
    report: ReconciliationReport,
    n_bootstrap: int = DEFAULT_BOOTSTRAP,
) -> LeakageGap:
    """
    The measured growth in Eve's information from the reconciliation messages, less
    the naive disclosed-bit count, per key bit.

    A positive gap means the naive count understates the leak; a negative gap means it
    overstates it. The interval is a 95% percentile bootstrap over key pulses.
    """

    def gap_of(prior: float, posterior: float) -> float:
        return (posterior - prior) - report.leak_naive / report.n_key_bits

    gap = gap_of(prior=report.i_eve_prior, posterior=report.i_eve_posterior)

    if n_bootstrap == 0:
        return LeakageGap(gap=gap, boot_lo=gap, boot_hi=gap, n_bootstrap=0)

    obs = report.observations

    rng = np.random.default_rng(report.bootstrap_seed)

    boot_gaps = np.empty(n_bootstrap)

    for i_boot in range(n_bootstrap):

        idx = rng.integers(low=0, high=report.n_key_bits, size=report.n_key_bits)

        (prior, posterior) = _eve_information(observations=obs.resample(idx))

        boot_gaps[i_boot] = gap_of(prior=prior, posterior=posterior)

    (boot_lo, boot_hi) = np.percentile(boot_gaps, [2.5, 97.5])

    return LeakageGap(
        gap=gap,
        boot_lo=float(boot_lo),
        boot_hi=float(boot_hi),
        n_bootstrap=n_bootstrap,
    )


def report_row(report: ReconciliationReport, gap: LeakageGap) -> dict[str, object]:

    return {
        "n_slices": report.n_slices,
        "n_key_bits": report.n_key_bits,
        "disclosed_bits": report.disclosed_bits,
        "leak_naive": report.leak_naive,
        "i_eve_prior": report.i_eve_prior,
        "i_eve_posterior": report.i_eve_posterior,
        "gap": gap.gap,
        "boot_lo": gap.boot_lo,
        "boot_hi": gap.boot_hi,
    }
