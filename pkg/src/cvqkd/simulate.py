"""
Seeded Monte Carlo generation of pulse ledgers.

The channel and attack equations, with all quantities in SNU:

    no attack:      m_B = sqrt(T) m + n_B
    beamsplitter:   m_B = sqrt(T) m + n_B,      m_E = sqrt(1 - T) m + n_E
    heterodyne IR:  m_E = m + n~_E,              m_B = sqrt(T) m_E + n_B
    source:         m_A = m + n_A

with var n_B = var n_E = 1 and var n~_E = 2.
"""

from __future__ import annotations

import collections.abc
import concurrent.futures
import dataclasses
import logging
import typing

import numpy as np
import numpy.typing as npt

import cvqkd.model
import cvqkd.streams


LOGGER = logging.getLogger("cvqkd")

FloatArray: typing.TypeAlias = npt.NDArray[np.float64]
BoolArray: typing.TypeAlias = npt.NDArray[np.bool_]

HETERODYNE_NOISE_VAR = 2.0


@dataclasses.dataclass(frozen=True)
class RngTrace:
    seed: int
    scheme: str = cvqkd.streams.SCHEME


@dataclasses.dataclass(frozen=True)
class LedgerColumns:
    """
    Per-pulse values, one array per field; `m_E` is NaN where Eve has no record and
    `m_sent` is the amplitude that actually left Alice's station.
    """

    m_x: FloatArray
    m_p: FloatArray
    basis: npt.NDArray[np.int8]
    m: FloatArray
    m_A: FloatArray
    m_sent: FloatArray
    m_B: FloatArray
    m_E: FloatArray
    attacked: BoolArray
    disclosed: BoolArray

    @classmethod
    def concatenate(
        cls,
        blocks: collections.abc.Sequence[LedgerColumns],
    ) -> LedgerColumns:

        return cls(
            **{
                field.name: np.concatenate(
                    [getattr(block, field.name) for block in blocks]
                )
                for field in dataclasses.fields(cls)
            }
        )

    def select(self, mask: BoolArray) -> LedgerColumns:

        return LedgerColumns(
            **{
                field.name: getattr(self, field.name)[mask]
                for field in dataclasses.fields(self)
            }
        )


class PulseLedger(collections.abc.Sequence[cvqkd.model.PulseRecord]):

    def __init__(
        self,
        config: cvqkd.model.SessionConfig,
        columns: LedgerColumns,
        rng_trace: RngTrace,
    ) -> None:
        """
        The record of a simulated session.

        Parameters
        ----------
        config
            The configuration that produced the ledger.
        columns
            Per-pulse values, in pulse index order.
        rng_trace
            Seed and stream scheme, sufficient to regenerate the ledger.
        """

        if len(columns.m) != config.n_pulses:
            msg = f"Ledger has {len(columns.m)} pulses; expected {config.n_pulses}"
            raise ValueError(msg)

        self.config = config
        self.columns = columns
        self.rng_trace = rng_trace

    def __len__(self) -> int:
        return len(self.columns.m)

    @typing.overload
    def __getitem__(self, index: int) -> cvqkd.model.PulseRecord: ...

    @typing.overload
    def __getitem__(
        self, index: slice
    ) -> collections.abc.Sequence[cvqkd.model.PulseRecord]: ...

    def __getitem__(
        self,
        index: int | slice,
    ) -> cvqkd.model.PulseRecord | collections.abc.Sequence[cvqkd.model.PulseRecord]:

        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]

        cols = self.columns

        m_E = float(cols.m_E[index])

        return cvqkd.model.PulseRecord(
            m_x=float(cols.m_x[index]),
            m_p=float(cols.m_p[index]),
            basis=cvqkd.model.Basis(int(cols.basis[index])),
            m=float(cols.m[index]),
            m_A=float(cols.m_A[index]),
            m_B=float(cols.m_B[index]),
            m_E=None if np.isnan(m_E) else m_E,
            attacked=bool(cols.attacked[index]),
            disclosed=bool(cols.disclosed[index]),
        )

    @property
    def n_disclosed(self) -> int:
        return int(np.count_nonzero(self.columns.disclosed))

    @property
    def n_undisclosed(self) -> int:
        return len(self) - self.n_disclosed

    @property
    def attacked_fraction(self) -> float:
        return float(np.mean(self.columns.attacked))

    @property
    def disclosed_fraction(self) -> float:
        return float(np.mean(self.columns.disclosed))

    @property
    def disclosed(self) -> LedgerColumns:
        return self.columns.select(self.columns.disclosed)

    @property
    def undisclosed(self) -> LedgerColumns:
        return self.columns.select(~self.columns.disclosed)


def draw_modulation(
    rng: np.random.Generator,
    V: cvqkd.model.Snu,
    size: int | None = None,
) -> tuple[FloatArray, FloatArray]:
    """
    Draws the x and p amplitudes from a circularly symmetric Gaussian of variance V
    per quadrature.
    """

    if V < 0:
        raise ValueError(f"Modulation variance must be non-negative ({V})")

    scale = np.sqrt(V)

    m_x = np.asarray(rng.normal(loc=0.0, scale=scale, size=size), dtype=np.float64)
    m_p = np.asarray(rng.normal(loc=0.0, scale=scale, size=size), dtype=np.float64)

    return m_x, m_p


class SourceOutput(typing.NamedTuple):
    m_A: FloatArray
    m_sent: FloatArray


def apply_source(
    m: npt.ArrayLike,
    source: cvqkd.model.SourceModel,
    rng: np.random.Generator,
) -> SourceOutput:
    """
    Alice's record of the amplitude, and the amplitude that actually gets sent.

    An attenuator fluctuation leaves Alice's record at the intended value but scales
    what is sent by (1 + delta), delta ~ N(0, rel_sigma^2).
    """

    m_arr = np.asarray(m, dtype=np.float64)

    if source.kind is cvqkd.model.SourceKind.TAP_HOMODYNE:
        n_A = rng.normal(loc=0.0, scale=np.sqrt(source.var_n_A), size=m_arr.shape)
        return SourceOutput(m_A=m_arr + n_A, m_sent=m_arr)

    if source.kind is cvqkd.model.SourceKind.ATTENUATOR_FLUCTUATION:
        delta = rng.normal(loc=0.0, scale=source.rel_sigma, size=m_arr.shape)
        return SourceOutput(m_A=m_arr, m_sent=m_arr * (1.0 + delta))

    return SourceOutput(m_A=m_arr, m_sent=m_arr)


def _check_transmittance(T: float) -> None:
    if not 0 < T <= 1:
        raise ValueError(f"Transmittance must be in (0,1] ({T})")


def apply_channel(
    m: npt.ArrayLike,
    T: float,
    rng: np.random.Generator,
) -> FloatArray:
    """
    Bob's homodyne outcome through an unattacked link of transmittance T.
    """

    _check_transmittance(T)

    m_arr = np.asarray(m, dtype=np.float64)

    n_B = rng.standard_normal(size=m_arr.shape)

    return np.sqrt(T) * m_arr + n_B


def apply_beamsplitter_attack(
    m: npt.ArrayLike,
    T: float,
    rng: np.random.Generator,
) -> tuple[FloatArray, FloatArray]:
    """
    Eve splits off a fraction 1 - T of the signal and forwards the rest losslessly.
    """

    _check_transmittance(T)

    m_arr = np.asarray(m, dtype=np.float64)

    n_B = rng.standard_normal(size=m_arr.shape)
    n_E = rng.standard_normal(size=m_arr.shape)

    m_B = np.sqrt(T) * m_arr + n_B
    m_E = np.sqrt(1.0 - T) * m_arr + n_E

    return m_B, m_E


def apply_heterodyne_ir_attack(
    m: npt.ArrayLike,
    T: float,
    rng: np.random.Generator,
) -> tuple[FloatArray, FloatArray]:
    """
    Eve heterodynes the full signal near the transmitter and resends a coherent state
    with the measured amplitude; Bob then sees the resent state through the link.
    """

    _check_transmittance(T)

    m_arr = np.asarray(m, dtype=np.float64)

    n_tilde_E = rng.normal(
        loc=0.0,
        scale=np.sqrt(HETERODYNE_NOISE_VAR),
        size=m_arr.shape,
    )
    n_B = rng.standard_normal(size=m_arr.shape)

    m_E = m_arr + n_tilde_E
    m_B = np.sqrt(T) * m_E + n_B

    return m_B, m_E


def simulate_block(
    config: cvqkd.model.SessionConfig,
    block_index: int,
    n_block: int,
) -> LedgerColumns:
    """
    Generates one block of pulses from its own counter-based stream.

    The order of draws within a block is fixed, so a block depends only on
    (seed, block_index, config).
    """

    rng = cvqkd.streams.block_generator(seed=config.seed, block_index=block_index)

    m_x, m_p = draw_modulation(rng=rng, V=config.V, size=n_block)

    basis = rng.integers(low=0, high=2, size=n_block, dtype=np.int8)

    m = np.where(basis == cvqkd.model.Basis.X, m_x, m_p)

    (m_A, m_sent) = apply_source(m=m, source=config.source, rng=rng)

    attacked = rng.random(size=n_block) < config.attack.fraction
    disclosed = rng.random(size=n_block) < config.disclosure_fraction

    m_B = apply_channel(m=m_sent, T=config.T_true, rng=rng)
    m_E = np.full(n_block, np.nan)

    attack_kind = config.attack.kind

    if attack_kind is not cvqkd.model.AttackKind.NO_ATTACK:

        attack_func = (
            apply_beamsplitter_attack
            if attack_kind is cvqkd.model.AttackKind.BEAMSPLITTER
            else apply_heterodyne_ir_attack
        )

        (m_B_attacked, m_E_attacked) = attack_func(m=m_sent, T=config.T_true, rng=rng)

        m_B = np.where(attacked, m_B_attacked, m_B)
        m_E = np.where(attacked, m_E_attacked, np.nan)

    return LedgerColumns(
        m_x=m_x,
        m_p=m_p,
        basis=basis,
        m=m,
        m_A=m_A,
        m_sent=m_sent,
        m_B=m_B,
        m_E=m_E,
        attacked=attacked,
        disclosed=disclosed,
    )


def simulate_session(
    config: cvqkd.model.SessionConfig,
    workers: int = 1,
) -> PulseLedger:
    """
    Simulates a full session.

    Parameters
    ----------
    config
        The session configuration.
    workers
        Number of threads generating blocks; the ledger does not depend on it.

    Returns
    -------
        The session's ledger, in pulse index order.
    """

    cvqkd.model.validate(config)

    if workers < 1:
        raise ValueError(f"Number of workers must be positive ({workers})")

    spans = cvqkd.streams.block_spans(n_pulses=config.n_pulses)

    LOGGER.debug(
        f"Simulating {config.n_pulses} pulses in {len(spans)} blocks "
        + f"with {workers} worker(s)"
    )

    def run_block(block_index: int) -> LedgerColumns:
        (start, stop) = spans[block_index]
        return simulate_block(
            config=config,
            block_index=block_index,
            n_block=stop - start,
        )

    if workers == 1:
        blocks = [run_block(block_index) for block_index in range(len(spans))]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            blocks = list(executor.map(run_block, range(len(spans))))

    ledger = PulseLedger(
        config=config,
        columns=LedgerColumns.concatenate(blocks),
        rng_trace=RngTrace(seed=config.seed),
    )

    LOGGER.debug(
        f"Ledger: {ledger.attacked_fraction:.4f} attacked, "
        + f"{ledger.disclosed_fraction:.4f} disclosed"
    )

    return ledger
