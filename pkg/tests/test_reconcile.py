import numpy as np

import pytest

import cvqkd.reconcile
import cvqkd.simulate


def test_build_slices():

    rng = np.random.default_rng(0)

    samples = rng.standard_normal(100_000)

    scheme = cvqkd.reconcile.build_slices(samples=samples, n_slices=2)

    assert scheme.n_cells == 4
    assert scheme.boundaries == pytest.approx([-0.6745, 0.0, 0.6745], abs=0.02)

    median_cut = cvqkd.reconcile.build_slices(samples=samples, n_slices=1)

    cells = median_cut.cells(samples)

    assert np.mean(cells) == pytest.approx(0.5, abs=1e-4)

    with pytest.raises(ValueError, match="zero variance"):
        cvqkd.reconcile.build_slices(samples=np.ones(5_000))

    with pytest.raises(ValueError, match="Too few"):
        cvqkd.reconcile.build_slices(samples=samples[:999])

    with pytest.raises(ValueError):
        cvqkd.reconcile.build_slices(samples=samples, n_slices=9)


def test_slice_scheme():

    scheme = cvqkd.reconcile.SliceScheme(
        n_slices=4,
        boundaries=tuple(float(value) for value in range(15)),
    )

    cells = np.array([0, 7, 8, 13, 15])

    assert list(scheme.key_bits(cells)) == [0, 0, 1, 1, 1]
    assert list(scheme.layers(cells)) == [0, 7, 0, 5, 7]

    (lo, hi) = scheme.cell_edges(np.array([0, 15]))

    assert lo[0] == -np.inf and hi[0] == 0
    assert lo[1] == 14 and hi[1] == np.inf

    with pytest.raises(ValueError, match="boundaries"):
        cvqkd.reconcile.SliceScheme(n_slices=2, boundaries=(0.0,))

    with pytest.raises(ValueError, match="increasing"):
        cvqkd.reconcile.SliceScheme(n_slices=2, boundaries=(1.0, 0.0, 2.0))


def test_default_slices(clean_ledger):

    scheme = cvqkd.reconcile.default_slices(config=clean_ledger.config, n_slices=3)

    cells = scheme.cells(clean_ledger.columns.m_B)

    counts = np.bincount(cells, minlength=scheme.n_cells) / len(cells)

    assert counts == pytest.approx(np.full(scheme.n_cells, 1 / 8), abs=0.01)


def test_binned_mutual_information():

    rng = np.random.default_rng(1)

    first = cvqkd.reconcile.quantile_bins(rng.standard_normal(100_000), n_bins=16)
    second = cvqkd.reconcile.quantile_bins(rng.standard_normal(100_000), n_bins=16)

    assert np.bincount(first).tolist() == pytest.approx([100_000 / 16] * 16, abs=2)

    # independent variables
    assert cvqkd.reconcile.binned_mutual_information(first, second) < 0.01

    bits = rng.integers(0, 2, size=100_000)

    assert cvqkd.reconcile.binned_mutual_information(bits, bits) == pytest.approx(
        1.0,
        abs=0.01,
    )

    with pytest.raises(ValueError):
        cvqkd.reconcile.binned_mutual_information(bits, bits[:10])


def test_correct_with_parities():

    reference = np.zeros(128, dtype=np.int64)

    decoded = reference.copy()
    decoded[5] = 1

    llr = np.full(128, 10.0)
    llr[5] = 0.1

    (corrected, n_parities) = cvqkd.reconcile.correct_with_parities(
        reference_bits=reference,
        decoded_bits=decoded,
        llr=llr,
    )

    assert n_parities == 2
    assert np.array_equal(corrected, reference)

    # a partial final block is padded
    (_, n_parities) = cvqkd.reconcile.correct_with_parities(
        reference_bits=reference[:100],
        decoded_bits=decoded[:100],
        llr=llr[:100],
    )

    assert n_parities == 2


def test_block_parities():

    bits = np.array([1, 0, 1, 1, 0, 1, 0], dtype=np.int64)

    blocks = cvqkd.reconcile.block_parities(bits, block_size=3)

    # the final block holds a single bit
    assert list(blocks) == [0, 0, 0]

    bits[6] = 1

    assert list(cvqkd.reconcile.block_parities(bits, block_size=3)) == [0, 0, 1]

    labels = cvqkd.reconcile.parity_labels(bits, block_size=3)

    assert list(labels) == [0, 0, 0, 0, 0, 0, 1]


def test_decode_key_bits():

    scheme = cvqkd.reconcile.SliceScheme(n_slices=1, boundaries=(0.0,))

    record = np.array([-5.0, -0.1, 0.1, 5.0])

    (bits, llr) = cvqkd.reconcile.decode_key_bits(
        record=record,
        layers=np.zeros(4, dtype=np.int64),
        scheme=scheme,
        slope=1.0,
        residual_var=1.0,
    )

    assert list(bits) == [0, 0, 1, 1]
    assert llr[0] < llr[1] < 0 < llr[2] < llr[3]


def test_reconcile_lossless(clean_ledger):

    scheme = cvqkd.reconcile.default_slices(config=clean_ledger.config, n_slices=4)

    report = cvqkd.reconcile.reconcile_rr(ledger=clean_ledger, scheme=scheme)

    assert report.n_key_bits == clean_ledger.n_undisclosed
    assert report.n_parities == -(-report.n_key_bits // 64)
    assert report.disclosed_bits == 3 * report.n_key_bits + report.n_parities
    assert report.leak_naive == report.disclosed_bits

    assert report.error_rate_a < 1e-3
    assert 1 - report.error_rate_a_corrected >= 0.99

    # no Eve
    assert np.isnan(report.error_rate_e)
    assert report.i_eve_prior == pytest.approx(0.0, abs=0.01)


def test_reconcile_eve_information(bs_ledger):

    scheme = cvqkd.reconcile.default_slices(config=bs_ledger.config, n_slices=4)

    report = cvqkd.reconcile.reconcile_rr(
        ledger=bs_ledger,
        scheme=scheme,
        parities=False,
    )

    assert report.n_parities == 0
    assert report.disclosed_bits == 3 * report.n_key_bits

    assert report.i_eve_posterior > report.i_eve_prior

    for value in (report.i_eve_prior, report.i_eve_posterior):
        assert 0 <= value <= 1


def test_parity_leakage_is_measured(bs_ledger):

    scheme = cvqkd.reconcile.default_slices(config=bs_ledger.config, n_slices=1)

    with_parities = cvqkd.reconcile.reconcile_rr(ledger=bs_ledger, scheme=scheme)

    without_parities = cvqkd.reconcile.reconcile_rr(
        ledger=bs_ledger,
        scheme=scheme,
        parities=False,
    )

    assert with_parities.n_parities > 0
    assert with_parities.i_eve_prior == without_parities.i_eve_prior
    assert with_parities.i_eve_posterior < 0.99

    parity_gain = with_parities.i_eve_posterior - without_parities.i_eve_posterior

    # one parity per block says little about any single key bit
    assert parity_gain >= -1e-3
    assert parity_gain < 0.5 * with_parities.n_parities / with_parities.n_key_bits

    # the disclosed-bit count overstates what the parities reveal
    gap = cvqkd.reconcile.leakage_gap(report=with_parities, n_bootstrap=0)

    assert gap.gap < 0


def test_posterior_grows_with_slices(bs_ledger):

    posteriors = []

    for n_slices in range(1, 6):

        report = cvqkd.reconcile.reconcile_rr(
            ledger=bs_ledger,
            scheme=cvqkd.reconcile.default_slices(
                config=bs_ledger.config,
                n_slices=n_slices,
            ),
        )

        assert report.i_eve_posterior >= report.i_eve_prior

        posteriors.append(report.i_eve_posterior)

    for earlier, later in zip(posteriors, posteriors[1:]):
        assert later >= earlier - 1e-3


def test_eve_decodes_better_under_heterodyne(het_ledger):

    scheme = cvqkd.reconcile.default_slices(config=het_ledger.config, n_slices=1)

    report = cvqkd.reconcile.reconcile_rr(
        ledger=het_ledger,
        scheme=scheme,
        parities=False,
    )

    assert report.error_rate_e <= report.error_rate_a


def test_leakage_gap(bs_ledger):

    scheme = cvqkd.reconcile.default_slices(config=bs_ledger.config, n_slices=1)

    report = cvqkd.reconcile.reconcile_rr(
        ledger=bs_ledger,
        scheme=scheme,
        parities=False,
    )

    assert report.disclosed_bits == 0

    gap = cvqkd.reconcile.leakage_gap(report=report, n_bootstrap=20)

    # nothing published
    assert gap.gap == 0
    assert gap.boot_lo == gap.boot_hi == 0

    scheme = cvqkd.reconcile.default_slices(config=bs_ledger.config, n_slices=4)

    report = cvqkd.reconcile.reconcile_rr(ledger=bs_ledger, scheme=scheme)
    again = cvqkd.reconcile.reconcile_rr(ledger=bs_ledger, scheme=scheme)

    assert report == again

    gap = cvqkd.reconcile.leakage_gap(report=report, n_bootstrap=50)

    assert gap == cvqkd.reconcile.leakage_gap(report=again, n_bootstrap=50)
    assert gap.boot_lo <= gap.boot_hi
    assert gap.n_bootstrap == 50

    no_bootstrap = cvqkd.reconcile.leakage_gap(report=report, n_bootstrap=0)

    assert no_bootstrap.gap == gap.gap
    assert no_bootstrap.boot_lo == no_bootstrap.boot_hi == gap.gap

    row = cvqkd.reconcile.report_row(report=report, gap=gap)

    assert tuple(row) == cvqkd.reconcile.REPORT_COLUMNS


def test_reconcile_errors(config_factory, clean_ledger):

    small = cvqkd.simulate.simulate_session(config=config_factory(n_pulses=10_000))

    with pytest.raises(ValueError, match="Insufficient"):
        cvqkd.reconcile.reconcile_rr(
            ledger=small,
            scheme=cvqkd.reconcile.default_slices(config=small.config),
        )

    mismatched = cvqkd.reconcile.SliceScheme(n_slices=1, boundaries=(1_000.0,))

    with pytest.raises(ValueError, match="does not match"):
        cvqkd.reconcile.reconcile_rr(ledger=clean_ledger, scheme=mismatched)
