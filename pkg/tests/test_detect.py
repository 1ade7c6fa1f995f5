import numpy as np

import pytest

import cvqkd.detect
import cvqkd.model
import cvqkd.simulate


HET = cvqkd.model.AttackKind.HETERODYNE_INTERCEPT_RESEND


def test_variance_test_accepts_clean_session(clean_ledger):

    report = cvqkd.detect.variance_test(ledger=clean_ledger, alpha=1e-4)

    assert report.decision is cvqkd.detect.Decision.ACCEPT
    assert report.threshold_lo < report.expected_var < report.threshold_hi
    assert report.expected_var == clean_ledger.config.T_nominal * 100 + 1
    assert report.n_disclosed == clean_ledger.n_disclosed
    assert 0 <= report.p_value <= 1


def test_variance_test_detects_heterodyne(het_ledger):

    report = cvqkd.detect.variance_test(ledger=het_ledger, alpha=0.01)

    assert report.decision is cvqkd.detect.Decision.ABORT_ATTACK_SUSPECTED
    assert report.p_value < 1e-6
    assert not report.threshold_lo <= report.var_hat <= report.threshold_hi


def test_variance_test_errors(clean_ledger):

    with pytest.raises(ValueError):
        cvqkd.detect.variance_test(ledger=clean_ledger, alpha=0.0)


def test_variance_thresholds():

    # the two branches agree either side of the switch-over
    n_samples = cvqkd.detect.GAUSSIAN_APPROX_MIN

    exact = cvqkd.detect.variance_thresholds(
        expected_var=51.0,
        n_samples=n_samples,
        alpha=0.01,
    )
    approx = cvqkd.detect.variance_thresholds(
        expected_var=51.0,
        n_samples=n_samples + 1,
        alpha=0.01,
    )

    assert exact[0] == pytest.approx(approx[0], rel=1e-3)
    assert exact[1] == pytest.approx(approx[1], rel=1e-3)

    (lo, hi) = cvqkd.detect.variance_thresholds(
        expected_var=3.0,
        n_samples=500,
        alpha=0.05,
    )

    assert lo < 3.0 < hi

    assert cvqkd.detect.variance_p_value(3.0, 3.0, 500) > 0.9
    assert cvqkd.detect.variance_p_value(3.0, 3.0, 50_000) == pytest.approx(1.0)


def test_detectability_margin():

    assert cvqkd.detect.detectability_margin(T=0.5, V=100.0, rel_dT=0.02) == 0

    assert cvqkd.detect.detectability_margin(T=0.5, V=400.0, rel_dT=0.005) == (
        pytest.approx(0.0, abs=1e-12)
    )

    for T in (0.1, 0.5, 1.0):
        assert cvqkd.detect.detectability_margin(T=T, V=100.0, rel_dT=0) == 2 * T
        assert cvqkd.detect.detectability_margin(
            T=T,
            V=100.0,
            rel_dT=0.02,
        ) == pytest.approx(0.0, abs=1e-12)

    absolute = cvqkd.detect.detectability_margin(
        T=0.5,
        V=100.0,
        rel_dT=0.01,
        mode=cvqkd.model.DeviationMode.ABSOLUTE,
    )

    assert absolute == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        cvqkd.detect.detectability_margin(T=0.5, V=100.0, rel_dT=-0.1)

    with pytest.raises(ValueError):
        cvqkd.detect.detectability_margin(T=0.0, V=100.0, rel_dT=0.1)


def test_draw_T_true():

    rng = np.random.default_rng(3)

    draws = [
        cvqkd.detect.draw_T_true(rng=rng, T_nominal=0.5, rel_dT=0.02)
        for _ in range(1_000)
    ]

    assert min(draws) >= 0.49
    assert max(draws) <= 0.51

    assert cvqkd.detect.draw_T_true(rng=rng, T_nominal=0.5, rel_dT=0) == 0.5

    capped = [
        cvqkd.detect.draw_T_true(rng=rng, T_nominal=1.0, rel_dT=0.1)
        for _ in range(100)
    ]

    assert max(capped) == 1.0

    with pytest.raises(ValueError):
        cvqkd.detect.draw_T_true(
            rng=rng,
            T_nominal=0.1,
            rel_dT=0.5,
            mode=cvqkd.model.DeviationMode.ABSOLUTE,
        )


@pytest.mark.parametrize("fraction", [0.1, 0.3, 0.5])
def test_partial_attack_excess(config_factory, fraction):

    config = config_factory(
        V=100.0,
        T=0.5,
        n_pulses=1_000_000,
        seed=31,
        attack=HET,
        fraction=fraction,
    )

    ledger = cvqkd.simulate.simulate_session(config=config, workers=2)

    excess = cvqkd.detect.measured_excess(ledger=ledger)

    sd = (config.T_true * config.V + 1) * np.sqrt(2.0 / ledger.n_disclosed)

    assert abs(excess - 2 * config.T_true * fraction) < 4 * sd


def test_roc_without_uncertainty(config_factory):

    config = config_factory(V=4.0, T=0.5, n_pulses=20_000, seed=5, attack=HET)

    points = cvqkd.detect.roc_sweep(
        config=config,
        rel_dT=0.0,
        n_trials=200,
        thresholds=[1.0, 2.0, 4.0, 6.0],
    )

    assert [point.threshold_scale for point in points] == [1.0, 2.0, 4.0, 6.0]

    assert any(
        point.false_alarm < 0.01 and point.missed_detection < 0.01 for point in points
    )

    false_alarms = [point.false_alarm for point in points]
    missed = [point.missed_detection for point in points]

    assert false_alarms == sorted(false_alarms, reverse=True)
    assert missed == sorted(missed)


def test_roc_supersensitivity(config_factory):

    # 153k disclosed pulses put the heterodyne excess about 5.4 deviations out
    config = config_factory(
        V=100.0,
        T=0.5,
        n_pulses=170_000,
        seed=5,
        attack=HET,
        disclosure_fraction=0.9,
    )

    thresholds = [0.5 * step for step in range(1, 13)] + [7.0, 8.0]

    def separates(point):
        return point.false_alarm < 0.05 and point.missed_detection < 0.05

    (exact, uncertain) = [
        cvqkd.detect.roc_sweep(
            config=config,
            rel_dT=rel_dT,
            n_trials=100,
            thresholds=thresholds,
            workers=4,
        )
        for rel_dT in (0.0, 0.02)
    ]

    assert any(separates(point) for point in exact)
    assert not any(separates(point) for point in uncertain)

    # the curve without uncertainty dominates
    for exact_point, uncertain_point in zip(exact, uncertain):
        assert exact_point.false_alarm <= uncertain_point.false_alarm

    def min_total_error(points):
        return min(point.false_alarm + point.missed_detection for point in points)

    assert min_total_error(exact) < 0.05
    assert min_total_error(uncertain) > 0.2


def test_roc_worker_independent(config_factory):

    config = config_factory(V=4.0, T=0.5, n_pulses=2_000, seed=8, attack=HET)

    serial = cvqkd.detect.roc_sweep(
        config=config,
        rel_dT=0.05,
        n_trials=100,
        thresholds=[1.0, 3.0],
    )

    threaded = cvqkd.detect.roc_sweep(
        config=config,
        rel_dT=0.05,
        n_trials=100,
        thresholds=[1.0, 3.0],
        workers=4,
    )

    assert serial == threaded

    with pytest.raises(ValueError):
        cvqkd.detect.roc_sweep(config=config, rel_dT=0, n_trials=10, thresholds=[1.0])

    with pytest.raises(ValueError):
        cvqkd.detect.roc_sweep(config=config, rel_dT=0, n_trials=100, thresholds=[0])


def test_missed_detection_grows_as_fraction_falls(config_factory):

    missed = []

    for fraction in (0.5, 0.1, 0.02):

        config = config_factory(
            V=4.0,
            T=0.5,
            n_pulses=20_000,
            seed=13,
            attack=HET,
            fraction=fraction,
        )

        (point,) = cvqkd.detect.roc_sweep(
            config=config,
            rel_dT=0.0,
            n_trials=100,
            thresholds=[3.0],
        )

        missed.append(point.missed_detection)

    assert missed == sorted(missed)
    assert missed[0] < missed[-1]


def test_false_alarm_rate(config_factory):

    config = config_factory(V=100.0, T=0.5, n_pulses=2_000, seed=17)

    estimate = cvqkd.detect.false_alarm_rate(
        config=config,
        rel_dT=0.0,
        alpha=0.01,
        n_trials=1_000,
        workers=4,
    )

    assert estimate.n_trials == 1_000
    assert estimate.binomial_sigma == pytest.approx(np.sqrt(0.01 * 0.99 / 1_000))
    assert abs(estimate.false_alarm - 0.01) <= 3 * estimate.binomial_sigma

    with pytest.raises(ValueError):
        cvqkd.detect.false_alarm_rate(config=config, rel_dT=0, alpha=0.01, n_trials=5)


def test_tap_sensitivity():

    (snu, photon) = cvqkd.detect.tap_sensitivity(
        m_amplitude=10.0,
        user_loss_db=10.0,
        tap_deviation=0.001,
    )

    assert snu.reading is cvqkd.detect.UnitReading.SNU_AMPLITUDE
    assert snu.signal_shift == pytest.approx(0.01)
    assert snu.attack_excess == pytest.approx(0.2)
    assert snu.ratio == pytest.approx(0.05)
    assert snu.critical_deviation == pytest.approx(0.02)

    assert photon.reading is cvqkd.detect.UnitReading.PHOTON_NUMBER
    assert photon.signal_shift == pytest.approx(0.04)
    assert photon.attack_excess == pytest.approx(0.2)
    assert photon.critical_deviation == pytest.approx(0.005)

    for row in cvqkd.detect.tap_sensitivity(
        m_amplitude=10.0,
        user_loss_db=10.0,
        tap_deviation=0.0,
    ):
        assert row.signal_shift == 0

    with pytest.raises(ValueError):
        cvqkd.detect.tap_sensitivity(m_amplitude=10.0, user_loss_db=-1, tap_deviation=0)
