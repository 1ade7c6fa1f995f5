"""
Runs a scenario and writes its CSV artifact.
"""

from __future__ import annotations

import collections.abc
import dataclasses
import logging

import cvqkd.detect
import cvqkd.infotheory
import cvqkd.log
import cvqkd.model
import cvqkd.output
import cvqkd.params
import cvqkd.reconcile
import cvqkd.simulate
import cvqkd.streams
import cvqkd.sweep


LOGGER = logging.getLogger("cvqkd")

Rows = list[dict[str, object]]


def run(scenario: cvqkd.params.Scenario) -> None:

    runner = RUNNERS[scenario.name]

    if (
        scenario.ledger_out is not None
        and scenario.name is not cvqkd.params.ScenarioName.RECONCILE_LEAK
    ):
        LOGGER.warning(f"Ledger output is ignored by `{scenario.name.value}`")

    with cvqkd.log.log_elapsed(description=f"Scenario {scenario.name.value}"):

        (columns, rows) = runner(scenario)

        cvqkd.output.write_csv(
            path=scenario.output_path,
            comment=scenario.canonical(),
            columns=columns,
            rows=rows,
        )


def at_sweep_value(
    scenario: cvqkd.params.Scenario,
    value: float,
) -> cvqkd.params.Scenario:
    """
    The scenario with its swept parameter set to `value`.

    Sweeping `T` sets both the nominal and true transmittance. Sweeping `var_n_A`
    uses an ideal source at 0 and a tap-homodyne source otherwise.
    """

    if scenario.sweep is None:
        return scenario

    config = scenario.config

    parameter = scenario.sweep.parameter

    if parameter == "rel_dT":
        return dataclasses.replace(scenario, rel_dT=value)

    if parameter == "n_slices":
        return dataclasses.replace(scenario, n_slices=int(value))

    if parameter == "T":
        config = config.replace(T_nominal=value, T_true=value)

    elif parameter == "V":
        config = config.replace(V=value)

    elif parameter == "var_n_A":
        source = (
            cvqkd.model.SourceModel()
            if value == 0
            else cvqkd.model.SourceModel.tap(
                tap_transmittance=config.source.tap_transmittance,
                var_n_A=value,
            )
        )
        config = config.replace(source=source)

    elif parameter == "fraction":
        config = config.replace(
            attack=dataclasses.replace(config.attack, fraction=value)
        )

    else:
        raise ValueError(f"Unexpected sweep parameter: {parameter}")

    return dataclasses.replace(scenario, config=config)


def iter_scenarios(
    scenario: cvqkd.params.Scenario,
) -> collections.abc.Iterator[tuple[int, cvqkd.params.Scenario]]:
    """
    Iterates over the scenario at each sweep point, or just the scenario if it has
    no sweep.
    """

    if scenario.sweep is None:
        yield (0, scenario)
        return

    for i_point, value in cvqkd.sweep.iter_points(
        values=scenario.sweep.values(),
        show_progress=scenario.show_progress,
        title=scenario.sweep.parameter,
    ):
        yield (i_point, at_sweep_value(scenario=scenario, value=value))


def sweep_value(scenario: cvqkd.params.Scenario) -> object:
    """
    The current value of the swept parameter, for an extra leading output column.
    """

    if scenario.sweep is None:
        raise ValueError("Scenario has no sweep")

    config = scenario.config

    values: dict[str, object] = {
        "T": config.T_true,
        "V": config.V,
        "var_n_A": config.var_n_A,
        "fraction": config.attack.fraction,
        "rel_dT": scenario.rel_dT,
        "n_slices": scenario.n_slices,
    }

    return values[scenario.sweep.parameter]


def with_sweep_column(
    scenario: cvqkd.params.Scenario,
    columns: tuple[str, ...],
) -> tuple[str, ...]:

    if scenario.sweep is None or scenario.sweep.parameter in columns:
        return columns

    return (scenario.sweep.parameter, *columns)


def run_info_sweep(
    scenario: cvqkd.params.Scenario,
) -> tuple[tuple[str, ...], Rows]:
    """
    Closed-form DR/RR informations at each point; `bs-sweep` also adds an empirical
    row from a simulated session at each point.
    """

    empirical = scenario.name is cvqkd.params.ScenarioName.BS_SWEEP

    rows: Rows = []

    for i_point, point in iter_scenarios(scenario=scenario):

        config = point.config

        report = cvqkd.infotheory.closed_form_report(
            V=config.V,
            T=config.T_true,
            var_n_A=config.var_n_A,
            attack=config.attack,
            rel_sigma=config.source.rel_sigma,
        )

        rows.append(
            cvqkd.infotheory.sweep_row(
                report=report,
                T=config.T_true,
                V=config.V,
                var_n_A=config.var_n_A,
                attack=config.attack.kind,
            )
        )

        if scenario.name is cvqkd.params.ScenarioName.RR_KEYRATE and i_point == 0:

            breakeven = cvqkd.infotheory.rr_breakeven_T(
                V=config.V,
                var_n_A=config.var_n_A,
                attack=config.attack.kind,
            )

            LOGGER.info(f"RR advantage begins at T = {breakeven}")

        if not empirical:
            continue

        point_seed = cvqkd.streams.derive_seed(
            seed=scenario.config.seed,
            label=cvqkd.streams.StreamLabel.SWEEP_POINT,
            index=i_point,
        )

        ledger = cvqkd.simulate.simulate_session(
            config=config.replace(seed=point_seed),
            workers=scenario.workers,
        )

        try:
            empirical_report = cvqkd.infotheory.empirical_report(ledger=ledger)
        except ValueError as err:
            LOGGER.warning(f"No empirical row at point {i_point}: {err}")
            continue

        rows.append(
            cvqkd.infotheory.sweep_row(
                report=empirical_report,
                T=config.T_true,
                V=config.V,
                var_n_A=config.var_n_A,
                attack=config.attack.kind,
            )
        )

    return (cvqkd.infotheory.SWEEP_COLUMNS, rows)


def run_het_detect(
    scenario: cvqkd.params.Scenario,
) -> tuple[tuple[str, ...], Rows]:

    columns = with_sweep_column(scenario=scenario, columns=cvqkd.detect.ROC_COLUMNS)

    rows: Rows = []

    for _, point in iter_scenarios(scenario=scenario):

        margin = cvqkd.detect.detectability_margin(
            T=point.config.T_nominal,
            V=point.config.V,
            rel_dT=point.rel_dT,
            mode=point.dT_mode,
        )

        LOGGER.info(f"Detectability margin at rel_dT = {point.rel_dT}: {margin} SNU")

        roc = cvqkd.detect.roc_sweep(
            config=point.config,
            rel_dT=point.rel_dT,
            n_trials=point.n_trials,
            thresholds=point.thresholds,
            mode=point.dT_mode,
            workers=point.workers,
            show_progress=point.show_progress,
        )

        for roc_point in roc:

            row: dict[str, object] = {
                "rel_dT": point.rel_dT,
                "threshold_scale": roc_point.threshold_scale,
                "false_alarm": roc_point.false_alarm,
                "missed_detection": roc_point.missed_detection,
                "n_trials": point.n_trials,
            }

            if columns[0] not in row:
                row[columns[0]] = sweep_value(scenario=point)

            rows.append(row)

    return (columns, rows)


def run_false_alarm(
    scenario: cvqkd.params.Scenario,
) -> tuple[tuple[str, ...], Rows]:

    columns = with_sweep_column(
        scenario=scenario,
        columns=cvqkd.detect.FALSE_ALARM_COLUMNS,
    )

    rows: Rows = []

    for _, point in iter_scenarios(scenario=scenario):

        estimate = cvqkd.detect.false_alarm_rate(
            config=point.config,
            rel_dT=point.rel_dT,
            alpha=point.alpha,
            n_trials=point.n_trials,
            mode=point.dT_mode,
            workers=point.workers,
            show_progress=point.show_progress,
        )

        row: dict[str, object] = dataclasses.asdict(estimate)

        if columns[0] not in row:
            row[columns[0]] = sweep_value(scenario=point)

        rows.append(row)

    return (columns, rows)


def run_tap_margin(
    scenario: cvqkd.params.Scenario,
) -> tuple[tuple[str, ...], Rows]:

    sensitivities = cvqkd.detect.tap_sensitivity(
        m_amplitude=scenario.m_amplitude,
        user_loss_db=scenario.loss_db,
        tap_deviation=scenario.tap_deviation,
    )

    rows: Rows = [dataclasses.asdict(sensitivity) for sensitivity in sensitivities]

    return (cvqkd.detect.TAP_COLUMNS, rows)


def run_reconcile_leak(
    scenario: cvqkd.params.Scenario,
) -> tuple[tuple[str, ...], Rows]:
    """
    Sliced reconciliation and leakage gap at each point; a sweep over `n_slices`
    reuses one ledger so the points differ only in what is published.
    """

    columns = with_sweep_column(
        scenario=scenario,
        columns=cvqkd.reconcile.REPORT_COLUMNS,
    )

    rows: Rows = []

    ledger: cvqkd.simulate.PulseLedger | None = None

    for _, point in iter_scenarios(scenario=scenario):

        if ledger is None or ledger.config != point.config:
            ledger = cvqkd.simulate.simulate_session(
                config=point.config,
                workers=point.workers,
            )

        if scenario.ledger_out is not None and not rows:
            cvqkd.output.write_ledger_csv(
                ledger=ledger,
                path=scenario.ledger_out,
                comment=point.canonical(),
            )

        report = cvqkd.reconcile.reconcile_rr(
            ledger=ledger,
            scheme=cvqkd.reconcile.default_slices(
                config=point.config,
                n_slices=point.n_slices,
            ),
        )

        gap = cvqkd.reconcile.leakage_gap(report=report, n_bootstrap=point.n_bootstrap)

        row = cvqkd.reconcile.report_row(report=report, gap=gap)

        if columns[0] not in row:
            row[columns[0]] = sweep_value(scenario=point)

        rows.append(row)

    return (columns, rows)


RUNNERS: dict[
    cvqkd.params.ScenarioName,
    collections.abc.Callable[
        [cvqkd.params.Scenario],
        tuple[tuple[str, ...], Rows],
    ],
] = {
    cvqkd.params.ScenarioName.BS_SWEEP: run_info_sweep,
    cvqkd.params.ScenarioName.RR_KEYRATE: run_info_sweep,
    cvqkd.params.ScenarioName.HET_DETECT: run_het_detect,
    cvqkd.params.ScenarioName.FALSE_ALARM: run_false_alarm,
    cvqkd.params.ScenarioName.TAP_MARGIN: run_tap_margin,
    cvqkd.params.ScenarioName.RECONCILE_LEAK: run_reconcile_leak,
}
