"""
Handles the command-line interface (CLI).
"""

from __future__ import annotations

import argparse
import logging
import pathlib
import sys

import cvqkd.conffile
import cvqkd.main
import cvqkd.model
import cvqkd.params


LOGGER = logging.getLogger("cvqkd")

EXIT_OTHER_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3

SCENARIO_HELP = {
    cvqkd.params.ScenarioName.BS_SWEEP: (
        "Direct and reverse reconciliation informations under a beamsplitter attack, "
        + "closed-form and simulated."
    ),
    cvqkd.params.ScenarioName.RR_KEYRATE: (
        "Closed-form reverse reconciliation advantage over a parameter grid."
    ),
    cvqkd.params.ScenarioName.HET_DETECT: (
        "ROC of the variance test against a heterodyne intercept-resend attack."
    ),
    cvqkd.params.ScenarioName.FALSE_ALARM: (
        "False-alarm rate of the variance test with no eavesdropper."
    ),
    cvqkd.params.ScenarioName.TAP_MARGIN: (
        "Tap transmittance sensitivity against the heterodyne attack's excess noise."
    ),
    cvqkd.params.ScenarioName.RECONCILE_LEAK: (
        "Sliced reverse reconciliation and the leakage of its published messages."
    ),
}


def main(args: list[str] | None = None) -> None:

    parser = setup_parser()

    parsed_args = parser.parse_args(args)

    try:
        run(args=parsed_args)
    except (OSError, UnicodeDecodeError) as err:
        print(err)
        if parsed_args.debug:
            raise err
        sys.exit(EXIT_IO_ERROR)
    except ValueError as err:
        print(err)
        if parsed_args.debug:
            raise err
        sys.exit(EXIT_CONFIG_ERROR)
    except Exception as err:
        print(err)
        if parsed_args.debug:
            raise err
        sys.exit(EXIT_OTHER_ERROR)


def setup_parser() -> argparse.ArgumentParser:

    parser = argparse.ArgumentParser(
        prog="cvqkd",
        description=(
            "Simulate continuous-variable QKD sessions under attack and write the "
            + "analyses as CSV."
        ),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )

    parser.add_argument(
        "--debug",
        action="store_true",
        default=False,
        help="Print error tracebacks.",
    )

    subparsers = parser.add_subparsers(dest="command")

    for scenario_name, scenario_help in SCENARIO_HELP.items():

        subparser = subparsers.add_parser(
            scenario_name.value,
            help=scenario_help,
            description=scenario_help,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
            argument_default=argparse.SUPPRESS,
        )

        add_scenario_arguments(parser=subparser)

    return parser


def add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    """
    Adds the flags shared by every scenario.

    Flags that are not given are left out of the parsed arguments, so that they do
    not override a config file; the built-in defaults are shown in the help instead.
    """

    defaults = cvqkd.params.DEFAULT_SETTINGS

    def default_help(key: str) -> str:
        return f" (default: {defaults[key]})" if defaults[key] is not None else ""

    parser.add_argument(
        "--config",
        type=pathlib.Path,
        help="Path to a `key = value` file of settings; flags take precedence.",
    )

    parser.add_argument(
        "--seed",
        type=int,
        help="Seed from which all randomness is derived (required).",
    )

    parser.add_argument(
        "--out",
        type=pathlib.Path,
        help="Path of the CSV file to write (default: <scenario>.csv).",
    )

    parser.add_argument(
        "--V",
        dest="V",
        type=float,
        help="Modulation variance per quadrature, in SNU." + default_help("V"),
    )

    parser.add_argument(
        "--T",
        dest="T",
        type=float,
        help="Nominal total transmittance." + default_help("T"),
    )

    parser.add_argument(
        "--T-true",
        dest="T_true",
        type=float,
        help="Actual total transmittance (default: the nominal transmittance).",
    )

    parser.add_argument(
        "--var-nA",
        dest="var_nA",
        type=float,
        help=(
            "Variance of Alice's self-knowledge noise, in SNU; a non-zero value "
            + "implies a tap-homodyne source."
        ),
    )

    parser.add_argument(
        "--source",
        choices=[kind.value for kind in cvqkd.model.SourceKind],
        help="Alice's source model." + default_help("source"),
    )

    parser.add_argument(
        "--tap",
        type=float,
        help="Transmittance of the monitoring tap." + default_help("tap"),
    )

    parser.add_argument(
        "--rel-sigma",
        dest="rel_sigma",
        type=float,
        help=(
            "Relative standard deviation of the attenuation."
            + default_help("rel_sigma")
        ),
    )

    parser.add_argument(
        "--attack",
        choices=[kind.value for kind in cvqkd.model.AttackKind],
        help="Eve's attack (default: depends on the scenario).",
    )

    parser.add_argument(
        "--fraction",
        type=float,
        help="Fraction of pulses attacked." + default_help("fraction"),
    )

    parser.add_argument(
        "--rel-dT",
        dest="rel_dT",
        type=float,
        help="Users' uncertainty in the transmittance." + default_help("rel_dT"),
    )

    parser.add_argument(
        "--dT-mode",
        dest="dT_mode",
        choices=[mode.value for mode in cvqkd.model.DeviationMode],
        help="Whether --rel-dT is relative to T or absolute." + default_help("dT_mode"),
    )

    parser.add_argument(
        "--alpha",
        type=float,
        help="Significance level of the variance test." + default_help("alpha"),
    )

    parser.add_argument(
        "--pulses",
        type=int,
        help="Number of pulses per session." + default_help("pulses"),
    )

    parser.add_argument(
        "--disclose",
        type=float,
        help="Fraction of pulses disclosed for the variance test."
        + default_help("disclose"),
    )

    parser.add_argument(
        "--slices",
        type=int,
        help="Number of slices in reconciliation." + default_help("slices"),
    )

    parser.add_argument(
        "--sweep",
        help=(
            "Parameter grid as `param:start:stop:steps`, with param one of "
            + "T, V, var_n_A, rel_dT, fraction, n_slices."
        ),
    )

    parser.add_argument(
        "--trials",
        type=int,
        help="Number of sessions per hypothesis." + default_help("trials"),
    )

    parser.add_argument(
        "--thresholds",
        help=(
            "Comma-separated acceptance half-widths, in units of the sample "
            + "variance's standard deviation." + default_help("thresholds")
        ),
    )

    parser.add_argument(
        "--m",
        dest="m",
        type=float,
        help="Signal amplitude for the tap margin." + default_help("m"),
    )

    parser.add_argument(
        "--loss-db",
        dest="loss_db",
        type=float,
        help="Users' total loss, in dB." + default_help("loss_db"),
    )

    parser.add_argument(
        "--dev",
        type=float,
        help="Relative error in the tap transmittance." + default_help("dev"),
    )

    parser.add_argument(
        "--workers",
        type=int,
        help="Number of worker threads; results do not depend on it."
        + default_help("workers"),
    )

    parser.add_argument(
        "--bootstrap",
        type=int,
        help="Number of bootstrap resamples for the leakage gap."
        + default_help("bootstrap"),
    )

    parser.add_argument(
        "--ledger-out",
        dest="ledger_out",
        type=pathlib.Path,
        help="Path to also write the session ledger (reconcile-leak only).",
    )

    parser.add_argument(
        "--show-progress",
        dest="show_progress",
        action=argparse.BooleanOptionalAction,
        help="Enable or disable a progress bar.",
    )


def settings_from_args(args: argparse.Namespace) -> dict[str, object]:
    """
    The settings given as flags, with unset flags left out.
    """

    return {
        key: value
        for (key, value) in vars(args).items()
        if key in cvqkd.params.DEFAULT_SETTINGS
    }


def run(args: argparse.Namespace) -> None:

    if args.command is None:
        parser = setup_parser()
        parser.print_help()
        return

    LOGGER.debug(f"Running command with arguments: {args}")

    file_settings: dict[str, str] = {}

    config_path: pathlib.Path | None = getattr(args, "config", None)

    if config_path is not None:
        file_settings = cvqkd.conffile.read_config_file(config_path=config_path)

    settings = cvqkd.params.merge_settings(file_settings, settings_from_args(args))

    scenario = cvqkd.params.scenario_from_settings(name=args.command, settings=settings)

    cvqkd.main.run(scenario=scenario)
