"""
Writes the CSV artifacts.
"""

from __future__ import annotations

import collections.abc
import csv
import enum
import io
import logging
import math
import pathlib

import numpy as np

import tenacity

import cvqkd.model
import cvqkd.simulate


LOGGER = logging.getLogger("cvqkd")

LEDGER_COLUMNS = ("index", "basis", "m", "m_A", "m_B", "m_E", "attacked", "disclosed")


def format_value(value: object) -> str:
    """
    Renders one cell; floats use the shortest round-tripping representation so that
    reruns are byte-identical.
    """

    if value is None:
        return ""

    if isinstance(value, enum.Enum):
        return str(value.value)

    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"

    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)

    return str(value)


def render_csv(
    comment: str,
    columns: collections.abc.Sequence[str],
    rows: collections.abc.Iterable[collections.abc.Mapping[str, object]],
) -> str:

    if "\n" in comment:
        raise ValueError("The comment line cannot contain a newline")

    buffer = io.StringIO()

    buffer.write(f"# {comment}\n")

    writer = csv.writer(buffer, lineterminator="\n")

    writer.writerow(columns)

    for row in rows:
        writer.writerow([format_value(row[column]) for column in columns])

    return buffer.getvalue()


@tenacity.retry(
    wait=tenacity.wait_exponential(multiplier=0.5, min=0.5, max=5),
    stop=tenacity.stop_after_attempt(5),
    retry=tenacity.retry_if_exception_type((BlockingIOError, InterruptedError)),
    after=tenacity.after_log(logger=LOGGER, log_level=logging.WARNING),
    reraise=True,
)
def _write_text(path: pathlib.Path, text: str) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def write_csv(
    path: pathlib.Path,
    comment: str,
    columns: collections.abc.Sequence[str],
    rows: collections.abc.Iterable[collections.abc.Mapping[str, object]],
) -> None:
    """
    Writes a CSV whose first line is `# comment`, followed by a header row.

    Parameters
    ----------
    path
        Destination; its directory must exist.
    comment
        A single line, normally the canonical scenario settings.
    columns
        Header, and the keys looked up in each row.
    rows
        One mapping per output row.
    """

    text = render_csv(comment=comment, columns=columns, rows=rows)

    _write_text(path=path, text=text)

    LOGGER.info(f"Wrote {text.count(chr(10)) - 2} rows to {path}")


def ledger_rows(
    ledger: cvqkd.simulate.PulseLedger,
) -> collections.abc.Iterator[dict[str, object]]:

    columns = ledger.columns

    for index in range(len(ledger)):
        yield {
            "index": index,
            "basis": cvqkd.model.Basis(int(columns.basis[index])).name,
            "m": columns.m[index],
            "m_A": columns.m_A[index],
            "m_B": columns.m_B[index],
            "m_E": columns.m_E[index],
            "attacked": columns.attacked[index],
            "disclosed": columns.disclosed[index],
        }


def write_ledger_csv(
    ledger: cvqkd.simulate.PulseLedger,
    path: pathlib.Path,
    comment: str | None = None,
) -> None:
    """
    Exports a ledger, one row per pulse; `m_E` is empty where Eve has no record.
    """

    if comment is None:
        comment = (
            f"seed={ledger.rng_trace.seed} rng={ledger.rng_trace.scheme} "
            + f"n_pulses={len(ledger)}"
        )

    write_csv(
        path=path,
        comment=comment,
        columns=LEDGER_COLUMNS,
        rows=ledger_rows(ledger=ledger),
    )
