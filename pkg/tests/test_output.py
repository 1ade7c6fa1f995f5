import math

import numpy as np

import pytest

import cvqkd.model
import cvqkd.output
import cvqkd.simulate


def test_format_value():

    assert cvqkd.output.format_value(None) == ""
    assert cvqkd.output.format_value(math.nan) == ""
    assert cvqkd.output.format_value(np.float64(0.1)) == "0.1"
    assert cvqkd.output.format_value(True) == "1"
    assert cvqkd.output.format_value(np.bool_(False)) == "0"
    assert cvqkd.output.format_value(cvqkd.model.AttackKind.BEAMSPLITTER) == "bs"
    assert cvqkd.output.format_value(3) == "3"


def test_render_csv():

    text = cvqkd.output.render_csv(
        comment='{"seed":1}',
        columns=("a", "b"),
        rows=[{"a": 1, "b": 0.5}, {"b": None, "a": "x,y"}],
    )

    assert text == '# {"seed":1}\na,b\n1,0.5\n"x,y",\n'

    with pytest.raises(ValueError):
        cvqkd.output.render_csv(comment="one\ntwo", columns=("a",), rows=[])


def test_write_csv_retries(tmp_path, monkeypatch):

    path = tmp_path / "rows.csv"

    calls = []

    original_open = type(tmp_path).open

    def flaky_open(self, *args, **kwargs):
        if self == path:
            calls.append(self)
            if len(calls) == 1:
                raise BlockingIOError("busy")
        return original_open(self, *args, **kwargs)

    monkeypatch.setattr(type(tmp_path), "open", flaky_open)
    monkeypatch.setattr(cvqkd.output._write_text.retry, "sleep", lambda _: None)

    cvqkd.output.write_csv(path=path, comment="c", columns=("a",), rows=[{"a": 1}])

    assert len(calls) == 2
    assert path.read_text() == "# c\na\n1\n"


def test_write_csv_missing_directory(tmp_path):

    with pytest.raises(OSError):
        cvqkd.output.write_csv(
            path=tmp_path / "missing" / "rows.csv",
            comment="c",
            columns=("a",),
            rows=[],
        )


def test_write_ledger_csv(tmp_path, config_factory):

    config = config_factory(
        n_pulses=1_000,
        attack=cvqkd.model.AttackKind.BEAMSPLITTER,
        fraction=0.5,
    )

    ledger = cvqkd.simulate.simulate_session(config=config)

    path = tmp_path / "ledger.csv"

    cvqkd.output.write_ledger_csv(ledger=ledger, path=path)

    lines = path.read_text().splitlines()

    assert lines[0] == f"# seed=42 rng={ledger.rng_trace.scheme} n_pulses=1000"
    assert lines[1] == ",".join(cvqkd.output.LEDGER_COLUMNS)
    assert len(lines) == 2 + 1_000

    fields = [line.split(",") for line in lines[2:]]

    for i_pulse, row in enumerate(fields):
        attacked = row[6] == "1"
        assert attacked == bool(ledger.columns.attacked[i_pulse])
        assert (row[5] == "") == (not attacked)
        assert float(row[4]) == ledger.columns.m_B[i_pulse]
