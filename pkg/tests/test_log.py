import logging

import pytest

import cvqkd.log


def test_get_log_level(monkeypatch):

    monkeypatch.delenv(cvqkd.log.LOG_LEVEL_ENV_VAR, raising=False)

    assert cvqkd.log.get_log_level() == logging.INFO

    monkeypatch.setenv(cvqkd.log.LOG_LEVEL_ENV_VAR, "warning")

    assert cvqkd.log.get_log_level() == logging.WARNING

    monkeypatch.setenv(cvqkd.log.LOG_LEVEL_ENV_VAR, "yada")

    with pytest.raises(SystemExit):
        cvqkd.log.get_log_level()


def test_setup_logging_once():

    cvqkd.log.setup_logging(log_level=logging.INFO)
    cvqkd.log.setup_logging(log_level=logging.INFO)

    handlers = [
        handler
        for handler in logging.getLogger().handlers
        if handler.get_name() == "cvqkd-screen"
    ]

    assert len(handlers) == 1


def test_log_elapsed(caplog):

    with caplog.at_level(logging.INFO, logger="cvqkd"):
        with cvqkd.log.log_elapsed(description="Counting"):
            pass

    messages = [record.getMessage() for record in caplog.records]

    assert messages[0].startswith("Counting: started at")
    assert messages[-1].startswith("Counting: finished at")
