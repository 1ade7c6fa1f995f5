import pytest

import cvqkd.conffile


def test_read_config_file(shared_datadir):

    settings = cvqkd.conffile.read_config_file(
        config_path=shared_datadir / "session.conf"
    )

    assert settings == {
        "seed": "42",
        "V": "100",
        "T": "0.4",
        "var_nA": "2",
        "pulses": "250000",
        "attack": "bs",
    }


def test_normalise_key():

    assert cvqkd.conffile.normalise_key("--T-true ") == "T_true"
    assert cvqkd.conffile.normalise_key("loss_db") == "loss_db"


def test_parse_config_errors():

    with pytest.raises(ValueError, match="line 2"):
        cvqkd.conffile.parse_config_text(text="seed = 1\nT 0.5")

    with pytest.raises(ValueError, match="duplicate"):
        cvqkd.conffile.parse_config_text(text="seed = 1\nseed = 2")

    with pytest.raises(ValueError, match="empty"):
        cvqkd.conffile.parse_config_text(text="seed =")

    assert cvqkd.conffile.parse_config_text(text="\n# nothing\n") == {}
