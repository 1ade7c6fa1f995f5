import pytest

import cvqkd.model
import cvqkd.simulate


def make_config(
    V=100.0,
    T=0.5,
    T_true=None,
    n_pulses=200_000,
    seed=42,
    attack=cvqkd.model.AttackKind.NO_ATTACK,
    fraction=1.0,
    source=None,
    disclosure_fraction=0.5,
):

    return cvqkd.model.SessionConfig(
        V=V,
        T_nominal=T,
        T_true=T if T_true is None else T_true,
        n_pulses=n_pulses,
        seed=seed,
        disclosure_fraction=disclosure_fraction,
        source=cvqkd.model.SourceModel() if source is None else source,
        attack=cvqkd.model.AttackModel(kind=attack, fraction=fraction),
    )


@pytest.fixture(scope="session")
def config_factory():
    return make_config


@pytest.fixture(scope="session")
def bs_ledger():
    """
    Beamsplitter attack at the 3 dB point.
    """

    config = make_config(
        V=100.0,
        T=0.5,
        n_pulses=2_000_000,
        seed=2024,
        attack=cvqkd.model.AttackKind.BEAMSPLITTER,
    )

    return cvqkd.simulate.simulate_session(config=config, workers=4)


@pytest.fixture(scope="session")
def het_ledger():

    config = make_config(
        V=100.0,
        T=0.5,
        n_pulses=1_000_000,
        seed=7,
        attack=cvqkd.model.AttackKind.HETERODYNE_INTERCEPT_RESEND,
    )

    return cvqkd.simulate.simulate_session(config=config, workers=4)


@pytest.fixture(scope="session")
def clean_ledger():
    """
    Lossless link with no attack.
    """

    config = make_config(V=100.0, T=1.0, n_pulses=100_000, seed=11)

    return cvqkd.simulate.simulate_session(config=config)
