from pathlib import Path

import pytest

from tapn_reach.modules.config import CONFIG_ENV
from tapn_reach.modules.loader import bundled_model_path, load_net
from tapn_reach.modules.net import TimedArcPetriNet

GOLDEN_PATH = Path(__file__).parent / "golden"


@pytest.fixture(autouse=True)
def isolated_config_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    config_file = tmp_path / "config.ini"
    monkeypatch.setenv(CONFIG_ENV, str(config_file))
    return config_file


@pytest.fixture
def fig1_net() -> TimedArcPetriNet:
    return load_net(bundled_model_path("fig1"))[0]


@pytest.fixture
def producer_consumer_net() -> TimedArcPetriNet:
    return load_net(bundled_model_path("producer_consumer"))[0]


@pytest.fixture
def deadline_monitor_net() -> TimedArcPetriNet:
    return load_net(bundled_model_path("deadline_monitor"))[0]
