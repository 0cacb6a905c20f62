import pytest

from hpscan.synth.archetypes import synth_config
from hpscan.synth.generator import generate
from hpscan.utils.logger import log


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep the app directory and API key out of the developer's machine."""
    monkeypatch.setenv("HPSCAN_HOME", str(tmp_path / "home"))
    monkeypatch.delenv("ETHERSCAN_API_KEY", raising=False)
    log.debug_mode = False
    yield


@pytest.fixture(scope="session")
def small_corpus():
    """A quick synthetic corpus: 40 honeypots, 200 non-honeypots."""
    return generate(synth_config(n_honeypots=40, n_non_honeypots=200, seed=3))
