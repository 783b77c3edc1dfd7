import numpy as np
import pytest

from leocoop.association import associate
from leocoop.beamforming import build_combiners, build_precoders
from leocoop.channel import build_channels
from leocoop.geometry import sample_geometry

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


class Drop:
    """Every artifact of one small drop, for tests that poke at internals."""

    def __init__(self, config, mode="full", seed=0, sync_mode="random"):
        rng = np.random.default_rng(seed)
        self.config = config
        self.geom = sample_geometry(config, rng)
        self.channels = build_channels(self.geom, config, rng)
        self.decision = associate(mode, self.geom, config, rng, sync_mode=sync_mode)
        self.precoders = build_precoders(self.channels, self.decision, self.geom, config)
        self.combiners = build_combiners(self.channels, self.precoders, self.decision)

    @property
    def parts(self):
        return self.channels, self.precoders, self.combiners, self.decision


@pytest.fixture
def make_drop():
    return Drop
