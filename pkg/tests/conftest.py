from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
import yaml

from dynamics.systems import integrate_mode_B
from dynamics.transport import make_e_init
from hopf.background import make_background
from utils.fluxes import FluxModel

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
# boundary emission of the tanh ramp below at t = 0 for g0 = 1, phi0 = 0
CORNER_E = 0.1 * np.sqrt(6.0)


@pytest.fixture(scope="session")
def burgers() -> FluxModel:
    return FluxModel("u2")


@pytest.fixture(scope="session")
def tanh_ramp(burgers):
    return make_background("tanh", burgers, a=0.0, b=0.1, k=0.5)


@pytest.fixture(scope="session")
def mode_b_traj(tanh_ramp):
    return integrate_mode_B(tanh_ramp, 1.0, 0.0, make_e_init("constant", CORNER_E), 1.0, n_steps=200)


@pytest.fixture
def write_config(tmp_path):
    def _write(data: dict, name: str = "scenario.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=True), encoding="utf-8")
        return path

    return _write
