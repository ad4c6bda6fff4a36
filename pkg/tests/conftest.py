import numpy as np
import pytest

from pomtx import load_config
from pomtx.optomech import MechanicalMode, OpticalCavity

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def device():
    model, _ = load_config("paper_device")
    return model


@pytest.fixture(scope="session")
def cavity():
    return OpticalCavity(
        omega_c=TWO_PI * 192.743e12, kappa=TWO_PI * 4.17e9, kappa_e=TWO_PI * 2.54e9
    )


@pytest.fixture(scope="session")
def mode_2799():
    return MechanicalMode(
        omega_m=TWO_PI * 2.799e9, gamma_m0=TWO_PI * 67e3, g0=TWO_PI * 700e3,
        tau_energy=61.4e-6,
    )


@pytest.fixture(scope="session")
def mode_2790():
    return MechanicalMode(omega_m=TWO_PI * 2.790e9, gamma_m0=TWO_PI * 191e3, g0=TWO_PI * 272e3)
