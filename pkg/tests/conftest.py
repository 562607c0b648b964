"""Shared fixtures: small benchmark networks with known modal structure."""

import numpy as np
import pytest

from impedmodal.network_model import (
    ApparatusAttachment,
    NetworkDescription,
    SeriesBranch,
    ShuntElement,
    StateSpaceRealization,
)

W0 = 100 * np.pi


def rl_load_apparatus(Ra: float, La: float, w0: float = W0) -> StateSpaceRealization:
    """Series RL load as a state-space apparatus: bus voltage in, drawn
    current out, states = dq inductor current in the local frame."""
    A = np.array([[-Ra / La, w0], [-w0, -Ra / La]])
    B = np.eye(2) / La
    return StateSpaceRealization(A=A, B=B, C=np.eye(2), D=np.zeros((2, 2)))


@pytest.fixture(scope="session")
def three_bus_net() -> NetworkDescription:
    """Oracle-capable 3-bus benchmark: line 1-2, transformer 2-3 (k = 0.932),
    RC shunts, and two RL-load apparatus with nonzero frame angles.
    14 states, 7 conjugate mode pairs between ~50 and ~1800 rad/s."""
    return NetworkDescription(
        n_buses=3,
        omega0=W0,
        branches=(
            SeriesBranch(kind="line", from_bus=1, to_bus=2, R=0.05, L=0.002),
            SeriesBranch(kind="transformer", from_bus=2, to_bus=3, R=0.03, L=0.0015,
                         ratio=0.932),
        ),
        shunts=(
            ShuntElement(bus=1, kind="capacitive", value=0.001),
            ShuntElement(bus=2, kind="capacitive", value=0.0008),
            ShuntElement(bus=3, kind="capacitive", value=0.0012),
            ShuntElement(bus=1, kind="resistive", value=2.0),
            ShuntElement(bus=3, kind="resistive", value=1.5),
        ),
        apparatus=(
            ApparatusAttachment(bus=3, model=rl_load_apparatus(0.1, 0.005), theta=0.3),
            ApparatusAttachment(bus=1, model=rl_load_apparatus(0.2, 0.01), theta=-0.2),
        ),
    )


@pytest.fixture(scope="session")
def two_bus_net() -> NetworkDescription:
    """RL line between two capacitor-grounded buses: 6 states."""
    return NetworkDescription(
        n_buses=2,
        omega0=W0,
        branches=(SeriesBranch(kind="line", from_bus=1, to_bus=2, R=0.02, L=0.001),),
        shunts=(
            ShuntElement(bus=1, kind="capacitive", value=0.002),
            ShuntElement(bus=2, kind="capacitive", value=0.0015),
            ShuntElement(bus=1, kind="resistive", value=4.0),
        ),
    )


@pytest.fixture(scope="session")
def rc_bus_net() -> NetworkDescription:
    """Single bus with parallel R-C shunt: Y = [[G+sC, -w0 C],[w0 C, G+sC]]
    with G = 0.1, C = 0.01, so the modes sit exactly at -G/C +- j w0
    = -10 +- j*100*pi (the benchmark values used throughout)."""
    return NetworkDescription(
        n_buses=1,
        omega0=W0,
        shunts=(
            ShuntElement(bus=1, kind="resistive", value=10.0),  # G = 0.1
            ShuntElement(bus=1, kind="capacitive", value=0.01),
        ),
    )


def rl_shunt_impedance(s: complex, R: float = 0.1, L: float = 0.01, w0: float = W0):
    """dq impedance block of the series RL shunt benchmark; its determinant
    vanishes at s = -R/L +- j w0."""
    return np.array([[R + s * L, -w0 * L], [w0 * L, R + s * L]], dtype=complex)


def rl_shunt_admittance(s: complex, R: float = 0.1, L: float = 0.01, w0: float = W0):
    """Admittance of the series RL shunt: poles at -R/L +- j w0."""
    return np.linalg.inv(rl_shunt_impedance(s, R, L, w0))
