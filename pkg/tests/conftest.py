import numpy as np
import pytest

import spde

CONFIG_DIR = "configs"


def mode_field(basis, k, amp):
    c = np.zeros(basis.n_modes)
    c[k - 1] = amp
    return spde.SpectralField(basis, c)


@pytest.fixture(scope="session")
def basis32():
    return spde.build_basis("dirichlet", 32, 64)


def build_model(
    basis,
    slow="fhn",
    fast="cubic_decay",
    fast_a=1.0,
    fast_c=0.5,
    period=0.5,
    gamma_amp=0.2,
    l_amp=0.0,
    f1=("tanh", 0.1),
    f2=("tanh", 0.2),
    g1=("tanh", 0.1),
    g2=("tanh", 0.1),
    levy1=2.0,
    levy2=2.0,
    mark_law="uniform",
):
    return spde.ModelSpec(
        name="test",
        basis=basis,
        profile=spde.make_profile(1.0, gamma_amp, period, l_amp),
        slow=spde.make_slow_reaction(slow),
        fast=spde.make_fast_reaction(fast, a=fast_a, c=fast_c, period=period),
        diffjump=spde.make_diffusion_jump(f1=f1, f2=f2, g1=g1, g2=g2),
        q1=spde.QWienerSpec(),
        q2=spde.QWienerSpec(),
        levy1=spde.LevyMeasureSpec(levy1, mark_law),
        levy2=spde.LevyMeasureSpec(levy2, mark_law),
    )


@pytest.fixture(scope="session")
def fhn_cubic_model(basis32):
    return build_model(basis32, l_amp=0.1, f1=("tanh", 0.3), g1=("tanh", 0.2), levy1=4.0)


@pytest.fixture(scope="session")
def linear_fast_model(basis32):
    """Linear fast reaction, additive fast noise, no fast jumps, no transport."""
    return build_model(
        basis32, fast="linear", fast_c=0.0, gamma_amp=0.1,
        f2=("const", 0.2), g2=("zero", 0.0), levy2=0.0,
    )


@pytest.fixture(scope="session")
def sweep_linear_model(basis32):
    return build_model(basis32, fast="linear", fast_c=0.5, f2=("const", 0.2))


@pytest.fixture(scope="session")
def quiet_model(basis32):
    """No reactions, no noise: bare heat flow on both components."""
    return build_model(
        basis32, slow="zero", fast="zero", fast_a=0.0, fast_c=0.0, gamma_amp=0.0,
        f1=("zero", 0.0), f2=("zero", 0.0), g1=("zero", 0.0), g2=("zero", 0.0),
        levy1=0.0, levy2=0.0,
    )
