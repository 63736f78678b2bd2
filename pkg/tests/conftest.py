import numpy as np
import pytest

from fxdispatch import DispatchSystem, GeneratorSpec, KronLossModel, path_topology

# Four-generator reference case (quadratic costs, B-loss model, demand 600 MW)
REF_B = np.array([
    [1.200, 0.286, 0.481, 0.321],
    [0.286, 1.341, 0.511, 1.251],
    [0.481, 0.511, 1.539, 1.463],
    [0.321, 1.251, 1.463, 1.612],
]) * 1e-4
REF_B0 = np.array([2.0, 1.0, 2.5, 1.5]) * 1e-3
REF_B00 = 4.0
REF_COST = [(53.0, 1.21, 0.094), (34.0, 3.47, 0.082), (45.0, 2.24, 0.086), (78.0, 2.55, 0.105)]
REF_P0 = np.array([170.0, 110.0, 140.0, 180.0])
REF_DEMAND = 600.0

# Consensus equilibrium of the reference case, frozen from the damped-Newton
# solver and independently confirmed by scipy.optimize.fsolve and by direct
# RK4 integration of the dynamics to t=200 s (agreement < 1e-5 MW).
REF_EQUILIBRIUM = np.array([164.75601311, 171.72475982, 168.5977655, 135.8317408])
REF_EQ_COST = 11080.832237274592
REF_EQ_LOSS = 40.910279226665146


@pytest.fixture(scope="session")
def ref_model():
    return KronLossModel(REF_B, REF_B0, REF_B00)


@pytest.fixture(scope="session")
def ref_gens():
    return tuple(
        GeneratorSpec(a=a, b=b, c=c, p0=p, d0=p)
        for (a, b, c), p in zip(REF_COST, REF_P0)
    )


@pytest.fixture(scope="session")
def ref_top():
    return path_topology(4)


@pytest.fixture(scope="session")
def ref_system(ref_gens, ref_model, ref_top):
    return DispatchSystem(gens=ref_gens, loss=ref_model, top=ref_top)
