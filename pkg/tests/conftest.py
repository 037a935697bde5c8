import numpy as np
import pytest

from hardylab.expr import parse
from hardylab.kernels import KernelSpec, Scenario
from hardylab.weights import isotropic


def hardy_scenario(p=2.0, d=1):
    kernel = KernelSpec(m=1, n=1, psi=parse("1", 1), s=(parse("t1", 1),), beta=1.0)
    return Scenario(d=d, kernel=kernel, weights=(isotropic(d, 0.0),), p=(p,))


def diagonal_scenario(p=(4, 4), d=1, lam=None, q=None):
    m = len(p)
    kernel = KernelSpec(
        m=m, n=m, psi=parse("1", m),
        s=tuple(parse(f"t{k+1}", m) for k in range(m)), beta=1.0,
    )
    mode = "lebesgue"
    if q:
        mode = "commutator"
    elif lam:
        mode = "morrey"
    return Scenario(d=d, kernel=kernel, weights=tuple(isotropic(d, 0.0) for _ in p),
                    p=tuple(p), q=tuple(q or ()), lam=tuple(lam or ()), mode=mode)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
