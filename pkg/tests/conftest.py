"""Shared fixtures and random-system generators."""

import numpy as np
import pytest

from passmat.lti import StateSpace, scalar_index_freq
from passmat.passivity import compute_ofpm


@pytest.fixture(scope="session")
def bench_plant():
    """Well-conditioned 2x2 MIMO test plant with a directional passivity
    shortage; used throughout the suite with frozen expected values."""
    return StateSpace(
        a=[[-2.0, 3.0], [-8.0, -10.0]],
        b=[[-1.3, 3.4], [3.6, -1.7]],
        c=[[8.0, 9.0], [10.0, 7.0]],
        d=[[8.0, 8.0], [6.0, -8.0]],
    )


@pytest.fixture(scope="session")
def scalar_lag():
    """First-order lag 1/(s+1)."""
    return StateSpace(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]])


def random_sym(rng, dim, scale=1.0):
    mat = rng.randn(dim, dim) * scale
    return (mat + mat.T) / 2.0


def random_spd(rng, dim, shift=0.1, scale=1.0):
    mat = rng.randn(dim, dim) * scale
    return mat @ mat.T + shift * np.eye(dim)


def random_hurwitz(rng, n=None, m=None, d_scale=1.0):
    """Random stable square system with poles shifted left of -0.3."""
    if n is None:
        n = rng.randint(2, 6)
    if m is None:
        m = rng.randint(1, 4)
    a = rng.randn(n, n)
    a -= (np.max(np.linalg.eigvals(a).real) + rng.uniform(0.3, 2.0)) * np.eye(n)
    return StateSpace(
        a=a,
        b=rng.randn(n, m),
        c=rng.randn(m, n),
        d=d_scale * rng.randn(m, m),
    )


def random_isp(rng, n=None, m=None, min_index=0.05, max_tries=50):
    """Random input strictly passive system (feedthrough-dominant)."""
    for _ in range(max_tries):
        if n is None:
            n_try = rng.randint(1, 5)
        else:
            n_try = n
        if m is None:
            m_try = rng.randint(1, 4)
        else:
            m_try = m
        a = rng.randn(n_try, n_try)
        a -= (np.max(np.linalg.eigvals(a).real) + rng.uniform(0.5, 2.0)) * np.eye(
            n_try
        )
        d = random_spd(rng, m_try, shift=rng.uniform(1.0, 3.0), scale=0.3)
        sys = StateSpace(
            a=a,
            b=0.4 * rng.randn(n_try, m_try),
            c=0.4 * rng.randn(m_try, n_try),
            d=d,
        )
        phi, _, _ = scalar_index_freq(sys, kind="ifpm")
        if phi > min_index:
            return sys
    raise RuntimeError("failed to sample an ISP system")


def random_osp(rng, n=None, m=None, min_index=0.02, max_tries=50):
    """Random output strictly passive system with its OFP certificate."""
    for _ in range(max_tries):
        sys = random_isp(rng, n=n, m=m, min_index=0.2, max_tries=max_tries)
        cert = compute_ofpm(sys, "mineig")
        if np.linalg.eigvalsh(cert.xi)[0] > min_index:
            return sys, cert
    raise RuntimeError("failed to sample an OSP system")
