import numpy as np
import pytest

from weaklab import Operator, StateVector


def random_state(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v).unit()


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return Operator((m + m.conj().T) / 2, frozenset({"hermitian"}))


def random_unitary(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(m)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))[np.newaxis, :]
    return Operator(q, frozenset({"unitary"}))


def random_pair_with_overlap(rng, dim, min_overlap=0.1):
    """(s, f) normalized with |<f, s>| at least min_overlap."""
    while True:
        s = random_state(rng, dim)
        f = random_state(rng, dim)
        if abs(np.vdot(f.amplitudes, s.amplitudes)) >= min_overlap:
            return s, f


@pytest.fixture
def rng():
    return np.random.default_rng(20090930)
