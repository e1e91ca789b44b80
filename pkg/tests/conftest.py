from functools import reduce

import numpy as np
import pytest

from nosignal.pauli import PauliSum

# independent of nosignal.dense so the oracles below never share code with the path under test
MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_label(label: str) -> np.ndarray:
    return reduce(np.kron, [MATS[c] for c in label], np.eye(1, dtype=complex))


def kron_sum(terms: dict) -> np.ndarray:
    return sum(c * kron_label(lab) for lab, c in terms.items())


def brute_partial_trace(rho: np.ndarray, traced) -> np.ndarray:
    """Partial trace by explicit summation over basis indices."""
    n = rho.shape[0].bit_length() - 1
    kept = [s for s in range(1, n + 1) if s not in set(traced)]
    d = 2 ** len(kept)
    out = np.zeros((d, d), dtype=complex)

    def bits(i):
        return [(i >> (n - s)) & 1 for s in range(1, n + 1)]

    for i in range(2 ** n):
        for j in range(2 ** n):
            bi, bj = bits(i), bits(j)
            if any(bi[s - 1] != bj[s - 1] for s in traced):
                continue
            ki = int("".join(str(bi[s - 1]) for s in kept) or "0", 2)
            kj = int("".join(str(bj[s - 1]) for s in kept) or "0", 2)
            out[ki, kj] += rho[i, j]
    return out


def random_pauli_sum(rng, n, n_terms, *, integer=False, avoid_identity_on=()):
    """Random sum; with ``avoid_identity_on`` every term is non-identity on at least one of those sites."""
    terms = {}
    while len(terms) < n_terms:
        lab = "".join(rng.choice(list("IXYZ"), size=n))
        if avoid_identity_on and all(lab[s - 1] == "I" for s in avoid_identity_on):
            continue
        if integer:
            c = complex(int(rng.integers(-4, 5)), int(rng.integers(-4, 5))) / 4
        else:
            c = complex(rng.normal(), rng.normal())
        if c != 0:
            terms[lab] = c
    return PauliSum.from_labels(terms, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, printed once at the end of the session
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
