"""Dense linear algebra on qubit chains.

Operators are plain ``numpy`` complex arrays of shape ``(2**N, 2**N)``. Site 1
is the most significant Kronecker factor, matching :mod:`nosignal.pauli`.
Nothing here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import ResourceError, UsageError, ValidationError

MAX_DENSE_SITES = 12

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
MIN_EIG_TOL = -1e-10
KRAUS_TOL = 1e-10

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def check_dense_size(n_sites: int, limit: int | None = None) -> None:
    limit = MAX_DENSE_SITES if limit is None else limit
    if n_sites > limit:
        raise ResourceError(
            f"dense engine refuses N={n_sites} sites (limit {limit}, dim {2 ** limit})",
            reached=n_sites,
        )


def n_sites_of(op: np.ndarray) -> int:
    dim = op.shape[0]
    if op.ndim != 2 or op.shape != (dim, dim) or dim < 1 or dim & (dim - 1):
        raise UsageError(f"expected a 2^N x 2^N matrix, got shape {op.shape}")
    return dim.bit_length() - 1


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def validate_state(rho: np.ndarray, name: str = "state") -> np.ndarray:
    """Raise :class:`ValidationError` unless ``rho`` is a density matrix within the package tolerances."""
    rho = np.asarray(rho, dtype=complex)
    n_sites_of(rho)
    if not is_hermitian(rho):
        raise ValidationError(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > TRACE_TOL:
        raise ValidationError(f"{name} has trace {tr.real:.3e}, expected 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lo < MIN_EIG_TOL:
        raise ValidationError(f"{name} has negative eigenvalue {lo:.3e}")
    return rho


# ---------------------------------------------------------------------------
# site permutations and embedding


def permute_sites(op: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor ``k`` of ``op`` (0-based) moves to site ``order[k]`` (1-based)."""
    n = n_sites_of(op)
    if sorted(order) != list(range(1, n + 1)):
        raise UsageError(f"order {list(order)} is not a permutation of 1..{n}")
    t = op.reshape([2] * (2 * n))
    # output axis for site s takes input factor k where order[k] == s
    src = [0] * n
    for k, s in enumerate(order):
        src[s - 1] = k
    axes = src + [n + k for k in src]
    return t.transpose(axes).reshape(2 ** n, 2 ** n)


def embed(op: np.ndarray, positions: Sequence[int], n_sites: int) -> np.ndarray:
    """Place a ``k``-site operator on ``positions`` of an ``n_sites`` chain, identity elsewhere.

    ``positions[j]`` is the chain site receiving factor ``j`` of ``op``.
    """
    check_dense_size(n_sites)
    k = n_sites_of(np.asarray(op))
    positions = [int(p) for p in positions]
    if len(positions) != k or len(set(positions)) != k:
        raise UsageError(f"need {k} distinct positions, got {positions}")
    for p in positions:
        if not 1 <= p <= n_sites:
            raise UsageError(f"position {p} outside 1..{n_sites}")
    rest = [s for s in range(1, n_sites + 1) if s not in positions]
    full = np.kron(np.asarray(op, dtype=complex), np.eye(2 ** len(rest), dtype=complex))
    return permute_sites(full, positions + rest)


def site_operator(label: str, site: int, n_sites: int) -> np.ndarray:
    return embed(PAULI_MATRICES[label], [site], n_sites)


# ---------------------------------------------------------------------------
# time evolution


@dataclass(frozen=True)
class SpectralDecomposition:
    """``H = V diag(e) V^†`` for a Hermitian ``H``; reused across a time grid."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def of(cls, h: np.ndarray, tol: float = 1e-10) -> "SpectralDecomposition":
        h = np.asarray(h, dtype=complex)
        n_sites_of(h)
        if not is_hermitian(h, tol):
            raise ValidationError("Hamiltonian is not Hermitian")
        e, v = np.linalg.eigh((h + h.conj().T) / 2)
        return cls(e, v)

    def unitary(self, t: float) -> np.ndarray:
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * t)) @ v.conj().T

    def evolve(self, rho: np.ndarray, t: float) -> np.ndarray:
        u = self.unitary(t)
        return u @ rho @ u.conj().T

    def reconstruction_error(self, h: np.ndarray) -> float:
        v = self.eigenvectors
        return float(np.max(np.abs((v * self.eigenvalues) @ v.conj().T - h)))


def evolve(h: np.ndarray, rho: np.ndarray, t: float) -> np.ndarray:
    """``U rho U^†`` with ``U = exp(-i H t)`` from the eigendecomposition of ``H``."""
    return SpectralDecomposition.of(h).evolve(np.asarray(rho, dtype=complex), t)


# ---------------------------------------------------------------------------
# partial trace


def partial_trace_dense(rho: np.ndarray, traced: Iterable[int]) -> np.ndarray:
    """Trace out the 1-based ``traced`` sites; the kept sites stay in increasing order."""
    rho = np.asarray(rho, dtype=complex)
    n = n_sites_of(rho)
    traced = sorted(set(int(s) for s in traced))
    for s in traced:
        if not 1 <= s <= n:
            raise UsageError(f"site {s} outside 1..{n}")
    kept = [s for s in range(1, n + 1) if s not in traced]
    t = rho.reshape([2] * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for s in traced:
        col[s - 1] = row[s - 1]
    out = "".join(row[s - 1] for s in kept) + "".join(col[s - 1] for s in kept)
    spec = "".join(row) + "".join(col) + "->" + out
    d = 2 ** len(kept)
    return np.einsum(spec, t).reshape(d, d)


def site_components(op: np.ndarray, site: int) -> tuple[np.ndarray, ...]:
    """Dense counterpart of ``decompose_at_site``: ``C_mu = Tr_site(sigma_mu op) / 2``."""
    n = n_sites_of(op)
    return tuple(
        partial_trace_dense(site_operator(lab, site, n) @ op, [site]) / 2 for lab in "IXYZ"
    )


# ---------------------------------------------------------------------------
# channels


def check_kraus(kraus: Sequence[np.ndarray], tol: float = KRAUS_TOL) -> float:
    """Return ``max |sum K^†K - I|`` or raise if it exceeds ``tol``."""
    if not len(kraus):
        raise ValidationError("empty Kraus set")
    d = kraus[0].shape[1]
    total = sum(k.conj().T @ k for k in kraus)
    err = float(np.max(np.abs(total - np.eye(d))))
    if err > tol:
        raise ValidationError(f"Kraus operators are not trace preserving (deviation {err:.2e})")
    return err


def apply_kraus(kraus: Sequence[np.ndarray], rho: np.ndarray, site: int) -> np.ndarray:
    """``sum_i K_i rho K_i^†`` with each single-qubit ``K_i`` acting on ``site``."""
    rho = np.asarray(rho, dtype=complex)
    n = n_sites_of(rho)
    if not 1 <= site <= n:
        raise UsageError(f"site {site} outside 1..{n}")
    check_kraus(kraus)
    a = site - 1
    t = rho.reshape([2] * (2 * n))
    out = np.zeros_like(t)
    for k in kraus:
        # act on row axis a and column axis n + a
        left = np.moveaxis(np.tensordot(k, t, axes=([1], [a])), 0, a)
        both = np.moveaxis(np.tensordot(left, k.conj(), axes=([n + a], [1])), -1, n + a)
        out += both
    return out.reshape(rho.shape)


def apply_channel(channel, rho: np.ndarray, site: int) -> np.ndarray:
    """Apply a :class:`~nosignal.model.QuantumChannel` (or bare Kraus list) to one site."""
    kraus = getattr(channel, "kraus", channel)
    return apply_kraus(kraus, rho, site)


# ---------------------------------------------------------------------------
# metrics and random objects


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``1/2 sum |eig(a - b)|``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise UsageError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2))))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def haar_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density_matrix(n_sites: int, rng: np.random.Generator, mix: float = 0.3) -> np.ndarray:
    """Haar-random pure state mixed with ``I/d`` at weight ``mix`` (``mix=0`` keeps it pure)."""
    if not 0.0 <= mix <= 1.0:
        raise UsageError("mix weight must lie in [0, 1]")
    d = 2 ** n_sites
    return (1 - mix) * haar_pure_state(d, rng) + mix * np.eye(d) / d


def random_hermitian(n_sites: int, rng: np.random.Generator) -> np.ndarray:
    d = 2 ** n_sites
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


# ---------------------------------------------------------------------------
# matrix dump


def matrix_to_csv(op: np.ndarray) -> str:
    """Row-major dump; each row holds ``re,im`` pairs for every column."""
    lines = []
    for row in np.asarray(op, dtype=complex):
        lines.append(",".join(f"{v.real:.17g},{v.imag:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def matrix_from_csv(text: str) -> np.ndarray:
    rows = []
    for line in text.strip().splitlines():
        vals = [float(v) for v in line.split(",")]
        rows.append([complex(r, i) for r, i in zip(vals[::2], vals[1::2])])
    return np.array(rows, dtype=complex)
