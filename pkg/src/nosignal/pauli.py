"""Exact algebra over sums of Pauli strings.

A Pauli string on ``n`` sites is stored as two integer bitmasks ``(x, z)``
plus a complex coefficient. Site ``i`` (1-based, as everywhere in the public
interface) owns bit ``n - i``, which makes the masks line up with computational
basis indices when site 1 is the most significant Kronecker factor.

Per site the labels are I=(0,0), X=(1,0), Z=(0,1), Y=(1,1). Labels always
denote the Hermitian matrices, so ``Y`` is the usual ``[[0, -i], [i, 0]]``.

Structural facts (two strings commute, a traced site carries a non-identity
label) are decided on the masks alone and never involve floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import UsageError

PRUNE_EPS = 1e-14

_LABEL_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LABEL = {v: k for k, v in _LABEL_BITS.items()}
_LABEL_INDEX = {"I": 0, "X": 1, "Y": 2, "Z": 3}


def _rot(c: complex, k: int) -> complex:
    """Multiply ``c`` by ``i**k`` without rounding."""
    k %= 4
    if k == 0:
        return c
    if k == 1:
        return complex(-c.imag, c.real)
    if k == 2:
        return -c
    return complex(c.imag, -c.real)


def _phase_power(x1: int, z1: int, x2: int, z2: int) -> int:
    # P(x,z) = i^{x.z} X^x Z^z, so P1 P2 = i^{x1.z1 + x2.z2 + 2 z1.x2 - x3.z3} P3
    x3, z3 = x1 ^ x2, z1 ^ z2
    return (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        + 2 * (z1 & x2).bit_count()
        - (x3 & z3).bit_count()
    ) % 4


def _anticommutes(x1: int, z1: int, x2: int, z2: int) -> bool:
    return bool(((x1 & z2).bit_count() + (z1 & x2).bit_count()) & 1)


def _site_bit(site: int, n: int) -> int:
    if not 1 <= site <= n:
        raise UsageError(f"site {site} outside 1..{n}")
    return 1 << (n - site)


def _label_of(x: int, z: int, n: int) -> str:
    return "".join(
        _BITS_LABEL[((x >> (n - i)) & 1, (z >> (n - i)) & 1)] for i in range(1, n + 1)
    )


def _masks_of(label: str) -> tuple[int, int]:
    x = z = 0
    for ch in label:
        try:
            bx, bz = _LABEL_BITS[ch]
        except KeyError:
            raise UsageError(f"invalid Pauli label character {ch!r} in {label!r}") from None
        x = (x << 1) | bx
        z = (z << 1) | bz
    return x, z


# ---------------------------------------------------------------------------
# site sets


def site_set(sites: Iterable[int], n: int) -> frozenset[int]:
    """Validate a collection of 1-based site labels against a chain of ``n`` sites."""
    out = frozenset(int(s) for s in sites)
    for s in out:
        if not 1 <= s <= n:
            raise UsageError(f"site {s} outside 1..{n}")
    return out


class Bipartition(NamedTuple):
    """The S | n | Ẽ split of a chain: system 1..cut-1, environment cut..N."""

    n_sites: int
    cut: int
    system: frozenset[int]
    environment: frozenset[int]
    env_tilde: frozenset[int]


def bipartition(n_sites: int, cut: int) -> Bipartition:
    if not 2 <= cut <= n_sites:
        raise UsageError(f"cut n={cut} must satisfy 2 <= n <= N={n_sites}")
    return Bipartition(
        n_sites,
        cut,
        frozenset(range(1, cut)),
        frozenset(range(cut, n_sites + 1)),
        frozenset(range(cut + 1, n_sites + 1)),
    )


def _mask(sites: Iterable[int], n: int) -> int:
    m = 0
    for s in sites:
        m |= _site_bit(s, n)
    return m


# ---------------------------------------------------------------------------
# strings


@dataclass(frozen=True)
class PauliString:
    """A single coefficient times a tensor product of I/X/Y/Z."""

    n: int
    x: int
    z: int
    coeff: complex = 1.0

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliString":
        x, z = _masks_of(label)
        return cls(len(label), x, z, complex(coeff))

    @property
    def label(self) -> str:
        return _label_of(self.x, self.z, self.n)

    def key(self) -> tuple[int, int]:
        return (self.x, self.z)

    def commutes_with(self, other: "PauliString") -> bool:
        _check_sizes(self.n, other.n)
        return not _anticommutes(self.x, self.z, other.x, other.z)

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return pauli_mul(self, other)
        return PauliString(self.n, self.x, self.z, self.coeff * other)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"PauliString({self.label!r}, {self.coeff!r})"


def _check_sizes(a: int, b: int) -> None:
    if a != b:
        raise UsageError(f"site count mismatch: {a} vs {b}")


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Product of two strings; the ±1/±i phase is folded into the coefficient."""
    _check_sizes(a.n, b.n)
    k = _phase_power(a.x, a.z, b.x, b.z)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, _rot(complex(a.coeff) * complex(b.coeff), k))


# ---------------------------------------------------------------------------
# sums


class PauliSum:
    """Canonical linear combination of Pauli strings on ``n`` sites.

    Like terms are merged on construction and coefficients with modulus below
    ``prune`` are dropped. Instances are treated as immutable.
    """

    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Mapping[tuple[int, int], complex] | None = None,
                 *, prune: float = PRUNE_EPS):
        if n < 0:
            raise UsageError("site count must be non-negative")
        self.n = int(n)
        items = {}
        if terms:
            for key in sorted(terms, key=lambda k: _label_of(k[0], k[1], n)):
                c = complex(terms[key])
                if abs(c) >= prune and c == c:
                    items[key] = c
                elif c != c:
                    raise UsageError("NaN coefficient")
        self._terms = MappingProxyType(items)

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "PauliSum":
        return cls(n)

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n, {(0, 0): coeff})

    @classmethod
    def from_strings(cls, strings: Iterable[PauliString], n: int | None = None,
                     *, prune: float = PRUNE_EPS) -> "PauliSum":
        acc: dict[tuple[int, int], complex] = {}
        for s in strings:
            if n is None:
                n = s.n
            _check_sizes(n, s.n)
            acc[s.key()] = acc.get(s.key(), 0j) + complex(s.coeff)
        if n is None:
            raise UsageError("cannot infer site count from an empty string list")
        return cls(n, acc, prune=prune)

    @classmethod
    def from_labels(cls, labels: Mapping[str, complex] | Iterable[tuple[str, complex]],
                    n: int | None = None) -> "PauliSum":
        """Build from ``{"ZZI": 1.0, ...}`` or an iterable of ``(label, coeff)`` pairs."""
        pairs = labels.items() if isinstance(labels, Mapping) else labels
        return cls.from_strings((PauliString.from_label(lab, c) for lab, c in pairs), n)

    @classmethod
    def single(cls, n: int, ops: Mapping[int, str], coeff: complex = 1.0) -> "PauliSum":
        """One string with the given 1-based site -> label assignments, identity elsewhere."""
        chars = ["I"] * n
        for site, lab in ops.items():
            _site_bit(site, n)
            if lab not in _LABEL_BITS:
                raise UsageError(f"invalid Pauli label {lab!r}")
            chars[site - 1] = lab
        return cls.from_labels({"".join(chars): coeff}, n)

    # access -------------------------------------------------------------

    @property
    def terms(self) -> Mapping[tuple[int, int], complex]:
        return self._terms

    def strings(self) -> list[PauliString]:
        return [PauliString(self.n, x, z, c) for (x, z), c in self._terms.items()]

    def __iter__(self):
        return iter(self.strings())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def to_dict(self) -> dict[str, complex]:
        return {_label_of(x, z, self.n): c for (x, z), c in self._terms.items()}

    def coeff(self, label: str) -> complex:
        if len(label) != self.n:
            raise UsageError(f"label length {len(label)} != {self.n}")
        return self._terms.get(_masks_of(label), 0j)

    def support(self) -> frozenset[int]:
        """Sites on which at least one term acts non-trivially."""
        m = 0
        for x, z in self._terms:
            m |= x | z
        return frozenset(i for i in range(1, self.n + 1) if m >> (self.n - i) & 1)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def trace(self) -> complex:
        """Full trace: 2^n times the identity coefficient."""
        return self._terms.get((0, 0), 0j) * 2 ** self.n

    def dagger(self) -> "PauliSum":
        return PauliSum(self.n, {k: c.conjugate() for k, c in self._terms.items()})

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        _check_sizes(self.n, other.n)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= atol for k in keys)

    # arithmetic ---------------------------------------------------------

    def _combine(self, other: "PauliSum", sign: int) -> "PauliSum":
        _check_sizes(self.n, other.n)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0j) + (c if sign > 0 else -c)
        return PauliSum(self.n, acc)

    def __add__(self, other):
        if isinstance(other, PauliSum):
            return self._combine(other, 1)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, PauliSum):
            return self._combine(other, -1)
        return NotImplemented

    def __neg__(self):
        return PauliSum(self.n, {k: -c for k, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return _product(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n, {k: c * other for k, c in self._terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        return self * (1.0 / other)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n == other.n and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self.n, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"PauliSum(n={self.n}, 0)"
        body = " + ".join(f"({c:g})*{lab}" for lab, c in self.to_dict().items())
        return f"PauliSum(n={self.n}, {body})"


def _product(a: PauliSum, b: PauliSum) -> PauliSum:
    _check_sizes(a.n, b.n)
    acc: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a.terms.items():
        for (x2, z2), c2 in b.terms.items():
            key = (x1 ^ x2, z1 ^ z2)
            acc[key] = acc.get(key, 0j) + _rot(c1 * c2, _phase_power(x1, z1, x2, z2))
    return PauliSum(a.n, acc)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``[a, b] = ab - ba``; commuting string pairs are skipped without arithmetic."""
    _check_sizes(a.n, b.n)
    acc: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a.terms.items():
        for (x2, z2), c2 in b.terms.items():
            if not _anticommutes(x1, z1, x2, z2):
                continue
            key = (x1 ^ x2, z1 ^ z2)
            term = _rot(2 * (c1 * c2), _phase_power(x1, z1, x2, z2))
            acc[key] = acc.get(key, 0j) + term
    return PauliSum(a.n, acc)


# ---------------------------------------------------------------------------
# partial trace and site decomposition


def _compress(mask: int, n: int, kept: list[int]) -> int:
    m = len(kept)
    out = 0
    for j, site in enumerate(kept, start=1):
        if mask >> (n - site) & 1:
            out |= 1 << (m - j)
    return out


def partial_trace_pauli(op: PauliSum, traced: Iterable[int]) -> PauliSum:
    """Trace out ``traced`` sites.

    A term survives only if it is the identity on every traced site; survivors
    are scaled by ``2**len(traced)`` and relabelled on the kept sites (in
    increasing site order).
    """
    n = op.n
    traced = site_set(traced, n)
    tmask = _mask(traced, n)
    kept = [i for i in range(1, n + 1) if i not in traced]
    scale = 2 ** len(traced)
    acc = {}
    for (x, z), c in op.terms.items():
        if (x | z) & tmask:
            continue
        acc[(_compress(x, n, kept), _compress(z, n, kept))] = c * scale
    return PauliSum(len(kept), acc)


def decompose_at_site(op: PauliSum, site: int) -> tuple[PauliSum, PauliSum, PauliSum, PauliSum]:
    """Split ``op = C0⊗I + C1⊗X + C2⊗Y + C3⊗Z`` with the Pauli factor at ``site``.

    Each ``C`` lives on the other ``n - 1`` sites, in increasing site order.
    """
    n = op.n
    bit = _site_bit(site, n)
    kept = [i for i in range(1, n + 1) if i != site]
    parts: list[dict] = [{}, {}, {}, {}]
    for (x, z), c in op.terms.items():
        mu = _LABEL_INDEX[_BITS_LABEL[(int(bool(x & bit)), int(bool(z & bit)))]]
        parts[mu][(_compress(x, n, kept), _compress(z, n, kept))] = c
    return tuple(PauliSum(n - 1, p) for p in parts)  # type: ignore[return-value]


def insert_site(op: PauliSum, site: int, label: str = "I") -> PauliSum:
    """Tensor a single-site Pauli ``label`` into position ``site`` of a larger chain."""
    n = op.n + 1
    if not 1 <= site <= n:
        raise UsageError(f"site {site} outside 1..{n}")
    bx, bz = _LABEL_BITS[label]
    low = n - site  # bits strictly below the new site
    acc = {}
    for (x, z), c in op.terms.items():
        nx = ((x >> low) << (low + 1)) | (bx << low) | (x & ((1 << low) - 1))
        nz = ((z >> low) << (low + 1)) | (bz << low) | (z & ((1 << low) - 1))
        acc[(nx, nz)] = c
    return PauliSum(n, acc)


def assemble_at_site(parts, site: int) -> PauliSum:
    """Inverse of :func:`decompose_at_site`."""
    c0, c1, c2, c3 = parts
    out = PauliSum.zero(c0.n + 1)
    for part, lab in zip((c0, c1, c2, c3), "IXYZ"):
        out = out + insert_site(part, site, lab)
    return out


def is_supported_on(op: PauliSum, sites: Iterable[int]) -> bool:
    return op.support() <= site_set(sites, op.n)


# ---------------------------------------------------------------------------
# dense bridge


def to_dense(op: PauliSum, n: int | None = None) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix, site 1 as the most significant Kronecker factor."""
    from .dense import check_dense_size

    if n is None:
        n = op.n
    _check_sizes(op.n, n)
    check_dense_size(n)
    dim = 2 ** n
    cols = np.arange(dim, dtype=np.int64)
    out = np.zeros((dim, dim), dtype=complex)
    for (x, z), c in op.terms.items():
        signs = 1 - 2 * (np.bitwise_count(cols & z) & 1).astype(np.int64)
        out[cols ^ x, cols] += _rot(c, (x & z).bit_count()) * signs
    return out


def from_dense(mat: np.ndarray, *, prune: float = PRUNE_EPS) -> PauliSum:
    """Expand a ``2^n x 2^n`` matrix in the Pauli basis (coefficients ``Tr(P M) / 2^n``)."""
    mat = np.asarray(mat, dtype=complex)
    dim = mat.shape[0]
    if mat.shape != (dim, dim) or dim & (dim - 1):
        raise UsageError(f"expected a square matrix with power-of-two size, got {mat.shape}")
    n = dim.bit_length() - 1
    rows = np.arange(dim, dtype=np.int64)
    # walsh[z, b] = (-1)^{popcount(z & b)}
    walsh = 1 - 2 * (np.bitwise_count(rows[:, None] & rows[None, :]) & 1).astype(np.int64)
    acc = {}
    for x in range(dim):
        # Tr(P M) = i^{x.z} sum_b (-1)^{z.b} M[b, b ^ x]
        v = mat[rows, rows ^ x]
        sums = walsh @ v / dim
        for z in np.flatnonzero(np.abs(sums) >= prune):
            z = int(z)
            acc[(x, z)] = _rot(complex(sums[z]), (x & z).bit_count())
    return PauliSum(n, acc, prune=prune)


# ---------------------------------------------------------------------------
# text format


def dumps(op: PauliSum) -> str:
    """One ``<re> <im> <label>`` line per term, 17 significant digits."""
    lines = [f"{c.real:.17g} {c.imag:.17g} {lab}" for lab, c in op.to_dict().items()]
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str, n: int | None = None) -> PauliSum:
    """Parse :func:`dumps` output. Blank lines and ``#`` comments are ignored."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise UsageError(f"line {lineno}: expected '<re> <im> <label>', got {raw!r}")
        try:
            c = complex(float(fields[0]), float(fields[1]))
        except ValueError:
            raise UsageError(f"line {lineno}: bad coefficient in {raw!r}") from None
        label = fields[2]
        if n is None:
            n = len(label)
        if len(label) != n:
            raise UsageError(f"line {lineno}: label {label!r} has length {len(label)}, expected {n}")
        pairs.append((label, c))
    if n is None:
        raise UsageError("empty operator file and no site count given")
    # merging is exact here only when labels are unique, which dumps() guarantees
    return PauliSum.from_labels(pairs, n)
