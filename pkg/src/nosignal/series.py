"""Symbolic checks on the nested-commutator series ``A_{k+1} = [A_k, H]``.

Every verdict in this module is structural: an operator "vanishes" when its
canonical PauliSum has no terms, never because a norm fell below a threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from . import dense
from .errors import ResourceError, UsageError
from .model import split_at_spin_n
from .pauli import PauliSum, commutator, decompose_at_site, partial_trace_pauli, site_set, to_dense

MAX_TERMS = 10 ** 6
DEFAULT_DEPTH = 12


def compute_A_series(r: PauliSum, h: PauliSum, depth: int = DEFAULT_DEPTH,
                     max_terms: int = MAX_TERMS) -> list[PauliSum]:
    """``[A_0, ..., A_depth]`` with ``A_0 = r`` and ``A_{k+1} = [A_k, h]``."""
    if r.n != h.n:
        raise UsageError(f"R acts on {r.n} sites but H on {h.n}")
    if depth < 0:
        raise UsageError("depth must be non-negative")
    series = [r]
    for k in range(depth):
        nxt = commutator(series[-1], h)
        if len(nxt) > max_terms:
            raise ResourceError(
                f"A_{k + 1} has {len(nxt)} terms, above the cap of {max_terms}", reached=k
            )
        series.append(nxt)
    return series


def _stripped_tilde(env_tilde: Iterable[int], cut: int) -> list[int]:
    # site labels after removing the cut from the chain
    return [s - 1 for s in env_tilde]


@dataclass(frozen=True)
class OrderRecord:
    k: int
    terms: int
    tre_zero: bool
    c0_traceless: bool
    c3_traceless: bool
    max_residual_coeff: float


@dataclass
class SeriesReport:
    depth: int
    cut: int
    environment: tuple[int, ...]
    orders: list[OrderRecord] = field(default_factory=list)

    @property
    def all_traceless(self) -> bool:
        return all(o.tre_zero for o in self.orders)

    @property
    def lemma2_flags_hold(self) -> bool:
        return all(o.c0_traceless and o.c3_traceless for o in self.orders)

    @property
    def first_failure(self) -> int | None:
        return next((o.k for o in self.orders if not o.tre_zero), None)

    def induction_holds(self) -> bool:
        """Flags at order k imply flags at order k+1, for every consecutive pair."""
        for a, b in zip(self.orders, self.orders[1:]):
            if a.c0_traceless and a.c3_traceless and not (b.c0_traceless and b.c3_traceless):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "cut": self.cut,
            "environment": list(self.environment),
            "all_traceless": self.all_traceless,
            "lemma2_flags_hold": self.lemma2_flags_hold,
            "induction_holds": self.induction_holds(),
            "first_failure": self.first_failure,
            "orders": [asdict(o) for o in self.orders],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        rows = ["k terms trE_zero c0_zero c3_zero"]
        for o in self.orders:
            rows.append(
                f"{o.k} {o.terms} {str(o.tre_zero).lower()} "
                f"{str(o.c0_traceless).lower()} {str(o.c3_traceless).lower()}"
            )
        return "\n".join(rows) + "\n"


def check_traceless_series(series: list[PauliSum], environment: Iterable[int]) -> SeriesReport:
    """Per order: is ``Tr_E A_k`` empty, and are ``Tr_Ẽ C0``, ``Tr_Ẽ C3`` empty at the cut.

    The cut is the smallest environment site; ``Ẽ`` is the rest of the environment.
    """
    if not series:
        raise UsageError("empty series")
    n = series[0].n
    env = sorted(site_set(environment, n))
    if not env:
        raise UsageError("environment must be non-empty")
    cut = env[0]
    tilde = _stripped_tilde(env[1:], cut)
    report = SeriesReport(len(series) - 1, cut, tuple(env))
    for k, a in enumerate(series):
        reduced = partial_trace_pauli(a, env)
        c0, _, _, c3 = decompose_at_site(a, cut)
        report.orders.append(OrderRecord(
            k,
            len(a),
            reduced.is_zero(),
            partial_trace_pauli(c0, tilde).is_zero(),
            partial_trace_pauli(c3, tilde).is_zero(),
            reduced.max_abs_coeff(),
        ))
    return report


@dataclass(frozen=True)
class Lemma2Step:
    routes_equal: bool
    hypothesis_holds: bool
    d0_traceless: bool
    d3_traceless: bool
    d3_formula: PauliSum
    d3_direct: PauliSum

    @property
    def ok(self) -> bool:
        """Route equality, and the conclusion whenever the hypothesis holds."""
        return self.routes_equal and (not self.hypothesis_holds or (self.d0_traceless and self.d3_traceless))


def check_lemma2_step(a_k: PauliSum, h: PauliSum, cut: int) -> Lemma2Step:
    """Compare the closed form for the ``Z``-component at the cut with the direct commutator.

    Closed form: ``D3 = [C0, J_l Z_{n-1} + J_r Z_{n+1}] + [C3, H̃]`` where the ``C``
    are the components of ``a_k`` at the cut. Raises :class:`StructureError` when
    ``h`` does not split around the cut.
    """
    left, right, rest = split_at_spin_n(h, cut)
    c0, _, _, c3 = decompose_at_site(a_k, cut)
    # bond coefficients come along: decompose(J Z_{n-1} Z_n) gives C3 = J Z_{n-1}
    neighbours = decompose_at_site(left, cut)[3] + decompose_at_site(right, cut)[3]
    h_tilde = decompose_at_site(rest, cut)[0]
    d3_formula = commutator(c0, neighbours) + commutator(c3, h_tilde)

    d0, _, _, d3_direct = decompose_at_site(commutator(a_k, h), cut)
    tilde = _stripped_tilde(range(cut + 1, h.n + 1), cut)
    return Lemma2Step(
        routes_equal=d3_formula == d3_direct,
        hypothesis_holds=partial_trace_pauli(c0, tilde).is_zero() and partial_trace_pauli(c3, tilde).is_zero(),
        d0_traceless=partial_trace_pauli(d0, tilde).is_zero(),
        d3_traceless=partial_trace_pauli(d3_direct, tilde).is_zero(),
        d3_formula=d3_formula,
        d3_direct=d3_direct,
    )


@dataclass(frozen=True)
class Lemma1Result:
    left_product: bool
    right_product: bool
    env_commutator: bool

    @property
    def all(self) -> bool:
        return self.left_product and self.right_product and self.env_commutator


def verify_lemma1(a: PauliSum, h_s: PauliSum, h_e: PauliSum, environment: Iterable[int]) -> Lemma1Result:
    """Check ``Tr_E(A H_S) = Tr_E(H_S A) = Tr_E([A, H_E]) = 0`` structurally.

    ``h_s`` and ``h_e`` are full-chain PauliSums supported on S and E respectively.
    Raises :class:`UsageError` if ``Tr_E(A) != 0``.
    """
    n = a.n
    env = site_set(environment, n)
    system = frozenset(range(1, n + 1)) - env
    for op, name in ((h_s, "H_S"), (h_e, "H_E")):
        if op.n != n:
            raise UsageError(f"{name} acts on {op.n} sites, expected {n}")
    if not h_s.support() <= system:
        raise UsageError("H_S must act trivially on E")
    if not h_e.support() <= env:
        raise UsageError("H_E must act trivially on S")
    if not partial_trace_pauli(a, env).is_zero():
        raise UsageError("precondition Tr_E(A) = 0 is violated")
    return Lemma1Result(
        partial_trace_pauli(a * h_s, env).is_zero(),
        partial_trace_pauli(h_s * a, env).is_zero(),
        partial_trace_pauli(commutator(a, h_e), env).is_zero(),
    )


def lemma1_residuals_dense(a: np.ndarray, h_s: np.ndarray, h_e: np.ndarray,
                           environment: Iterable[int]) -> tuple[float, float, float]:
    """Dense route for the same three identities; returns max-entry residuals."""
    env = list(environment)
    res = (
        dense.partial_trace_dense(a @ h_s, env),
        dense.partial_trace_dense(h_s @ a, env),
        dense.partial_trace_dense(a @ h_e - h_e @ a, env),
    )
    return tuple(float(np.max(np.abs(r))) for r in res)  # type: ignore[return-value]


def bch_partial_sum(r: PauliSum, h: PauliSum, t: float, depth: int,
                    max_terms: int = MAX_TERMS) -> np.ndarray:
    """Truncated ``e^{-T} R e^{T}`` with ``T = iHt``, densified.

    ``e^{-T} R e^{T} = sum_k (1/k!) [..[R, T], .., T] = sum_k (i t)^k / k! A_k``, which
    equals ``U R U^†`` for ``U = exp(-iHt)``. Depth around 20 is ample for ``t·|H| <= 2``.
    """
    series = compute_A_series(r, h, depth, max_terms)
    total = PauliSum.zero(r.n)
    for k, a in enumerate(series):
        total = total + a * ((1j * t) ** k / math.factorial(k))
    return to_dense(total)
