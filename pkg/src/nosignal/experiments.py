"""End-to-end no-signalling runs, counterexamples, the two-qubit baseline and finite-duration measurements."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dense
from .errors import ValidationError
from .model import (
    DEFAULT_GRID,
    ChainConfig,
    InitialStateSpec,
    QuantumChannel,
    build_hamiltonian,
    build_initial_state,
    channel_from_spec,
    random_channel,
    random_initial_spec,
)
from .pauli import PauliSum, decompose_at_site, from_dense, to_dense
from .series import DEFAULT_DEPTH, SeriesReport, check_traceless_series, compute_A_series

NO_SIGNAL_TOL = 1e-9
SIGNAL_THRESHOLD = 1e-3
BASELINE_TOL = 1e-12

VARIANTS = ("conforming", "rz_violation", "bN_field", "wrong_hamiltonian", "finite_delta")


@dataclass
class SignalReport:
    """Trace distance between two system-block trajectories on a time grid."""

    label: str
    time_grid: tuple[float, ...]
    distances: tuple[float, ...]
    no_signal_tol: float = NO_SIGNAL_TOL
    signal_threshold: float = SIGNAL_THRESHOLD
    seed: int | None = None
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def max_distance(self) -> float:
        return max(self.distances, default=0.0)

    @property
    def verdict(self) -> str:
        m = self.max_distance
        if m <= self.no_signal_tol:
            return "no-signal"
        if m > self.signal_threshold:
            return "signal"
        return "inconclusive"

    @property
    def first_signal_time(self) -> float | None:
        for t, d in zip(self.time_grid, self.distances):
            if d > self.signal_threshold:
                return t
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,distance\n")
        for t, d in zip(self.time_grid, self.distances):
            buf.write(f"{t:.17g},{d:.17g}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "label": self.label,
            "verdict": self.verdict,
            "max_distance": self.max_distance,
            "first_signal_time": self.first_signal_time,
            "no_signal_tol": self.no_signal_tol,
            "signal_threshold": self.signal_threshold,
            "seed": self.seed,
            "config": self.config,
            "details": self.details,
        }


def _config_echo(cfg: ChainConfig) -> dict:
    return {
        "N": cfg.n_sites,
        "n": cfg.cut,
        "couplings": list(cfg.couplings),
        "fields": list(cfg.fields),
        "grid_points": len(cfg.time_grid),
    }


def reduced_trajectories(h: np.ndarray, states: Sequence[np.ndarray], traced: Sequence[int],
                         times: Sequence[float]) -> list[list[np.ndarray]]:
    """Reduced states ``Tr_traced(U(t) rho U(t)^†)`` for each state and time, one eigendecomposition."""
    spec = dense.SpectralDecomposition.of(h)
    out = [[] for _ in states]
    for t in times:
        u = spec.unitary(t)
        for i, rho in enumerate(states):
            out[i].append(dense.partial_trace_dense(u @ rho @ u.conj().T, traced))
    return out


def _distance_series(h, rho, sigma, traced, times) -> tuple[float, ...]:
    a, b = reduced_trajectories(h, [rho, sigma], traced, times)
    return tuple(dense.trace_distance(x, y) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# the main protocol


def run_no_signaling(cfg: ChainConfig, spec: InitialStateSpec, channel: QuantumChannel, *,
                     tol: float = NO_SIGNAL_TOL, threshold: float = SIGNAL_THRESHOLD,
                     seed: int | None = None, enforce: bool = True) -> SignalReport:
    """Measure spin N at t=0 and compare system-block dynamics with and without the measurement.

    With ``enforce`` (the default) the configuration must satisfy the theorem's
    hypotheses: N >= 3, cut < N, no local fields and ``r_z = 0``.
    """
    if enforce:
        cfg.check_theorem_scope()
        if not spec.conforming:
            raise ValidationError(f"r_z = {spec.r_z} puts spin n outside the Bloch xy-plane")
    rho = build_initial_state(spec, cfg)
    sigma = dense.apply_channel(channel, rho, cfg.n_sites)
    h = to_dense(build_hamiltonian(cfg))
    traced = sorted(cfg.parts.environment)
    dist = _distance_series(h, rho, sigma, traced, cfg.time_grid)
    return SignalReport(
        "no_signaling", cfg.time_grid, dist, tol, threshold, seed, _config_echo(cfg),
        {"channel": channel.label, "bloch": [spec.r_x, spec.r_y, spec.r_z]},
    )


def symbolic_check(cfg: ChainConfig, spec: InitialStateSpec, channel: QuantumChannel,
                   depth: int = DEFAULT_DEPTH) -> SeriesReport:
    """Series check on ``R = sigma_SE - rho_SE`` for the same setup as :func:`run_no_signaling`."""
    rho = build_initial_state(spec, cfg)
    sigma = dense.apply_channel(channel, rho, cfg.n_sites)
    r = from_dense(sigma - rho)
    series = compute_A_series(r, build_hamiltonian(cfg), depth)
    return check_traceless_series(series, cfg.parts.environment)


def draw_conforming_case(n_sites: int, cut: int, seed: int,
                         time_grid: Sequence[float] = DEFAULT_GRID, mix: float = 0.3):
    """Seeded random ``(cfg, spec, channel)`` inside the theorem's hypotheses."""
    rng = np.random.default_rng(seed)
    cfg = ChainConfig(n_sites, cut, time_grid=tuple(time_grid))
    spec = random_initial_spec(cfg, rng, mix=mix)
    channel = random_channel(int(rng.integers(2 ** 32)), int(rng.choice([2, 4])))
    return cfg, spec, channel


def sweep_cell(n_sites: int, cut: int, seed: int, time_grid: Sequence[float] = DEFAULT_GRID,
               tol: float = NO_SIGNAL_TOL) -> dict:
    cfg, spec, channel = draw_conforming_case(n_sites, cut, seed, time_grid)
    rep = run_no_signaling(cfg, spec, channel, tol=tol, seed=seed)
    return {"N": n_sites, "n": cut, "seed": seed, "channel": channel.label,
            "max_distance": rep.max_distance, "verdict": rep.verdict}


# ---------------------------------------------------------------------------
# counterexamples


@dataclass(frozen=True)
class ScenarioSpec:
    """A run with one hypothesis deliberately broken.

    ``channel_site`` and ``field_site`` default to spin N. ``bloch`` defaults to
    ``(0, 0, 0.8)`` for ``rz_violation`` and to a random xy-plane point otherwise.
    """

    variant: str
    n_sites: int = 3
    cut: int = 2
    bloch: tuple[float, ...] | None = None
    b_field: float = 1.0
    field_site: int | None = None
    delta: float = 0.0
    channel: object = "projective_x"
    channel_site: int | None = None
    seed: int = 0
    time_grid: tuple[float, ...] = DEFAULT_GRID
    state_mix: float = 0.3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown scenario {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.delta < 0:
            raise ValidationError("delta must be non-negative")
        for s in (self.field_site, self.channel_site):
            if s is not None and not 1 <= s <= self.n_sites:
                raise ValidationError(f"site {s} outside 1..{self.n_sites}")


def heisenberg_hamiltonian(n_sites: int, coupling: float = 1.0) -> PauliSum:
    """``sum_j (XX + YY + ZZ)`` on neighbouring sites; outside the theorem's family."""
    h = PauliSum.zero(n_sites)
    for j in range(1, n_sites):
        for lab in "XYZ":
            h = h + PauliSum.single(n_sites, {j: lab, j + 1: lab}, coupling)
    return h


def random_product_state(n_sites: int, rng: np.random.Generator) -> np.ndarray:
    """Product of independent random single-qubit mixed states."""
    return dense.kron(*(dense.random_density_matrix(1, rng, mix=rng.uniform(0, 0.5))
                        for _ in range(n_sites)))


def run_counterexample(scenario: ScenarioSpec) -> SignalReport:
    sc = scenario
    rng = np.random.default_rng(sc.seed)
    cfg = ChainConfig(sc.n_sites, sc.cut, time_grid=sc.time_grid)
    traced = sorted(cfg.parts.environment)
    channel_site = sc.channel_site or sc.n_sites
    details: dict = {"variant": sc.variant}

    if sc.variant == "bN_field":
        # two Hamiltonians, no measurement
        field_site = sc.field_site or sc.n_sites
        fields = [0.0] * sc.n_sites
        fields[field_site - 1] = sc.b_field
        h0 = to_dense(build_hamiltonian(cfg))
        h1 = to_dense(build_hamiltonian(ChainConfig(sc.n_sites, sc.cut, fields=fields)))
        rho = random_product_state(sc.n_sites, rng)
        a = reduced_trajectories(h0, [rho], traced, sc.time_grid)[0]
        b = reduced_trajectories(h1, [rho], traced, sc.time_grid)[0]
        dist = tuple(dense.trace_distance(x, y) for x, y in zip(a, b))
        details.update(field_site=field_site, b_field=sc.b_field)
        return SignalReport("counterexample", sc.time_grid, dist, seed=sc.seed,
                            config=_config_echo(cfg), details=details)

    default_bloch = (0.0, 0.0, 0.8) if sc.variant == "rz_violation" else None
    spec = random_initial_spec(cfg, rng, mix=sc.state_mix, bloch=sc.bloch or default_bloch)
    channel = channel_from_spec(sc.channel)
    details.update(channel=channel.label, channel_site=channel_site,
                   bloch=[spec.r_x, spec.r_y, spec.r_z])

    if sc.variant == "finite_delta":
        rep = run_finite_duration(cfg, spec, channel, sc.delta, back_evolve=False, enforce=False)
        rep.seed = sc.seed
        rep.details.update(details)
        return rep

    rho = build_initial_state(spec, cfg)
    sigma = dense.apply_channel(channel, rho, channel_site)
    if sc.variant == "wrong_hamiltonian":
        h = to_dense(heisenberg_hamiltonian(sc.n_sites))
        details["hamiltonian"] = "heisenberg"
    else:
        h = to_dense(build_hamiltonian(cfg))
    dist = _distance_series(h, rho, sigma, traced, sc.time_grid)
    return SignalReport("counterexample", sc.time_grid, dist, seed=sc.seed,
                        config=_config_echo(cfg), details=details)


# ---------------------------------------------------------------------------
# two isolated qubits


def run_two_qubit_baseline(rho_1n: np.ndarray, channel: QuantumChannel, *,
                           tol: float = BASELINE_TOL, seed: int | None = None) -> SignalReport:
    """Reduced state of qubit 1 before and after a channel on qubit 2, no Hamiltonian."""
    rho_1n = dense.validate_state(rho_1n, "rho_1N")
    if rho_1n.shape != (4, 4):
        raise ValidationError("baseline needs a two-qubit state")
    after = dense.apply_channel(channel, rho_1n, 2)
    d = dense.trace_distance(dense.partial_trace_dense(rho_1n, [2]),
                             dense.partial_trace_dense(after, [2]))
    return SignalReport("baseline", (0.0,), (d,), tol, SIGNAL_THRESHOLD, seed,
                        {"N": 2}, {"channel": channel.label})


# ---------------------------------------------------------------------------
# measurement lasting from 0 to delta


def run_finite_duration(cfg: ChainConfig, spec: InitialStateSpec, channel: QuantumChannel,
                        delta: float, *, back_evolve: bool = True, enforce: bool = True,
                        tol: float = NO_SIGNAL_TOL, threshold: float = SIGNAL_THRESHOLD,
                        structure_tol: float = 1e-12) -> SignalReport:
    """Compare ``M_N(rho(delta))`` against ``rho(delta)`` for times ``delta + tau``.

    ``rho(delta) = U(delta) omega U(delta)^†``. With ``back_evolve`` the initial state
    is ``omega = U(delta)^† rho_conf U(delta)``, so ``rho(delta)`` is the conforming
    state built from ``spec``; otherwise ``omega = rho_conf``. The report's details
    record whether ``rho(delta)`` has no Z component at the cut and how far
    ``U(delta)`` is from the identity.
    """
    if delta < 0:
        raise ValidationError("delta must be non-negative")
    if enforce:
        cfg.check_theorem_scope()
        if not spec.conforming:
            raise ValidationError(f"r_z = {spec.r_z} puts spin n outside the Bloch xy-plane")
    h = to_dense(build_hamiltonian(cfg))
    eig = dense.SpectralDecomposition.of(h)
    rho_conf = build_initial_state(spec, cfg)
    omega = eig.evolve(rho_conf, -delta) if back_evolve else rho_conf
    rho_delta = eig.evolve(omega, delta)
    sigma = dense.apply_channel(channel, rho_delta, cfg.n_sites)
    traced = sorted(cfg.parts.environment)
    dist = _distance_series(h, rho_delta, sigma, traced, cfg.time_grid)

    c3 = decompose_at_site(from_dense(rho_delta), cfg.cut)[3]
    u_dev = float(np.max(np.abs(np.exp(-1j * eig.eigenvalues * delta) - 1.0)))
    details = {
        "delta": delta,
        "back_evolved": back_evolve,
        "cut_z_component": c3.max_abs_coeff(),
        "cut_z_free": c3.max_abs_coeff() <= structure_tol,
        "unitary_deviation": u_dev,
        "channel": channel.label,
    }
    times = tuple(delta + t for t in cfg.time_grid)
    return SignalReport("finite_duration", times, dist, tol, threshold, None, _config_echo(cfg), details)
