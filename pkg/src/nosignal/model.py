"""Concrete chain objects: Hamiltonian, bipartition, initial states and measurement channels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dense
from .errors import StructureError, UsageError, ValidationError
from .pauli import PauliSum, bipartition, decompose_at_site

DEFAULT_GRID = tuple(float(t) for t in np.linspace(0.0, 10.0, 101))


def _per_item(value, count: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),) * count
    vals = tuple(float(v) for v in value)
    if len(vals) != count:
        raise ValidationError(f"{name} needs {count} entries, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class ChainConfig:
    """Chain of ``n_sites`` qubits cut into system ``1..cut-1`` and environment ``cut..N``.

    ``couplings[j-1]`` multiplies ``Z_j Z_{j+1}`` and ``fields[j-1]`` multiplies ``X_j``.
    Scalars are broadcast.
    """

    n_sites: int
    cut: int
    couplings: tuple[float, ...] | float = 1.0
    fields: tuple[float, ...] | float = 0.0
    time_grid: tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValidationError(f"N={self.n_sites}: a chain needs at least 2 sites")
        if not 2 <= self.cut <= self.n_sites:
            raise ValidationError(f"cut n={self.cut} must satisfy 2 <= n <= N={self.n_sites}")
        object.__setattr__(self, "couplings", _per_item(self.couplings, self.n_sites - 1, "couplings"))
        object.__setattr__(self, "fields", _per_item(self.fields, self.n_sites, "fields"))
        grid = tuple(float(t) for t in self.time_grid)
        if any(t < 0 for t in grid) or list(grid) != sorted(grid):
            raise ValidationError("time grid must be sorted and non-negative")
        object.__setattr__(self, "time_grid", grid)

    @property
    def parts(self):
        return bipartition(self.n_sites, self.cut)

    @property
    def field_free(self) -> bool:
        return not any(self.fields)

    def check_theorem_scope(self) -> None:
        """Raise unless the configuration is inside the no-signalling theorem's hypotheses."""
        if self.n_sites < 3:
            raise ValidationError(
                f"N={self.n_sites}: the no-signalling construction needs N >= 3 "
                "(S = spin 1, n = 2, Ẽ = spin 3 at minimum)"
            )
        if self.cut >= self.n_sites:
            raise ValidationError(f"cut n={self.cut} must be < N={self.n_sites} so spin N lies in Ẽ")
        if not self.field_free:
            raise ValidationError("all local fields b_j must vanish")


@dataclass(frozen=True, eq=False)
class InitialStateSpec:
    """``rho_{SẼ}`` on the N-1 sites other than the cut, plus the Bloch vector of spin ``n``."""

    rho_s_tilde_e: np.ndarray
    r_x: float = 0.0
    r_y: float = 0.0
    r_z: float = 0.0

    def __post_init__(self):
        if self.r_x ** 2 + self.r_y ** 2 + self.r_z ** 2 > 1 + 1e-12:
            raise ValidationError(f"Bloch vector ({self.r_x}, {self.r_y}, {self.r_z}) lies outside the unit ball")
        dense.validate_state(self.rho_s_tilde_e, "rho_SẼ")

    @property
    def conforming(self) -> bool:
        return self.r_z == 0.0

    def spin_n_state(self) -> np.ndarray:
        p = dense.PAULI_MATRICES
        return 0.5 * (p["I"] + self.r_x * p["X"] + self.r_y * p["Y"] + self.r_z * p["Z"])


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Single-qubit trace-preserving map given by Kraus operators."""

    kraus: tuple[np.ndarray, ...]
    label: str = "channel"

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        for k in ks:
            if k.shape != (2, 2):
                raise ValidationError(f"{self.label}: Kraus operators must be 2x2, got {k.shape}")
        dense.check_kraus(ks)
        object.__setattr__(self, "kraus", ks)

    def completeness_error(self) -> float:
        return float(np.max(np.abs(sum(k.conj().T @ k for k in self.kraus) - np.eye(2))))

    def __call__(self, rho: np.ndarray, site: int = 1) -> np.ndarray:
        return dense.apply_kraus(self.kraus, rho, site)


# ---------------------------------------------------------------------------
# Hamiltonian


def build_hamiltonian(cfg: ChainConfig) -> PauliSum:
    """``sum_j J_j Z_j Z_{j+1} + sum_j b_j X_j`` as a PauliSum."""
    n = cfg.n_sites
    h = PauliSum.zero(n)
    for j, jj in enumerate(cfg.couplings, start=1):
        if jj:
            h = h + PauliSum.single(n, {j: "Z", j + 1: "Z"}, jj)
    for j, b in enumerate(cfg.fields, start=1):
        if b:
            h = h + PauliSum.single(n, {j: "X"}, b)
    return h


def split_hamiltonian(h: PauliSum, cut: int) -> tuple[PauliSum, PauliSum, PauliSum]:
    """Sort terms by support into ``(H_S, H_E, H_SE)``; each part stays on all N sites."""
    parts = bipartition(h.n, cut)
    buckets: list[dict] = [{}, {}, {}]
    for s in h:
        supp = PauliSum(h.n, {s.key(): 1}).support()
        if supp <= parts.system:
            idx = 0
        elif supp <= parts.environment:
            idx = 1
        else:
            idx = 2
        buckets[idx][s.key()] = s.coeff
    return tuple(PauliSum(h.n, b) for b in buckets)  # type: ignore[return-value]


def split_at_spin_n(h: PauliSum, cut: int) -> tuple[PauliSum, PauliSum, PauliSum]:
    """Split ``H = (Z_{n-1}Z_n) + (Z_n Z_{n+1}) + I_n ⊗ H̃``.

    Returns the left bond, the right bond and ``I_n ⊗ H̃``, all on the full chain.
    Coefficients of the two bonds are kept (so non-unit couplings pass through).
    Raises :class:`StructureError` if anything else touches site ``cut``.
    """
    n = h.n
    if not 1 <= cut <= n:
        raise UsageError(f"site {cut} outside 1..{n}")
    left_key = PauliSum.single(n, {cut - 1: "Z", cut: "Z"}).strings()[0].key() if cut > 1 else None
    right_key = PauliSum.single(n, {cut: "Z", cut + 1: "Z"}).strings()[0].key() if cut < n else None
    left, right, rest = {}, {}, {}
    for s in h:
        if s.key() == left_key:
            left[s.key()] = s.coeff
        elif s.key() == right_key:
            right[s.key()] = s.coeff
        elif cut in PauliSum(n, {s.key(): 1}).support():
            raise StructureError(
                f"term {s.label} acts on site {cut}; only Z_{cut - 1}Z_{cut} and Z_{cut}Z_{cut + 1} may"
            )
        else:
            rest[s.key()] = s.coeff
    return PauliSum(n, left), PauliSum(n, right), PauliSum(n, rest)


# ---------------------------------------------------------------------------
# initial states


def build_initial_state(spec: InitialStateSpec, cfg: ChainConfig) -> np.ndarray:
    """``rho_{SẼ} ⊗ rho_n`` with spin ``n``'s factor placed at site ``cut``.

    ``rho_{SẼ}`` is ordered as sites ``1..n-1, n+1..N``.
    """
    n, cut = cfg.n_sites, cfg.cut
    rho_se = np.asarray(spec.rho_s_tilde_e, dtype=complex)
    if rho_se.shape != (2 ** (n - 1),) * 2:
        raise ValidationError(f"rho_SẼ must act on N-1={n - 1} qubits, got shape {rho_se.shape}")
    order = [s for s in range(1, n + 1) if s != cut] + [cut]
    rho = dense.permute_sites(np.kron(rho_se, spec.spin_n_state()), order)
    return dense.validate_state(rho, "rho_SE")


def cut_site_components(rho: np.ndarray, cut: int):
    """Pauli components of a dense operator at the cut, via the symbolic expansion."""
    from .pauli import from_dense

    return decompose_at_site(from_dense(rho), cut)


def random_bloch_xy(rng: np.random.Generator) -> tuple[float, float]:
    """Uniform point in the unit disc."""
    r = np.sqrt(rng.uniform())
    phi = rng.uniform(0, 2 * np.pi)
    return float(r * np.cos(phi)), float(r * np.sin(phi))


def random_initial_spec(cfg: ChainConfig, rng: np.random.Generator, *, mix: float = 0.3,
                        bloch: Sequence[float] | None = None) -> InitialStateSpec:
    rho = dense.random_density_matrix(cfg.n_sites - 1, rng, mix)
    if bloch is None:
        rx, ry = random_bloch_xy(rng)
        rz = 0.0
    else:
        rx, ry, rz = (list(bloch) + [0.0, 0.0, 0.0])[:3]
    return InitialStateSpec(rho, rx, ry, rz)


# ---------------------------------------------------------------------------
# channels


def identity_channel() -> QuantumChannel:
    return QuantumChannel((np.eye(2),), "identity")


def projective_z() -> QuantumChannel:
    return QuantumChannel((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), "projective_z")


def projective_x() -> QuantumChannel:
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    return QuantumChannel((np.outer(plus, plus), np.outer(minus, minus)), "projective_x")


def depolarizing() -> QuantumChannel:
    """Full depolarisation: every input goes to ``I/2``."""
    p = dense.PAULI_MATRICES
    return QuantumChannel(tuple(p[k] / 2 for k in "IXYZ"), "depolarizing")


def phase_flip(p: float = 0.5) -> QuantumChannel:
    if not 0 <= p <= 1:
        raise ValidationError("phase-flip probability must lie in [0, 1]")
    z = dense.PAULI_MATRICES["Z"]
    return QuantumChannel((np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * z), f"phase_flip({p:g})")


def amplitude_damping(gamma: float = 0.5) -> QuantumChannel:
    if not 0 <= gamma <= 1:
        raise ValidationError("damping rate must lie in [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return QuantumChannel((k0, k1), f"amplitude_damping({gamma:g})")


def random_channel(seed: int, ancilla_dim: int = 2) -> QuantumChannel:
    """Stinespring construction: Haar unitary on qubit ⊗ ancilla, ancilla prepared in ``|0>``.

    ``K_a[s', s] = U[(s', a), (s, 0)]``, so ``sum K^†K = V^†V = I`` by construction.
    """
    if ancilla_dim < 1:
        raise ValidationError("ancilla dimension must be positive")
    rng = np.random.default_rng(seed)
    u = dense.haar_unitary(2 * ancilla_dim, rng).reshape(2, ancilla_dim, 2, ancilla_dim)
    kraus = tuple(u[:, a, :, 0] for a in range(ancilla_dim))
    return QuantumChannel(kraus, f"random(seed={seed},ancilla={ancilla_dim})")


def standard_channels() -> dict[str, QuantumChannel]:
    """Named catalog; random Stinespring channels come from :func:`random_channel`."""
    chans = [identity_channel(), projective_z(), projective_x(), depolarizing(),
             phase_flip(0.5), amplitude_damping(0.5)]
    return {"identity": chans[0], "projective_z": chans[1], "projective_x": chans[2],
            "depolarizing": chans[3], "phase_flip": chans[4], "amplitude_damping": chans[5]}


def channel_from_spec(spec) -> QuantumChannel:
    """Resolve a config entry: a catalog name, ``{"random": {"seed": s, "ancilla_dim": d}}``,
    ``{"phase_flip": p}`` or ``{"amplitude_damping": g}``."""
    if isinstance(spec, QuantumChannel):
        return spec
    if isinstance(spec, str):
        cat = standard_channels()
        if spec not in cat:
            raise ValidationError(f"unknown channel {spec!r}; known: {', '.join(sorted(cat))}, random")
        return cat[spec]
    if isinstance(spec, dict) and len(spec) == 1:
        (name, arg), = spec.items()
        if name == "random":
            arg = arg or {}
            if "seed" not in arg:
                raise ValidationError("random channel needs an explicit seed")
            return random_channel(int(arg["seed"]), int(arg.get("ancilla_dim", 2)))
        if name == "phase_flip":
            return phase_flip(float(arg))
        if name == "amplitude_damping":
            return amplitude_damping(float(arg))
    raise ValidationError(f"cannot interpret channel entry {spec!r}")


# ---------------------------------------------------------------------------
# run configuration files


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs; reproducible from this object and its seed alone."""

    chain: ChainConfig
    seed: int
    bloch: tuple[float, float, float] | None
    channel: object
    state_mix: float = 0.3
    depth: int = 12
    scenario: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def grid_from_spec(spec) -> tuple[float, ...]:
    if spec is None:
        return DEFAULT_GRID
    if isinstance(spec, str):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid {spec!r} must look like START:STOP:STEPS")
        spec = {"start": parts[0], "stop": parts[1], "steps": parts[2]}
    if isinstance(spec, dict):
        try:
            start, stop, steps = float(spec["start"]), float(spec["stop"]), int(spec["steps"])
        except KeyError as exc:
            raise ValidationError(f"time_grid is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise ValidationError(f"time_grid fields are not numeric: {spec!r}") from None
        if steps < 1:
            raise ValidationError("time_grid.steps must be >= 1")
        return tuple(float(t) for t in np.linspace(start, stop, steps))
    return tuple(float(t) for t in spec)


_KNOWN_KEYS = {"N", "n", "couplings", "fields", "bloch", "channel", "seed", "state",
               "time_grid", "depth", "scenario", "sweep"}


def parse_config(data: dict) -> RunConfig:
    """Validate a config mapping (as loaded from YAML/JSON)."""
    if not isinstance(data, dict):
        raise ValidationError("config root must be a mapping")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ValidationError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    for key in ("N", "n", "seed"):
        if key not in data:
            raise ValidationError(f"config field {key!r} is required")
    try:
        n_sites, cut, seed = int(data["N"]), int(data["n"]), int(data["seed"])
    except (TypeError, ValueError):
        raise ValidationError("fields 'N', 'n' and 'seed' must be integers") from None
    chain = ChainConfig(
        n_sites,
        cut,
        data.get("couplings", 1.0),
        data.get("fields", 0.0),
        grid_from_spec(data.get("time_grid")),
    )
    bloch = data.get("bloch")
    if bloch is not None:
        if not isinstance(bloch, (list, tuple)) or not 2 <= len(bloch) <= 3:
            raise ValidationError("field 'bloch' must be [r_x, r_y] or [r_x, r_y, r_z]")
        bloch = tuple(float(v) for v in (list(bloch) + [0.0])[:3])
    state = data.get("state") or {}
    mix = float(state.get("mix", 0.3))
    channel = data.get("channel", "projective_z")
    channel_from_spec(channel)  # fail early
    return RunConfig(chain, seed, bloch, channel, mix, int(data.get("depth", 12)),
                     dict(data.get("scenario") or {}), dict(data.get("sweep") or {}), dict(data))


def load_config(path) -> RunConfig:
    """Read a YAML (or JSON, which YAML accepts) config file."""
    import yaml

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ValidationError(f"{path}: YAML parse error{where}: {getattr(exc, 'problem', exc)}") from None
    try:
        return parse_config(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
