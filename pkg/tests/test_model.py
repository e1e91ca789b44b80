import numpy as np
import pytest

from conftest import kron_label
from nosignal import dense
from nosignal.errors import StructureError, ValidationError
from nosignal.model import (
    ChainConfig,
    InitialStateSpec,
    QuantumChannel,
    build_hamiltonian,
    build_initial_state,
    channel_from_spec,
    load_config,
    parse_config,
    projective_z,
    random_channel,
    split_at_spin_n,
    split_hamiltonian,
    standard_channels,
)
from nosignal.pauli import PauliSum, decompose_at_site, from_dense, to_dense


def S(terms):
    return PauliSum.from_labels(terms)


class TestHamiltonian:
    def test_two_sites(self):
        assert build_hamiltonian(ChainConfig(2, 2)) == S({"ZZ": 1})

    def test_three_sites(self):
        assert build_hamiltonian(ChainConfig(3, 2)) == S({"ZZI": 1, "IZZ": 1})

    def test_field_on_last_site(self):
        h = build_hamiltonian(ChainConfig(3, 2, fields=[0, 0, 0.7]))
        assert h == S({"ZZI": 1, "IZZ": 1, "IIX": 0.7})

    def test_matches_embed_construction(self):
        cfg = ChainConfig(4, 2, couplings=[1.0, 0.5, -2.0], fields=[0.1, 0, 0.3, 0.7])
        h = build_hamiltonian(cfg)
        assert h.is_hermitian()
        oracle = sum(j * dense.embed(kron_label("ZZ"), [k, k + 1], 4) for k, j in enumerate(cfg.couplings, 1))
        oracle = oracle + sum(b * dense.embed(kron_label("X"), [k], 4) for k, b in enumerate(cfg.fields, 1))
        assert np.max(np.abs(to_dense(h) - oracle)) == 0


class TestSplits:
    def test_minimal(self):
        hs, he, hse = split_hamiltonian(build_hamiltonian(ChainConfig(3, 2)), 2)
        assert hs.is_zero() and he == S({"IZZ": 1}) and hse == S({"ZZI": 1})

    def test_four_sites(self):
        h = build_hamiltonian(ChainConfig(4, 3))
        hs, he, hse = split_hamiltonian(h, 3)
        assert hs == S({"ZZII": 1}) and he == S({"IIZZ": 1}) and hse == S({"IZZI": 1})
        assert hs + he + hse == h

    def test_field_on_cut_goes_to_environment(self):
        h = build_hamiltonian(ChainConfig(3, 2, fields=[0, 0.4, 0]))
        _, he, _ = split_hamiltonian(h, 2)
        assert he.coeff("IXI") == 0.4

    def test_spin_n_minimal(self):
        left, right, rest = split_at_spin_n(build_hamiltonian(ChainConfig(3, 2)), 2)
        assert left == S({"ZZI": 1}) and right == S({"IZZ": 1}) and rest.is_zero()

    def test_spin_n_five(self):
        left, right, rest = split_at_spin_n(build_hamiltonian(ChainConfig(5, 3)), 3)
        assert left == S({"IZZII": 1}) and right == S({"IIZZI": 1})
        assert rest == S({"ZZIII": 1, "IIIZZ": 1})

    def test_field_away_from_cut_lands_in_rest(self):
        h = build_hamiltonian(ChainConfig(4, 2, fields=[0, 0, 0, 0.9]))
        _, _, rest = split_at_spin_n(h, 2)
        assert rest.coeff("IIIX") == 0.9
        # H̃ splits into an S-local part and an Ẽ-local part
        assert all(s.label[1] == "I" for s in rest)

    def test_field_on_cut_is_structure_error(self):
        with pytest.raises(StructureError):
            split_at_spin_n(build_hamiltonian(ChainConfig(3, 2, fields=[0, 0.3, 0])), 2)


class TestInitialState:
    def test_pure_product_arrangement(self):
        spec = InitialStateSpec(np.diag([1.0, 0, 0, 0]), 1.0, 0.0)
        rho = build_initial_state(spec, ChainConfig(3, 2))
        zero, plus = np.array([1, 0]), np.array([1, 1]) / np.sqrt(2)
        psi = np.kron(np.kron(zero, plus), zero)
        assert np.allclose(rho, np.outer(psi, psi))

    def test_placement_for_non_contiguous_sites(self, rng):
        a, b, c = (dense.random_density_matrix(1, rng) for _ in range(3))
        spec = InitialStateSpec(np.kron(np.kron(a, b), c), 0.2, 0.4)
        rho = build_initial_state(spec, ChainConfig(4, 3))
        assert np.allclose(rho, np.kron(np.kron(np.kron(a, b), spec.spin_n_state()), c))

    def test_maximally_mixed_cut(self, rng):
        spec = InitialStateSpec(dense.random_density_matrix(2, rng), 0, 0)
        rho = build_initial_state(spec, ChainConfig(3, 2))
        assert np.allclose(dense.partial_trace_dense(rho, [1, 3]), np.eye(2) / 2)

    @pytest.mark.parametrize("n_sites,cut", [(3, 2), (4, 2), (4, 3), (5, 3)])
    def test_no_z_component_at_cut(self, rng, n_sites, cut):
        spec = InitialStateSpec(dense.random_density_matrix(n_sites - 1, rng, mix=0.0), 0.3, -0.5)
        rho = build_initial_state(spec, ChainConfig(n_sites, cut))
        c0, c1, c2, c3 = decompose_at_site(from_dense(rho), cut)
        assert c3.is_zero()
        # C0 is half the reduced state on S ∪ Ẽ, which is the input rho_SẼ
        assert np.allclose(to_dense(c0) * 2, spec.rho_s_tilde_e, atol=1e-14)

    def test_validation(self):
        with pytest.raises(ValidationError):
            InitialStateSpec(np.eye(4) / 4, 0.9, 0.9)
        with pytest.raises(ValidationError):
            InitialStateSpec(np.diag([1.1, -0.1]), 0, 0)
        with pytest.raises(ValidationError):
            build_initial_state(InitialStateSpec(np.eye(2) / 2), ChainConfig(4, 2))


class TestChannels:
    def test_catalog_complete(self):
        cat = standard_channels()
        for name in ("identity", "projective_z", "projective_x", "depolarizing", "phase_flip"):
            assert cat[name].completeness_error() <= 1e-10
        assert len(cat["identity"].kraus) == 1 and np.array_equal(cat["identity"].kraus[0], np.eye(2))

    def test_projective_z_dephases(self):
        rho = 0.5 * (np.eye(2) + 0.8 * kron_label("X"))
        oracle = sum(k @ rho @ k.conj().T for k in (np.diag([1, 0]), np.diag([0, 1])))
        assert np.allclose(oracle, np.eye(2) / 2)
        assert np.allclose(projective_z()(rho), np.eye(2) / 2)

    @pytest.mark.parametrize("seed,anc", [(42, 2), (7, 4), (0, 1)])
    def test_random_is_trace_preserving(self, seed, anc):
        ch = random_channel(seed, anc)
        assert len(ch.kraus) == anc and ch.completeness_error() <= 1e-12

    def test_random_is_seeded(self):
        a, b = random_channel(5), random_channel(5)
        assert all(np.array_equal(x, y) for x, y in zip(a.kraus, b.kraus))

    def test_rejects_non_tp(self):
        with pytest.raises(ValidationError):
            QuantumChannel((np.diag([1, 0]),))

    def test_from_spec(self):
        assert channel_from_spec("projective_x").label == "projective_x"
        assert channel_from_spec({"random": {"seed": 3, "ancilla_dim": 4}}).label.startswith("random")
        with pytest.raises(ValidationError):
            channel_from_spec({"random": {}})
        with pytest.raises(ValidationError):
            channel_from_spec("nope")


class TestConfig:
    def test_parse(self):
        rc = parse_config({"N": 4, "n": 2, "seed": 1, "bloch": [0.1, 0.2],
                           "time_grid": {"start": 0, "stop": 1, "steps": 11}})
        assert rc.chain.n_sites == 4 and rc.bloch == (0.1, 0.2, 0.0)
        assert len(rc.chain.time_grid) == 11

    def test_seed_required(self):
        with pytest.raises(ValidationError, match="seed"):
            parse_config({"N": 3, "n": 2})

    def test_unknown_field(self):
        with pytest.raises(ValidationError, match="colour"):
            parse_config({"N": 3, "n": 2, "seed": 0, "colour": "red"})

    def test_yaml_error_has_line(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("N: 3\nn: [2\nseed: 1\n")
        with pytest.raises(ValidationError, match="line"):
            load_config(p)

    def test_theorem_scope(self):
        with pytest.raises(ValidationError, match="N >= 3"):
            ChainConfig(2, 2).check_theorem_scope()
        with pytest.raises(ValidationError):
            ChainConfig(3, 3).check_theorem_scope()
        with pytest.raises(ValidationError):
            ChainConfig(3, 2, fields=[0, 0, 1]).check_theorem_scope()
        ChainConfig(3, 2).check_theorem_scope()


def test_split_parts_reassemble_for_random_fields(rng):
    cfg = ChainConfig(5, 3, couplings=rng.normal(size=4), fields=rng.normal(size=5))
    h = build_hamiltonian(cfg)
    hs, he, hse = split_hamiltonian(h, 3)
    assert hs + he + hse == h
    assert hse == S({"IZZII": cfg.couplings[1]})
