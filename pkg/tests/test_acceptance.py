"""End-to-end acceptance checks, one test (or test group) per criterion."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from click.testing import CliRunner

from chronoq import chain as chain_mod
from chronoq import consensus, entangle, foundations, games, infotheory, temporal
from chronoq.cli import main as cli_main
from chronoq.qcore import (
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityOperator,
    RandomSource,
    StateVector,
    bell_state,
    ghz_state,
    rotation,
)

SQRT8 = 2.0 * math.sqrt(2.0)
MC_TRIALS = 100_000


def _random_state(dim, gen):
    return StateVector(gen.normal(size=dim) + 1j * gen.normal(size=dim), normalize=True)


# ---------------------------------------------------------------------------
# 1. CHSH
# ---------------------------------------------------------------------------


def test_chsh_analytic_tsirelson():
    rho = bell_state("psi-").to_density()
    value = entangle.chsh_value(rho, entangle.canonical_chsh_settings())
    assert abs(value - SQRT8) <= 1e-9


def test_chsh_monte_carlo_correlators():
    rng = RandomSource(42, 101)
    gen = rng.generator
    rho = bell_state("psi-").to_density()
    settings = entangle.canonical_chsh_settings()
    pairs = [
        (settings.A1, settings.B1, +1),
        (settings.A2, settings.B1, +1),
        (settings.A2, settings.B2, +1),
        (settings.A1, settings.B2, -1),
    ]
    total, var = 0.0, 0.0
    for a, b, sign in pairs:
        exact = entangle.correlator(rho, a, b)
        # Joint outcome distribution over the +-1 eigenvalue pairs.
        ea, va = np.linalg.eigh(a)
        eb, vb = np.linalg.eigh(b)
        probs = np.zeros((2, 2))
        vals = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                proj = np.kron(np.outer(va[:, i], va[:, i].conj()),
                               np.outer(vb[:, j], vb[:, j].conj()))
                probs[i, j] = max(float(np.real(np.trace(proj @ rho.matrix))), 0.0)
                vals[i, j] = ea[i] * eb[j]
        flat_p = probs.reshape(-1) / probs.sum()
        flat_v = vals.reshape(-1)
        draws = gen.choice(4, size=MC_TRIALS, p=flat_p)
        samples = flat_v[draws]
        e_hat = float(samples.mean())
        se = float(samples.std(ddof=1)) / math.sqrt(MC_TRIALS)
        assert abs(e_hat - exact) <= 3 * se + 1e-12
        total += sign * e_hat
        var += se * se
    assert abs(total - SQRT8) <= 3 * math.sqrt(var) + 1e-12


def test_werner_chsh_crossing_value():
    crossing = entangle.werner_chsh_crossing()
    assert abs(crossing - 0.7803) <= 0.005


# ---------------------------------------------------------------------------
# 2. PPT
# ---------------------------------------------------------------------------


def test_werner_partial_transpose_spectrum():
    for f in np.linspace(0.0, 1.0, 41):
        rho = entangle.WernerState(float(f)).rho
        eigs = np.sort(np.linalg.eigvalsh(entangle.partial_transpose(rho, [2, 2])))
        expected = np.sort([(2 * f + 1) / 6.0] * 3 + [(3 - 6 * f) / 6.0])
        assert np.max(np.abs(eigs - expected)) <= 1e-9


def test_negativity_onset_exactly_at_half():
    assert entangle.ppt_min_eigenvalue(
        entangle.WernerState(0.5).rho, [2, 2]
    ) == pytest.approx(0.0, abs=1e-12)
    for f in (0.5 + 1e-9, 0.6, 1.0):
        assert entangle.ppt_min_eigenvalue(entangle.WernerState(f).rho, [2, 2]) < 0
    for f in (0.0, 0.3, 0.5 - 1e-9):
        assert entangle.ppt_min_eigenvalue(entangle.WernerState(f).rho, [2, 2]) >= 0


# ---------------------------------------------------------------------------
# 3. Games
# ---------------------------------------------------------------------------


def test_games_analytic_rationals_exact():
    assert games.monty_classic_analytic("switch") == Fraction(2, 3)
    ign = games.monty_ignorant_analytic("switch")
    assert ign["conditional"] == Fraction(1, 2)
    assert ign["prize_accident"] == Fraction(1, 3)
    assert games.monty_teleport_analytic("stick") == Fraction(2, 8)
    assert games.monty_teleport_analytic("switch") == Fraction(3, 8)
    unr_stick = games.unreliable_teleport_analytic("stick")
    unr_switch = games.unreliable_teleport_analytic("switch")
    assert unr_stick["conditional"] == Fraction(1, 2)
    assert unr_switch["conditional"] == Fraction(1, 4)
    assert games.pbr_analytic("stick", "ontic")["conditional"] == Fraction(3, 11)
    assert games.pbr_analytic("switch", "ontic")["conditional"] == Fraction(4, 11)
    for q in (Fraction(0), Fraction(1, 8), Fraction(1, 4), Fraction(1, 3)):
        assert games.pbr_analytic("stick", "epistemic", q)["conditional"] == Fraction(
            3
        ) / (11 - 8 * q)
        assert games.pbr_analytic("switch", "epistemic", q)["conditional"] == (
            4 - 4 * q
        ) / (11 - 8 * q)
    q = Fraction(1, 4)
    assert (
        games.pbr_analytic("stick", "epistemic", q)["conditional"]
        == games.pbr_analytic("switch", "epistemic", q)["conditional"]
    )
    assert games.chsh_game_analytic("classical") == 0.75
    assert games.chsh_game_analytic("quantum") == pytest.approx(
        0.5 * (1 + math.sqrt(2) / 2), abs=1e-15
    )


def test_games_monte_carlo_within_three_se():
    rng = RandomSource(42, 103)
    for strategy in ("stick", "switch"):
        assert games.monty_classic(strategy, MC_TRIALS, rng).passed
        ign = games.monty_ignorant(strategy, MC_TRIALS, rng)
        assert ign["conditional"].passed and ign["prize_accident"].passed
        assert games.monty_teleport(strategy, MC_TRIALS, rng).passed
        unr = games.unreliable_teleport(strategy, MC_TRIALS, rng)
        assert unr["conditional"].passed and unr["received_bit0"].passed
        for ontology in ("ontic", "epistemic"):
            res = games.pbr_game(ontology, strategy, MC_TRIALS, rng, q=Fraction(1, 8))
            assert res["conditional"].passed and res["opens_prize"].passed
    rng_chsh = RandomSource(42, 123)
    for strategy in ("classical", "quantum"):
        assert games.chsh_game(strategy, MC_TRIALS, rng_chsh).passed


# ---------------------------------------------------------------------------
# 4. Teleportation
# ---------------------------------------------------------------------------


def test_teleportation_fidelity_all_branches():
    gen = RandomSource(42, 104).generator
    for _ in range(1000):
        psi = _random_state(2, gen)
        for branch in games.teleport_branches(psi):
            assert abs(branch["fidelity"] - 1.0) <= 1e-9


def test_bob_premeasure_maximally_mixed():
    gen = RandomSource(42, 105).generator
    rng = RandomSource(42, 106)
    for _ in range(50):
        res = games.teleport_standard(_random_state(2, gen), rng)
        dev = np.max(np.abs(res["bob_premeasure_reduced"].matrix - np.eye(2) / 2))
        assert dev <= 1e-9


# ---------------------------------------------------------------------------
# 5. Swapping / temporal states
# ---------------------------------------------------------------------------


def test_swap_conditional_fidelity_all_middle_outcomes():
    rng = RandomSource(42, 107)
    for label in ("phi+", "phi-", "psi+", "psi-"):
        demo = temporal.swap_demo(rng, forced_label=label)
        assert abs(demo["outer_pair_fidelity"] - 1.0) <= 1e-9
        assert demo["photon1_consumed_before_photon4_created"]


def test_swap_event_log_consume_before_create():
    demo = temporal.swap_demo(RandomSource(42, 108))
    log = demo["event_log"]
    t_measure = next(e["t"] for e in log if e["event"] == "measure" and e["modes"] == ["p1"])
    t_create = next(e["t"] for e in log if e["event"] == "create" and "p3" in e["modes"])
    assert t_measure < t_create
    assert [e["t"] for e in log] == sorted(e["t"] for e in log)


def test_fusion_reproduces_closed_forms():
    pair = bell_state("psi+").to_density()
    for n_pairs in (2, 3, 4):
        rho = temporal.ghz_density_recursive(pair, n_pairs)
        closed = temporal.temporal_ghz_closed_form(n_pairs)
        assert entangle.fidelity(rho, closed.to_density()) == pytest.approx(
            1.0, abs=1e-9
        )


def test_chain_state_matches_block_closed_form():
    rng = RandomSource(42, 109)
    for records in (["00"], ["01", "10"], ["00", "10", "11"], ["11", "01", "00", "10"]):
        chain = chain_mod.build_chain(records, rng)
        assert chain.fidelity() == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# 6. Quantum chain
# ---------------------------------------------------------------------------


def test_chain_roundtrip_exhaustive_and_random():
    for triple in itertools.product(["00", "01", "10", "11"], repeat=3):
        rng = RandomSource(42, 110 + int("".join(triple), 2))
        chain = chain_mod.build_chain(list(triple), rng)
        assert chain_mod.decode(chain) == "".join(triple)
    rng = RandomSource(42, 111)
    for k in range(100):
        n = 5 + k % 3
        records = [f"{int(rng.integers(0, 2))}{int(rng.integers(0, 2))}" for _ in range(n)]
        chain = chain_mod.build_chain(records, rng)
        assert chain_mod.decode(chain) == "".join(records)


def test_chain_live_tamper_always_detected():
    rng = RandomSource(42, 112)
    ops = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z, "H": HADAMARD}
    for name, op in ops.items():
        for _ in range(5):
            n = 3 + int(rng.integers(0, 3))
            records = [
                f"{int(rng.integers(0, 2))}{int(rng.integers(0, 2))}" for _ in range(n)
            ]
            chain = chain_mod.build_chain(records, rng)
            live = [m.spatial for m in chain.register.live_modes
                    if m.time_step == chain.current_time]
            target = live[int(rng.integers(0, len(live)))]
            chain_mod.tamper(chain, target, op)
            assert chain.fidelity() < 1 - 1e-6, (name, records)
            with pytest.raises(chain_mod.DecodeMismatch):
                chain_mod.decode(chain)


def test_chain_past_modes_inaccessible():
    rng = RandomSource(42, 113)
    chain = chain_mod.build_chain(["00", "10", "11"], rng)
    for spatial in ("p1", "p2", "p3", "p4"):
        with pytest.raises(chain_mod.TemporalInaccessible):
            chain_mod.tamper(chain, spatial, PAULI_X)


def test_classical_chain_invalidates_suffix_exactly():
    for n_blocks, idx in ((5, 0), (5, 2), (7, 6), (4, 1)):
        rng = RandomSource(42, 114 + 10 * n_blocks + idx)
        report = chain_mod.classical_chain_tamper_contrast(n_blocks, idx, rng)
        assert report["invalidated_range_classical"] == [idx, n_blocks]
        assert report["invalidated_range_quantum"] == [0, n_blocks]


# ---------------------------------------------------------------------------
# 7. Theta-protocol
# ---------------------------------------------------------------------------


def test_theta_parity_zero_violation_by_enumeration():
    rng = RandomSource(42, 115)
    for n in (2, 3, 4, 5, 6):
        g = ghz_state(n)
        for _ in range(25):
            angles, m = consensus.sample_theta_angles(n, rng)
            assert consensus.exact_pass_probability(g, angles, m) == pytest.approx(
                1.0, abs=1e-12
            )


def test_theta_honest_bound_on_noisy_states():
    rng = RandomSource(42, 116)
    network = consensus.Network([consensus.Node(i) for i in range(3)], rng)
    g = ghz_state(3).to_density()
    gen = rng.generator
    for _ in range(50):
        eps = float(gen.uniform(0.2, 0.5))
        w = gen.normal(size=(8, 8)) + 1j * gen.normal(size=(8, 8))
        noise = w @ w.conj().T
        noise = noise / np.trace(noise)
        rho = DensityOperator((1 - eps) * g.matrix + eps * noise)
        report = consensus.check_fidelity_bounds(rho, network, 2000, rng, honest=True)
        assert report["honest_bound_ok"]


def test_theta_dishonest_bound_on_sampled_cheats():
    rng = RandomSource(42, 117)
    gen = rng.generator
    axes = (PAULI_X, PAULI_Y, PAULI_Z)
    for trial in range(100):
        angle = float(gen.uniform(0.0, 2 * math.pi))
        cheat = rotation(axes[trial % 3], angle)
        if trial % 5 == 0:
            cheat = cheat @ rotation(axes[(trial + 1) % 3], float(gen.uniform(0, math.pi)))
        nodes = [
            consensus.Node(0, honest=False, cheat=cheat),
            consensus.Node(1),
            consensus.Node(2),
        ]
        network = consensus.Network(nodes, rng)
        report = consensus.check_fidelity_bounds(
            ghz_state(3), network, 100, rng, honest=False
        )
        assert report["dishonest_bound_ok"], trial


# ---------------------------------------------------------------------------
# 8. Gleason
# ---------------------------------------------------------------------------


def test_gleason_roundtrip_error_bound():
    rng = RandomSource(42, 118)
    gen = rng.generator
    for d in (2, 3, 4):
        for _ in range(50):
            g = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
            m = g @ g.conj().T
            rho = DensityOperator(m / np.trace(m))
            frame = foundations.sample_haar_frame(d, rng)
            val = foundations.Valuation.from_density(rho, frame)
            recon = foundations.gleason_reconstruct(val, frame)
            assert np.max(np.abs(recon.matrix - rho.matrix)) <= 1e-8


def test_gleason_frame_average_identity():
    rng = RandomSource(42, 119)
    gen = rng.generator
    for d in (2, 3):
        g = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
        m = g @ g.conj().T
        rho = DensityOperator(m / np.trace(m))
        est = foundations.frame_average_reconstruct(rho, 10_000, rng)
        assert np.max(np.abs(est.matrix - rho.matrix)) <= 0.02


# ---------------------------------------------------------------------------
# 9. Leggett-Garg
# ---------------------------------------------------------------------------


def test_lg_k3_max_value():
    res = foundations.lg_k3_max(foundations.PrecessionModel(omega=1.0))
    assert abs(res["k3_max"] - 1.5) <= 1e-6


def test_temporal_chsh_tsirelson():
    model = foundations.PrecessionModel(omega=1.0)
    res = foundations.temporal_chsh_optimize(model, 0.0, 0.9)
    assert abs(res["value"] - SQRT8) <= 1e-3


def test_classical_models_never_violate():
    rng = RandomSource(42, 120)
    for _ in range(1000):
        inst = foundations.classical_commuting_instance(rng)
        assert foundations.classical_k3(inst) <= 1.0 + 1e-9
        assert abs(foundations.classical_temporal_chsh(inst)) <= 2.0 + 1e-9


def test_entropic_lg_violation_reported():
    best = foundations.entropic_lg_scan(foundations.PrecessionModel(omega=1.0))
    assert best["violated"]
    assert best["gap"] > 0


# ---------------------------------------------------------------------------
# 10. Information theory
# ---------------------------------------------------------------------------


def test_typical_set_bounds_exhaustive():
    src = [0.85, 0.15]
    h = infotheory.shannon_entropy(src)
    eps = 0.12
    for n in (4, 8, 12, 16):
        count = 0
        prob_mass = 0.0
        for ones in range(n + 1):
            seq = (1,) * ones + (0,) * (n - ones)
            if infotheory.typical_membership(seq, src, eps):
                ways = math.comb(n, ones)
                count += ways
                prob_mass += ways * (src[1] ** ones) * (src[0] ** (n - ones))
        assert count == infotheory.typical_set_size(n, src, eps)
        assert count <= 2 ** (n * (h + eps)) + 1e-6
        assert count >= prob_mass * 2 ** (n * (h - eps)) - 1e-6


def test_codec_success_rates_at_design_points():
    p = 0.11
    src = [1 - p, p]
    h = infotheory.shannon_entropy(src)
    rng = RandomSource(42, 121)
    high = infotheory.TypicalCodec(n=20, epsilon=0.75 - h, source=src)
    res_high = infotheory.typical_codec_roundtrip(high, 10_000, rng)
    assert res_high["success_rate"] >= 0.9
    assert res_high["rate_bits_per_symbol"] == pytest.approx(0.75)
    low = infotheory.TypicalCodec(n=20, epsilon=0.3 - h, source=src)
    res_low = infotheory.typical_codec_roundtrip(low, 10_000, rng)
    assert res_low["success_rate"] <= 0.5


def test_entropic_uncertainty_on_random_states():
    gen = RandomSource(42, 122).generator
    x_basis = [StateVector(np.ascontiguousarray(HADAMARD[:, j])) for j in range(2)]
    z_basis = [StateVector([1.0, 0.0]), StateVector([0.0, 1.0])]
    bound = infotheory.entropic_uncertainty_bound(x_basis, z_basis)
    assert bound == pytest.approx(1.0, abs=1e-12)
    for _ in range(1000):
        psi = _random_state(2, gen)
        hx = infotheory.shannon_entropy(
            [abs(complex(np.vdot(b.amplitudes, psi.amplitudes))) ** 2 for b in x_basis]
        )
        hz = infotheory.shannon_entropy(
            [abs(complex(np.vdot(b.amplitudes, psi.amplitudes))) ** 2 for b in z_basis]
        )
        assert hx + hz >= bound - 1e-9


# ---------------------------------------------------------------------------
# 11. CLI determinism
# ---------------------------------------------------------------------------


def test_cli_byte_identical_json():
    runner = CliRunner()
    commands = [
        ["entangle", "--json"],
        ["game", "chsh", "--trials", "20000", "--json"],
        ["chain", "contrast", "--json"],
        ["consensus", "bounds", "--rounds", "60", "--json"],
        ["gleason", "roundtrip", "--dim", "3", "--frames", "300", "--json"],
        ["lg", "temporal-chsh", "--json"],
        ["entropy", "--trials", "2000", "--json"],
    ]
    for cmd in commands:
        first = runner.invoke(cli_main, cmd)
        second = runner.invoke(cli_main, cmd)
        assert first.exit_code == 0, (cmd, first.output)
        assert first.output.encode() == second.output.encode()
