import itertools
import json
import math

import numpy as np
import pytest

from chronoq.chain import (
    FUSION_RETRY_CAP,
    ChainError,
    ClassicalChain,
    DecodeMismatch,
    QuantumChain,
    Record,
    TemporalInaccessible,
    append,
    build_chain,
    classical_chain_tamper_contrast,
    decode,
    decode_by_statistics,
    mix,
    tamper,
)
from chronoq.qcore import PAULI_X, PAULI_Z, RandomSource, StateVector


def test_record_validation():
    assert Record(0, 1).bits == "01"
    with pytest.raises(ChainError):
        Record(2, 0)


def test_worked_three_block_chain():
    rng = RandomSource(21, 0)
    chain = build_chain(["00", "10", "11"], rng)
    assert chain.record_string == "001011"
    assert decode(chain) == "001011"
    assert chain.timestamps == [0, 1, 1, 2, 2, 3]
    # Expected state: (|001011> + |110100>)/sqrt(2).
    amp = chain.register.state.amplitudes
    i1 = int("001011", 2)
    i2 = int("110100", 2)
    assert abs(amp[i1]) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert abs(amp[i2]) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert (amp[i1] / amp[i2]).real == pytest.approx(1.0, abs=1e-9)


def test_roundtrip_exhaustive_triples():
    for triple in itertools.product(["00", "01", "10", "11"], repeat=3):
        rng = RandomSource(22, hash(triple) % (2**32))
        chain = build_chain(list(triple), rng)
        assert decode(chain) == "".join(triple)
        assert chain.fidelity() == pytest.approx(1.0, abs=1e-9)


def test_roundtrip_random_longer_chains():
    rng = RandomSource(23, 0)
    for k in range(20):
        n = 5 + k % 3
        records = ["".join(str(int(rng.integers(0, 2))) for _ in range(2)) for _ in range(n)]
        chain = build_chain(records, rng)
        assert decode(chain) == "".join(records)


def test_fidelity_and_json():
    rng = RandomSource(24, 0)
    chain = build_chain(["01", "11"], rng)
    blob = json.loads(chain.to_json())
    assert blob["records"] == ["01", "11"]
    assert blob["valid"] is True
    assert blob["fidelity"] == pytest.approx(1.0)


def test_tamper_past_mode_raises():
    rng = RandomSource(25, 0)
    chain = build_chain(["00", "10", "11"], rng)
    with pytest.raises(TemporalInaccessible):
        tamper(chain, "p1", PAULI_X)
    with pytest.raises(TemporalInaccessible):
        tamper(chain, "p4", PAULI_Z)


def test_tamper_live_mode_detected():
    rng = RandomSource(26, 0)
    chain = build_chain(["00", "10", "11"], rng)
    tamper(chain, "p6", PAULI_X)
    assert chain.fidelity() < 1 - 1e-6
    assert not chain.valid
    with pytest.raises(DecodeMismatch):
        decode(chain)


def test_tamper_phase_flip_detected():
    rng = RandomSource(27, 0)
    chain = build_chain(["00", "10"], rng)
    tamper(chain, "p4", PAULI_Z)
    assert chain.fidelity() < 1 - 1e-6
    with pytest.raises(DecodeMismatch):
        decode(chain)


def test_decode_by_statistics():
    rng = RandomSource(28, 0)

    def make_copy():
        local = RandomSource(28, 1)
        return build_chain(["00", "10", "11"], local).register.state

    assert decode_by_statistics(make_copy, 64, rng) == "001011"


def test_mix_is_documented_bit_exactly():
    # Values recomputed from the docstring recipe.
    def reference(x):
        z = (x + 0x9E3779B97F4A7C15) % (1 << 64)
        z ^= z >> 30
        z = (z * 0xBF58476D1CE4E5B9) % (1 << 64)
        z ^= z >> 27
        z = (z * 0x94D049BB133111EB) % (1 << 64)
        return z ^ (z >> 31)

    for x in (0, 1, 0xDEADBEEF, (1 << 64) - 1):
        assert mix(x) == reference(x)


def test_classical_chain_verify_and_tamper():
    chain = ClassicalChain()
    records = [Record(0, 0), Record(1, 0), Record(1, 1), Record(0, 1)]
    for r in records:
        chain.append(r)
    assert chain.verify() == [True] * 4
    chain.tamper_record(1, Record(0, 0))
    verdicts = chain.verify()
    assert verdicts == [True, False, False, False]


def test_contrast_report():
    rng = RandomSource(29, 0)
    report = classical_chain_tamper_contrast(5, 2, rng)
    assert report["invalidated_range_classical"] == [2, 5]
    assert report["invalidated_range_quantum"] == [0, 5]
    assert report["past_mode_access"] == "TEMPORAL_INACCESSIBLE"
    assert report["quantum_fidelity_after_tamper"] < 1 - 1e-6


def test_fusion_retry_cap_enforced():
    assert FUSION_RETRY_CAP >= 1
    rng = RandomSource(30, 0)
    chain = QuantumChain()
    append(chain, Record(0, 0), rng)
    append(chain, Record(1, 1), rng)
    assert decode(chain) == "0011"
