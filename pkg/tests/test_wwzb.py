"""Bell functional via the fast transform, and the two-qubit benchmark."""

from itertools import product

import numpy as np
import pytest

from photonbell import (
    BellResult,
    CorrelatorTable,
    chsh_horodecki,
    wwzb_value,
    wwzb_value_naive,
)

_PAULIS = [
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
]


def test_table_validation():
    with pytest.raises(ValueError):
        CorrelatorTable(2, np.zeros(3))
    with pytest.raises(ValueError):
        CorrelatorTable(2, np.array([0.0, 0.0, 0.0, 1.5]))
    table = CorrelatorTable(1, np.array([1.0, -1.0]))
    assert table.values.flags.writeable is False


def test_fast_transform_matches_naive():
    # 500 random tables across party counts
    rng = np.random.default_rng(99)
    for _ in range(500):
        n = int(rng.integers(1, 9))
        values = rng.uniform(-1.0, 1.0, 2**n)
        table = CorrelatorTable(n, values)
        fast = wwzb_value(table)
        slow = wwzb_value_naive(table)
        assert abs(fast.s_value - slow.s_value) < 1e-12
        assert fast.dominant_r == slow.dominant_r


def test_chsh_equivalence_for_two_parties():
    # the optimal singlet correlators give the usual CHSH point
    values = np.array([1.0, 1.0, 1.0, -1.0]) / np.sqrt(2.0)
    result = wwzb_value(CorrelatorTable(2, values))
    assert abs(result.s_value - np.sqrt(2.0)) < 1e-14
    assert result.violated


def test_deterministic_strategies_saturate_unity():
    # every local-deterministic table reaches exactly 1, never more
    for n in range(1, 5):
        assignments = list(product([1.0, -1.0], repeat=2))
        for outcome_rows in product(assignments, repeat=n):
            values = np.empty(2**n)
            for index in range(2**n):
                prod = 1.0
                for k in range(n):
                    prod *= outcome_rows[k][(index >> k) & 1]
                values[index] = prod
            result = wwzb_value(CorrelatorTable(n, values))
            assert result.s_value == 1.0
            assert not result.violated


def test_dominant_term_is_argmax():
    values = np.array([0.1, 0.9, -0.2, 0.3])
    result = wwzb_value(CorrelatorTable(2, values))
    transform = np.array(
        [
            values[0] + values[1] + values[2] + values[3],
            values[0] - values[1] + values[2] - values[3],
            values[0] + values[1] - values[2] - values[3],
            values[0] - values[1] - values[2] + values[3],
        ]
    )
    assert result.dominant_r == int(np.argmax(np.abs(transform)))
    assert abs(result.s_value - np.abs(transform).sum() / 4.0) < 1e-14


def test_bell_result_violated_flag():
    assert BellResult(1.2, 0).violated
    assert not BellResult(1.0, 0).violated


def _chsh_bruteforce(rho: np.ndarray) -> float:
    t = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            t[i, j] = np.trace(rho @ np.kron(_PAULIS[i], _PAULIS[j])).real
    u = np.sort(np.linalg.eigvalsh(t.T @ t))
    return 2.0 * np.sqrt(u[-1] + u[-2])


def test_chsh_horodecki_singlet():
    psi = np.zeros(4)
    psi[1], psi[2] = 1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)
    rho = np.outer(psi, psi)
    assert abs(chsh_horodecki(rho) - 2.0 * np.sqrt(2.0)) < 1e-12


def test_chsh_horodecki_product_state():
    rho = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
    assert abs(chsh_horodecki(rho) - 2.0) < 1e-12


def test_chsh_horodecki_matches_bruteforce_on_random_states():
    rng = np.random.default_rng(4242)
    for _ in range(25):
        raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = raw @ raw.conj().T
        rho /= np.trace(rho).real
        assert abs(chsh_horodecki(rho) - _chsh_bruteforce(rho)) < 1e-12


def test_chsh_horodecki_benchmark_mixture():
    # symmetric one-excitation Bell state diluted with |00>; stays below 2
    psi = np.zeros(4)
    psi[1] = psi[2] = 1.0 / np.sqrt(2.0)
    rho = (2.0 / 3.0) * np.outer(psi, psi)
    rho[0, 0] += 1.0 / 3.0
    value = chsh_horodecki(rho)
    assert abs(value - 1.8856180831641267) < 1e-12
    assert abs(value - 2.0 * np.sqrt(8.0 / 9.0)) < 1e-12
    assert value < 2.0


def test_chsh_horodecki_validation():
    with pytest.raises(ValueError):
        chsh_horodecki(np.eye(3))
    bad_trace = np.eye(4)
    with pytest.raises(ValueError):
        chsh_horodecki(bad_trace)
    bad_herm = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
    bad_herm[0, 1] = 0.2j
    with pytest.raises(ValueError):
        chsh_horodecki(bad_herm)
    bad_psd = np.diag([1.5, -0.5, 0.0, 0.0])
    with pytest.raises(ValueError):
        chsh_horodecki(bad_psd)


def test_naive_party_limit():
    with pytest.raises(ValueError):
        wwzb_value_naive(CorrelatorTable(11, np.zeros(2**11)))
