"""Internal-node augmentation, Kron reduction, participation matrix."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridgfv import (
    SingularMatrixError,
    augment_internal_nodes,
    build_ybus,
    frequency_participation,
    kron_reduce,
    parse_case,
)

from conftest import get_analysis, get_case


def single_bus_single_gen(xd_p=0.25):
    return parse_case(
        json.dumps(
            {
                "base_mva": 100.0,
                "buses": [{"id": 1, "kind": "slack", "v_set": 1.0}],
                "branches": [],
                "generators": [{"bus": 1, "h": 3.0, "xd_p": xd_p}],
            }
        )
    )


def test_augment_single_machine():
    case = single_bus_single_gen()
    aug = augment_internal_nodes(build_ybus(case), case)
    expected = np.array([[-4j, 4j], [4j, -4j]])
    assert np.allclose(aug.matrix, expected, atol=1e-14)
    assert aug.nodes == (("bus", 1), ("gen", 0))


def test_augment_leaves_other_buses_untouched():
    case = get_case("case2")
    y = build_ybus(case)
    aug = augment_internal_nodes(y, case)
    assert aug.matrix.shape == (3, 3)
    assert np.allclose(aug.matrix[1, :2], y[1, :])
    assert aug.matrix[1, 2] == 0


def test_augment_rejects_zero_reactance():
    case = single_bus_single_gen(xd_p=0.25)
    from dataclasses import replace

    broken = replace(case, generators=(replace(case.generators[0], xd_p=0.0),))
    with pytest.raises(SingularMatrixError, match="1e-4"):
        augment_internal_nodes(build_ybus(broken), broken)


def naive_augmented(case):
    # Oracle: fresh assembly, one generator at a time.
    y = build_ybus(case)
    n, ng = case.n_bus, case.n_gen
    out = np.zeros((n + ng, n + ng), dtype=complex)
    out[:n, :n] = y
    order = [b.id for b in case.buses]
    for k, gen in enumerate(case.generators):
        t = order.index(gen.bus)
        ygen = -1j / gen.xd_p
        out[n + k, n + k] += ygen
        out[t, t] += ygen
        out[t, n + k] -= ygen
        out[n + k, t] -= ygen
    return out


def test_augment_nine_bus_matches_naive():
    case = get_case("case9")
    aug = augment_internal_nodes(build_ybus(case), case)
    expected = naive_augmented(case)
    assert aug.matrix.shape == (12, 12)
    assert np.allclose(aug.matrix, expected, atol=1e-14)
    assert np.allclose(aug.matrix, aug.matrix.T, atol=1e-14)
    # Internal rows couple to exactly one bus.
    for row in aug.matrix[9:]:
        assert np.count_nonzero(row) == 2


def test_kron_keep_all_is_identity():
    case = get_case("case9")
    y = build_ybus(case)
    assert np.array_equal(kron_reduce(y, range(9)), y)


def test_kron_chain_series_combination():
    # a - b - c with unit reactances; eliminating b leaves the series
    # equivalent x = 2, i.e. off-diagonal +0.5j.
    y = np.array(
        [[-1j, 1j, 0], [1j, -2j, 1j], [0, 1j, -1j]], dtype=complex
    )
    red = kron_reduce(y, [0, 2])
    assert red[0, 1] == pytest.approx(0.5j)
    assert red[0, 0] == pytest.approx(-0.5j)


def test_kron_terminal_equivalence_nine_bus():
    # Voltages on kept nodes with zero injection at eliminated nodes must
    # draw the same kept-node currents through the reduced matrix.
    case = get_case("case9")
    aug = augment_internal_nodes(build_ybus(case), case).matrix
    keep = list(range(9, 12))
    elim = list(range(9))
    red = kron_reduce(aug, keep)
    rng = np.random.default_rng(5)
    for _ in range(5):
        v_keep = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        v_elim = -np.linalg.solve(aug[np.ix_(elim, elim)], aug[np.ix_(elim, keep)] @ v_keep)
        i_full = aug[np.ix_(keep, keep)] @ v_keep + aug[np.ix_(keep, elim)] @ v_elim
        assert np.allclose(red @ v_keep, i_full, atol=1e-12)


def _random_network(seed, n):
    # Connected susceptance-only network: spanning tree plus extra edges.
    rng = np.random.default_rng(seed)
    y = np.zeros((n, n), dtype=complex)

    def add(i, j, b):
        y[i, j] += 1j * b
        y[j, i] += 1j * b
        y[i, i] -= 1j * b
        y[j, j] -= 1j * b

    for j in range(1, n):
        add(int(rng.integers(0, j)), j, rng.uniform(0.5, 2.0))
    for _ in range(n):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            add(int(i), int(j), rng.uniform(0.5, 2.0))
    # Small shunts keep every principal submatrix comfortably nonsingular.
    y -= 1j * np.diag(rng.uniform(0.05, 0.2, size=n))
    return y


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_kron_composes_and_preserves_symmetry(seed):
    y = _random_network(seed, 8)
    once = kron_reduce(kron_reduce(y, [0, 1, 2, 3, 4, 5, 6]), [0, 1, 2, 3, 4, 5])
    both = kron_reduce(y, [0, 1, 2, 3, 4, 5])
    scale = np.abs(both).max()
    assert np.allclose(once, both, atol=1e-10 * scale)
    assert np.allclose(both, both.T, atol=1e-12 * scale)


def test_kron_singular_block_rejected():
    # Eliminated nodes {2, 3} form an island: their block is singular.
    y = np.zeros((4, 4), dtype=complex)
    y[0, 0] = y[1, 1] = -1j
    y[0, 1] = y[1, 0] = 1j
    y[2, 2] = y[3, 3] = -1j
    y[2, 3] = y[3, 2] = 1j
    with pytest.raises(SingularMatrixError):
        kron_reduce(y, [0, 1])


def test_participation_single_source():
    case = single_bus_single_gen()
    aug = augment_internal_nodes(build_ybus(case), case)
    d = frequency_participation(aug)
    assert d.d.shape == (1, 1)
    assert d.d[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_participation_symmetric_pair():
    case = parse_case(
        json.dumps(
            {
                "base_mva": 100.0,
                "buses": [
                    {"id": 1, "kind": "slack", "v_set": 1.0},
                    {"id": 2, "kind": "pv", "v_set": 1.0},
                ],
                "branches": [{"from_bus": 1, "to_bus": 2, "x": 0.4}],
                "generators": [
                    {"bus": 1, "h": 3.0, "xd_p": 0.2},
                    {"bus": 2, "h": 3.0, "xd_p": 0.2},
                ],
            }
        )
    )
    aug = augment_internal_nodes(build_ybus(case), case)
    d = frequency_participation(aug).d
    # Oracle: direct 2x2 inversion of the bus susceptance block.
    b_ext = aug.matrix[:2, :2].imag
    b_g = aug.matrix[:2, 2:].imag
    expected = -np.linalg.inv(b_ext) @ b_g
    assert np.allclose(d, expected, atol=1e-13)
    a = d[0, 0]
    assert 0.5 < a <= 1.0
    assert d[0, 1] == pytest.approx(1.0 - a, abs=1e-12)
    assert d[1, 0] == pytest.approx(1.0 - a, abs=1e-12)
    assert d[1, 1] == pytest.approx(a, abs=1e-12)
    assert np.allclose(d.sum(axis=1), 1.0, atol=1e-12)


def test_participation_row_sums_lossless_nine_bus():
    d = get_analysis("case9_lossless").participation.d
    assert np.allclose(d.sum(axis=1), 1.0, atol=1e-9)
