import numpy as np
import pytest

import monitored_ising as mi
from oracle import SpinChain
from test_dynamics import random_state


def test_product_state_has_zero_entropy():
    st = mi.initial_product_state(8)
    for ell in (1, 2, 4, 7):
        s = mi.entanglement_entropy(st, mi.EntropyRequest(0, ell))
        assert abs(s) < 1e-12


def test_request_validation():
    st = mi.initial_product_state(8)
    with pytest.raises(mi.ContractError):
        mi.entanglement_entropy(st, mi.EntropyRequest(0, 8))
    with pytest.raises(mi.ContractError):
        mi.entanglement_entropy(st, mi.EntropyRequest(0, 0))


def test_default_request_is_quarter_chain():
    st = random_state(8, 0)
    assert mi.entanglement_entropy(st) == pytest.approx(
        mi.entanglement_entropy(st, mi.EntropyRequest(0, 2)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_matches_oracle_reduced_density_matrix(seed):
    L = 8
    st = random_state(L, seed)
    chain = SpinChain(L)
    params = mi.ModelParams(L=L, h=0.7, gamma=1.3)
    rng = mi.trajectory_rng(seed)
    for _, _, psi in chain.run_trajectory(params, 0.002, 1.5, rng):
        pass
    for ell in (1, 2, 3, 4, 6):
        got = mi.entanglement_entropy(st, mi.EntropyRequest(0, ell))
        want = chain.entropy(psi, ell)
        assert got == pytest.approx(want, abs=1e-7)
    # off-origin and wrapped subsystems
    got = mi.entanglement_entropy(st, mi.EntropyRequest(3, 4))
    want = chain.entropy(psi, 4, start=3)
    assert got == pytest.approx(want, abs=1e-7)
    got = mi.entanglement_entropy(st, mi.EntropyRequest(6, 4))
    want = chain.entropy(psi, 4, start=6)
    assert got == pytest.approx(want, abs=1e-7)


def test_complementarity_on_pure_states():
    st = random_state(8, 3)
    for ell in (1, 3, 5):
        s1 = mi.entanglement_entropy(st, mi.EntropyRequest(0, ell))
        s2 = mi.entanglement_entropy(st, mi.EntropyRequest(ell, 8 - ell))
        assert abs(s1 - s2) < 1e-8


def test_bounds_and_eigenvalue_pairing():
    st = random_state(8, 4)
    for ell in (2, 4):
        s = mi.entanglement_entropy(st, mi.EntropyRequest(0, ell))
        assert -1e-10 <= s <= ell * np.log(2) + 1e-8
    g = mi.majorana_covariance(st)
    sub = g[:8, :8]
    mu = np.linalg.eigvalsh(1j * sub).real
    np.testing.assert_allclose(np.sort(mu), np.sort(-mu)[::-1] * -1, atol=1e-8)
    np.testing.assert_allclose(mu + mu[::-1], 0.0, atol=1e-8)


def test_corrupted_covariance_is_rejected():
    st = mi.initial_product_state(6)
    st.C[0, 1] = st.C[1, 0] = 0.9  # breaks purity badly
    with pytest.raises(mi.CorruptedStateError):
        mi.entanglement_entropy(st, mi.EntropyRequest(0, 2))


def test_entropy_from_rows_and_blocks():
    params = mi.ModelParams(L=12, h=0.3, gamma=1.2)
    rows = mi.noclick_rows(params)
    s1 = mi.entanglement_entropy(rows, mi.EntropyRequest(0, 3))
    s2 = mi.entanglement_entropy(rows.dense(), mi.EntropyRequest(0, 3))
    s3 = mi.entanglement_entropy(mi.vacuum_state(params), mi.EntropyRequest(0, 3))
    assert s1 == pytest.approx(s2, abs=1e-12)
    assert s1 == pytest.approx(s3, abs=1e-9)


def test_critical_logarithmic_scaling():
    # gamma = 0, h = 1: S_{L/4} grows as (1/6) ln L (central charge 1/2
    # with both chord endpoints contributing)
    sizes = [32, 64, 128, 256]
    entropies = []
    for L in sizes:
        params = mi.ModelParams(L=L, h=1.0, gamma=0.0)
        rows = mi.noclick_rows(params)
        entropies.append(
            mi.entanglement_entropy(rows, mi.EntropyRequest(0, L // 4)))
    slope = np.polyfit(np.log(sizes), entropies, 1)[0]
    assert abs(slope - 1.0 / 6.0) < 0.15 / 6.0


def test_gapped_vacuum_area_law():
    # far above gamma_c the entropy saturates with L
    h = 0.2
    gamma = 1.5 * mi.critical_rate(h)
    vals = []
    for L in (32, 64, 128):
        rows = mi.noclick_rows(mi.ModelParams(L=L, h=h, gamma=gamma))
        vals.append(mi.entanglement_entropy(rows, mi.EntropyRequest(0, L // 4)))
    assert abs(vals[2] - vals[1]) < 0.02 * vals[1]
