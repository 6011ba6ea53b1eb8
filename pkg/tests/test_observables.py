import numpy as np
import pytest

from quasifree import (
    CouplingSet,
    LatticeShape,
    ModelParams,
    apply_bogoliubov_map,
    block_entropy,
    catalog,
    diagonalize,
    entropy_scan,
    evolve_quench,
    ground_covariance,
    invariant_map,
    random_model,
    random_ph_map,
    real_space,
    spectral_gap,
    summed_imaginary_invariant,
    verify_criticality,
)
from quasifree.observables import asymmetry_diagnostics
from quasifree.solver import CovarianceKernel

from conftest import make_twisted


def test_invariant_vanishes_for_p_model(p_model_64):
    inv = invariant_map(ground_covariance(diagonalize(p_model_64)))
    assert max(abs(v) for v in inv.values()) < 1e-12


def test_invariant_at_zero_offset_is_zero():
    cs = random_model(LatticeShape((12,), 2), reach=2, pairing=True, seed=0)
    inv = invariant_map(ground_covariance(diagonalize(cs)))
    assert abs(inv[(0,)]) < 1e-14


def test_invariant_antisymmetry():
    cs = make_twisted(16, np.pi / 2)
    shape = cs.shape
    inv = invariant_map(ground_covariance(diagonalize(cs)))
    for n, v in inv.items():
        assert abs(v + inv[shape.negate(n)]) < 1e-12


def test_invariant_agrees_with_direct_sum():
    # independent evaluation: (1/N) sum_k sin(2 pi k n / N) tr g_k
    cs = make_twisted(20, np.pi / 2)
    cov = ground_covariance(diagonalize(cs))
    inv = invariant_map(cov)
    tr = cov.trace_kernel()
    n_sites = cs.shape.n_sites
    for n in range(n_sites):
        direct = sum(np.sin(2 * np.pi * k * n / n_sites) * tr[k] for k in range(n_sites)) / n_sites
        assert abs(inv[(n,)] - direct) < 1e-12


def test_invariant_matches_summed_imaginary_route():
    cs = random_model(LatticeShape((10,), 2), reach=2, pairing=True, seed=5)
    cov = ground_covariance(diagonalize(cs))
    via_fft = invariant_map(cov)
    via_rc = summed_imaginary_invariant(real_space(cov, [(n,) for n in range(10)]))
    for n, v in via_rc.items():
        assert abs(v - via_fft[n]) < 1e-12


def test_twisted_chain_invariant_is_large(twisted_critical_64):
    inv = invariant_map(ground_covariance(diagonalize(twisted_critical_64)))
    assert abs(inv[(1,)]) > 0.1


def test_spectral_gap_examples(p_model_64, twisted_critical_64):
    onsite = CouplingSet(LatticeShape((6,), 1), {(0,): [[0.3]]}, {})
    assert spectral_gap(diagonalize(onsite)) == pytest.approx(0.3, abs=1e-13)
    assert spectral_gap(diagonalize(p_model_64)) == pytest.approx(1.0, abs=1e-12)
    assert spectral_gap(diagonalize(twisted_critical_64)) < 1e-12


def test_asymmetry_empty_for_symmetric_gapped_model(p_model_64):
    entries, indeterminate = asymmetry_diagnostics(diagonalize(p_model_64))
    assert entries == []
    assert indeterminate == []


def test_asymmetry_sign_pattern_of_quarter_twist():
    n = 16
    sol = diagonalize(make_twisted(n, np.pi / 2))
    entries, indeterminate = asymmetry_diagnostics(sol)
    table = {k[0]: m for k, _, m, _ in entries}
    for k in range(1, n):
        if k in (0, n // 2):
            continue
        expected = 1.0 if k < n // 2 else -1.0  # sign of sin(2 pi k / n)
        assert table[k] == expected
    # band zeros sit at the self-conjugate momenta and are flagged indeterminate
    assert {(0,), (n // 2,)} == {k for k, _ in indeterminate}


def test_asymmetry_zero_at_self_conjugate_momenta():
    for seed in range(6):
        cs = random_model(LatticeShape((12,), 2), reach=2, pairing=True, seed=seed)
        sol = diagonalize(cs)
        entries, _ = asymmetry_diagnostics(sol, threshold=1e-6)
        mask = cs.shape.self_conjugate_mask
        selfconj = {tuple(k) for k in cs.shape.momenta()[mask]}
        assert all(k not in selfconj for k, *_ in entries)


def test_verify_consistent_gapped(p_model_64):
    rep = verify_criticality(p_model_64, size_doubling=True)
    assert rep.verdict == "consistent-gapped"
    assert not rep.falsification
    assert rep.max_abs_invariant < 1e-10
    assert rep.gap == pytest.approx(1.0, abs=1e-12)
    assert rep.doubled_gap == pytest.approx(1.0, abs=1e-12)
    assert rep.dims == (64,)


def test_verify_twisted_chain_fires_both_sides(twisted_critical_64):
    rep = verify_criticality(twisted_critical_64)
    assert rep.verdict == "gapless-by-spectrum"
    assert rep.max_abs_invariant > 0.1
    assert len(rep.zero_modes) == 4


def sign_asymmetric_bait(n):
    # band sin(kt) + 1/2: crosses zero in the continuum, but a small grid can
    # miss the crossing and look gapped while carrying a nonzero invariant
    return catalog(ModelParams(
        "spinless-general",
        {"a0": 0.5, "a1_im": 0.5},
        LatticeShape((n,), 1),
    ))


def test_verify_detects_falsification_without_doubling():
    cs = sign_asymmetric_bait(4)
    a_k = np.array([0.5, 1.5, 0.5, -0.5])
    sol = diagonalize(cs)
    neg = cs.shape.negation_table
    want = np.sort(np.stack([a_k, -a_k[neg]], 1), 1)
    assert np.abs(want - np.sort(sol.energies, 1)).max() < 1e-12
    rep = verify_criticality(cs, gap_tol=0.3, size_doubling=False)
    assert rep.verdict == "gapless-by-invariant"
    assert rep.falsification


def test_verify_doubling_exposes_the_shrinking_gap():
    rep = verify_criticality(sign_asymmetric_bait(4), gap_tol=0.3, size_doubling=True)
    assert rep.verdict == "gapless-by-spectrum"
    assert not rep.falsification
    assert rep.doubled_gap < 0.3


def test_verify_two_dimensional_gapped_model():
    shape = LatticeShape((6, 6), 1)
    cs = random_model(shape, reach=1, pairing=True, seed=9)
    from quasifree.model import scaled, slope_bound

    cs = scaled(cs, 0.2 / slope_bound(cs))
    # push the model into a clean gap with a strong on-site term
    hop = dict(cs.hop)
    hop[(0, 0)] = hop.get((0, 0), np.zeros((1, 1))) + 2.0 * np.eye(1)
    cs = CouplingSet(shape, hop, cs.pair)
    rep = verify_criticality(cs, size_doubling=True)
    assert rep.verdict == "consistent-gapped"
    assert rep.max_abs_invariant < 1e-12


def test_invariant_preserved_by_maps_and_quenches():
    shape = LatticeShape((16,), 2)
    cs = random_model(shape, reach=2, pairing=True, seed=33)
    cov = ground_covariance(diagonalize(cs))
    inv0 = invariant_map(cov)
    for seed in range(5):
        mapped = apply_bogoliubov_map(cov, random_ph_map(shape, seed=seed))
        inv_m = invariant_map(mapped)
        assert max(abs(inv0[n] - inv_m[n]) for n in inv0) < 1e-9
        h = random_model(shape, reach=1, pairing=True, seed=50 + seed)
        quenched = evolve_quench(cov, h, 0.9 + seed)
        inv_q = invariant_map(quenched)
        assert max(abs(inv0[n] - inv_q[n]) for n in inv0) < 1e-9


def test_block_entropy_of_product_state_is_zero():
    cs = CouplingSet(LatticeShape((16,), 1), {(0,): [[0.7]]}, {})
    cov = ground_covariance(diagonalize(cs))
    for length in (1, 4, 9):
        assert block_entropy(cov, length) == pytest.approx(0.0, abs=1e-10)


def test_block_entropy_bounds_and_errors(p_model_64):
    cov = ground_covariance(diagonalize(p_model_64))
    s = block_entropy(cov, 6)
    assert 0.0 <= s <= 6 * 2 * np.log(2) + 1e-12
    with pytest.raises(ValueError, match="outside"):
        block_entropy(cov, 0)
    with pytest.raises(ValueError, match="outside"):
        block_entropy(cov, 65)


def test_block_entropy_rejects_higher_dimensions():
    cs = random_model(LatticeShape((4, 4), 1), reach=1, pairing=False, seed=0)
    cov = ground_covariance(diagonalize(cs))
    with pytest.raises(ValueError, match="chains"):
        block_entropy(cov, 2)


def test_block_entropy_flags_corrupted_covariance(p_model_64):
    cov = ground_covariance(diagonalize(p_model_64))
    bad_g = cov.g.copy()
    bad_g[3] = 1.5 * np.eye(2)
    bad = CovarianceKernel(shape=cov.shape, g=bad_g, f=cov.f)
    with pytest.raises(ValueError, match="corrupted"):
        block_entropy(bad, 8)


def test_entropy_scan_classifications():
    shape = LatticeShape((96,), 2)
    gapped = catalog(ModelParams("p-model", {"p": 2.0}, shape))
    scan = entropy_scan(ground_covariance(diagonalize(gapped)), range(4, 25))
    assert scan.classification == "area-law"
    assert scan.slope < 0.05

    critical = make_twisted(96, np.pi / 2)
    scan = entropy_scan(ground_covariance(diagonalize(critical)), range(4, 25))
    assert scan.classification == "log-violation"
    assert scan.slope > 0.1
    assert all(b >= a - 1e-12 for a, b in zip(scan.entropies, scan.entropies[1:]))


def test_entropy_scan_needs_enough_points(twisted_critical_64):
    cov = ground_covariance(diagonalize(twisted_critical_64))
    with pytest.raises(ValueError, match="at least 4"):
        entropy_scan(cov, [4, 8])


def test_entropy_scan_parallel_matches_serial(twisted_critical_64):
    cov = ground_covariance(diagonalize(twisted_critical_64))
    a = entropy_scan(cov, range(4, 13))
    b = entropy_scan(cov, range(4, 13), workers=4)
    assert a.entropies == b.entropies
