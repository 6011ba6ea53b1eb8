"""Brute-force many-body verification on tiny lattices.

The full Fock-space Hamiltonian of a coupling set is assembled in the
occupation-number basis and diagonalized exactly, giving ground-state
correlators that are independent of all momentum-space machinery.  Mode
ordering is site-major then spin: mode ``i = flat_site * s + spin_index``, and
bit ``i`` of a basis-state integer is the occupation of mode ``i``.

Jordan-Wigner sign strings run over modes of lower index, so
``b_i |x> = (-1)^{#occupied modes < i} |x without i>``.  The Hamiltonian is
built by applying this rule vectorized over the whole basis (one scatter per
quadratic term), which is algebraically identical to multiplying the dense
kron-string operator matrices but fast enough for fifty desk-scale models.
Everything stays dense; the hard cap is 14 modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lattice import LatticeShape
from .model import CouplingSet
from .solver import RealSpaceCorrelators

__all__ = [
    "MODE_CAP",
    "FockOperatorSet",
    "ExactGroundState",
    "ComparisonResult",
    "fock_operators",
    "build_fock_hamiltonian",
    "exact_ground_correlators",
    "translation_operator",
    "evolve_state",
    "correlators_from_vector",
    "invariant_from_correlators",
    "compare_with_quasifree",
]

MODE_CAP = 14


def _check_cap(n_modes: int) -> None:
    if n_modes > MODE_CAP:
        raise ValueError(f"{n_modes} modes exceeds the dense Fock-space cap of {MODE_CAP}")


def _bit_tables(n_modes: int):
    """Occupations and below-mode parities for every basis state.

    Returns ``bits[x, i]`` (occupation of mode i in state x) and ``par[x, i]``
    (+-1, the Jordan-Wigner sign for acting with mode i on state x).
    """
    states = np.arange(1 << n_modes)
    bits = (states[:, None] >> np.arange(n_modes)[None, :]) & 1
    below = np.cumsum(bits, axis=1) - bits
    return bits.astype(np.int8), (1 - 2 * (below & 1)).astype(np.int8)


@dataclass(frozen=True)
class FockOperatorSet:
    """Dense annihilation matrices for every mode, kron-built with sign strings."""

    n_modes: int
    annihilators: tuple[np.ndarray, ...]

    def creator(self, i: int) -> np.ndarray:
        return self.annihilators[i].conj().T


def fock_operators(n_modes: int) -> FockOperatorSet:
    """Dense Jordan-Wigner operator matrices (memory grows as Ns 4^Ns; keep Ns small)."""
    _check_cap(n_modes)
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    sz = np.diag([1.0, -1.0])
    eye = np.eye(2)
    ops = []
    for i in range(n_modes):
        mat = np.array([[1.0]])
        # kron factors ordered most-significant mode first so bit i <-> mode i
        for j in range(n_modes - 1, -1, -1):
            mat = np.kron(mat, lower if j == i else (sz if j < i else eye))
        ops.append(mat)
    return FockOperatorSet(n_modes=n_modes, annihilators=tuple(ops))


def _mode_index(shape: LatticeShape, site: tuple[int, ...], spin: int) -> int:
    return int(np.ravel_multi_index(site, shape.dims)) * shape.spin + spin


def build_fock_hamiltonian(c: CouplingSet) -> np.ndarray:
    """Dense Fock-space matrix of the quadratic Hamiltonian defined by ``c``."""
    shape = c.shape
    ns = shape.n_modes
    _check_cap(ns)
    s = shape.spin
    dim = 1 << ns
    bits, par = _bit_tables(ns)
    states = np.arange(dim)
    h = np.zeros((dim, dim), dtype=complex)

    def scatter_bdag_b(i, j, coef):
        if i == j:
            sel = bits[:, i] == 1
            h[states[sel], states[sel]] += coef
            return
        sel = (bits[:, j] == 1) & (bits[:, i] == 0)
        x = states[sel]
        sign = par[sel, j] * par[sel, i] * (-1 if j < i else 1)
        h[x ^ (1 << j) ^ (1 << i), x] += coef * sign

    def scatter_bdag_bdag(t, i, j, coef):
        if i == j:
            return
        sel = (bits[:, j] == 0) & (bits[:, i] == 0)
        x = states[sel]
        sign = par[sel, j] * par[sel, i] * (-1 if j < i else 1)
        t[x | (1 << j) | (1 << i), x] += coef * sign

    sites = [tuple(int(v) for v in t) for t in np.ndindex(*shape.dims)]
    for offset, mat in c.hop.items():
        for m in sites:
            n = shape.reduce(tuple(mc - oc for mc, oc in zip(m, offset)))
            for sj in range(s):
                for sl in range(s):
                    if mat[sj, sl] != 0:
                        scatter_bdag_b(_mode_index(shape, m, sj), _mode_index(shape, n, sl), mat[sj, sl])

    if c.pair:
        t = np.zeros((dim, dim), dtype=complex)
        for offset, mat in c.pair.items():
            for m in sites:
                n = shape.reduce(tuple(mc - oc for mc, oc in zip(m, offset)))
                for sj in range(s):
                    for sl in range(s):
                        if mat[sj, sl] != 0:
                            scatter_bdag_bdag(t, _mode_index(shape, m, sj),
                                              _mode_index(shape, n, sl), 0.5 * mat[sj, sl])
        h += t + t.conj().T

    herm = np.abs(h - h.conj().T).max()
    if herm > 1e-12:
        raise ValueError(f"assembled Fock Hamiltonian is not Hermitian (residual {herm:.2e})")
    return h


def _apply_annihilate(vec: np.ndarray, i: int, bits, par) -> np.ndarray:
    out = np.zeros_like(vec)
    src = np.nonzero(bits[:, i] == 1)[0]
    out[src ^ (1 << i)] = par[src, i] * vec[src]
    return out


def _apply_create(vec: np.ndarray, i: int, bits, par) -> np.ndarray:
    out = np.zeros_like(vec)
    src = np.nonzero(bits[:, i] == 0)[0]
    out[src | (1 << i)] = par[src, i] * vec[src]
    return out


def correlators_from_vector(vec: np.ndarray, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    """All-mode-pair ``<b+_i b_j>`` and ``<b_i b_j>`` matrices for one state vector."""
    bits, par = _bit_tables(n_modes)
    ann = [_apply_annihilate(vec, i, bits, par) for i in range(n_modes)]
    cre = [_apply_create(vec, i, bits, par) for i in range(n_modes)]
    bdag_b = np.empty((n_modes, n_modes), dtype=complex)
    bb = np.empty((n_modes, n_modes), dtype=complex)
    for i in range(n_modes):
        for j in range(n_modes):
            bdag_b[i, j] = np.vdot(ann[i], ann[j])
            bb[i, j] = np.vdot(cre[i], ann[j])
    return bdag_b, bb


@dataclass(frozen=True)
class ExactGroundState:
    """Exact diagonalization summary: lowest energy, gap to the next level,
    ground vector(s), and all two-point functions of the (possibly averaged)
    ground state."""

    energy: float
    gap_above: float
    degenerate: bool
    degeneracy_dim: int
    vectors: np.ndarray  # (dim, degeneracy_dim)
    bdag_b: np.ndarray   # (Ns, Ns)
    bb: np.ndarray       # (Ns, Ns)


def exact_ground_correlators(
    h: np.ndarray, degeneracy_tol: float = 1e-8, average_degenerate: bool = False
) -> ExactGroundState:
    """Full dense eigendecomposition and ground-state correlators.

    Degeneracy is judged relative to the spectral width.  For a degenerate
    ground space the correlators of a single arbitrary vector are not
    canonical; with ``average_degenerate`` they are averaged over an
    orthonormal basis of the ground space (the maximally mixed ground state).
    """
    evals, evecs = np.linalg.eigh(h)
    n_modes = int(round(np.log2(h.shape[0])))
    width = max(1.0, float(evals[-1] - evals[0]))
    cluster = np.nonzero(evals - evals[0] <= degeneracy_tol * width)[0]
    deg_dim = int(cluster[-1]) + 1
    degenerate = deg_dim > 1
    gap_above = float(evals[deg_dim] - evals[0]) if deg_dim < len(evals) else 0.0

    take = deg_dim if (average_degenerate and degenerate) else 1
    pieces = [correlators_from_vector(np.ascontiguousarray(evecs[:, a]), n_modes) for a in range(take)]
    bdag_b = sum(p[0] for p in pieces) / take
    bb = sum(p[1] for p in pieces) / take
    return ExactGroundState(
        energy=float(evals[0]),
        gap_above=gap_above,
        degenerate=degenerate,
        degeneracy_dim=deg_dim,
        vectors=evecs[:, :deg_dim].copy(),
        bdag_b=bdag_b,
        bb=bb,
    )


def translation_operator(shape: LatticeShape, axis: int = 0) -> np.ndarray:
    """Fock-space one-site translation along ``axis`` (a signed permutation matrix)."""
    ns = shape.n_modes
    _check_cap(ns)
    step = tuple(1 if a == axis else 0 for a in range(shape.d))
    sites = [tuple(int(v) for v in t) for t in np.ndindex(*shape.dims)]
    mode_map = np.empty(ns, dtype=int)
    for site in sites:
        for sp in range(shape.spin):
            mode_map[_mode_index(shape, site, sp)] = _mode_index(shape, shape.add(site, step), sp)
    dim = 1 << ns
    out = np.zeros((dim, dim))
    for x in range(dim):
        occupied = [i for i in range(ns) if (x >> i) & 1]
        mapped = [int(mode_map[i]) for i in occupied]
        y = 0
        for i in mapped:
            y |= 1 << i
        # parity of the permutation sorting the mapped mode list
        perm = np.argsort(mapped, kind="stable")
        sign = 1
        seen = [False] * len(perm)
        for start in range(len(perm)):
            if seen[start]:
                continue
            length = 0
            a = start
            while not seen[a]:
                seen[a] = True
                a = perm[a]
                length += 1
            if length % 2 == 0:
                sign = -sign
        out[y, x] = sign
    return out


def evolve_state(h: np.ndarray, t: float, vec: np.ndarray) -> np.ndarray:
    """``exp(-i t h) vec`` through the eigendecomposition of ``h``."""
    evals, evecs = np.linalg.eigh(h)
    return evecs @ (np.exp(-1j * t * evals) * (evecs.conj().T @ vec))


def invariant_from_correlators(bdag_b: np.ndarray, shape: LatticeShape) -> dict[tuple[int, ...], float]:
    """Site-averaged ``Im sum_j <b+_m b_{m+n}>`` per offset, from Fock correlators."""
    sites = [tuple(int(v) for v in t) for t in np.ndindex(*shape.dims)]
    out = {}
    for raw in np.ndindex(*shape.dims):
        n = tuple(int(v) for v in raw)
        acc = 0.0
        for m in sites:
            tgt = shape.add(m, n)
            for sp in range(shape.spin):
                acc += bdag_b[_mode_index(shape, m, sp), _mode_index(shape, tgt, sp)].imag
        out[n] = acc / shape.n_sites
    return out


class ComparisonResult(NamedTuple):
    max_correlator_dev: float
    energy_rel_dev: float | None


def compare_with_quasifree(
    exact: ExactGroundState,
    rc: RealSpaceCorrelators,
    energy: float | None = None,
    allow_degenerate: bool = False,
) -> ComparisonResult:
    """Entrywise deviation between Fock and momentum-space ground-state correlators.

    ``rc`` must cover every lattice offset.  Degenerate exact ground states are
    rejected unless explicitly allowed (their single-vector correlators are not
    canonical).
    """
    if exact.degenerate and not allow_degenerate:
        raise ValueError("degenerate exact ground state; correlators are not comparable")
    shape = rc.shape
    ns = shape.n_modes
    sites = [tuple(int(v) for v in t) for t in np.ndindex(*shape.dims)]
    qf_bdag_b = np.empty((ns, ns), dtype=complex)
    qf_bb = np.empty((ns, ns), dtype=complex)
    for x in sites:
        for y in sites:
            n = shape.reduce(tuple(yc - xc for yc, xc in zip(y, x)))
            cb = rc.bdag_b[n]
            db = rc.bb[n]
            for sj in range(shape.spin):
                for sl in range(shape.spin):
                    qf_bdag_b[_mode_index(shape, x, sj), _mode_index(shape, y, sl)] = cb[sj, sl]
                    qf_bb[_mode_index(shape, x, sj), _mode_index(shape, y, sl)] = db[sj, sl]
    dev = max(
        float(np.abs(qf_bdag_b - exact.bdag_b).max()),
        float(np.abs(qf_bb - exact.bb).max()),
    )
    e_dev = None
    if energy is not None:
        e_dev = abs(energy - exact.energy) / max(1.0, abs(exact.energy))
    return ComparisonResult(max_correlator_dev=dev, energy_rel_dev=e_dev)
