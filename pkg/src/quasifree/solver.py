"""Momentum-space diagonalization and exact ground-state covariance.

Per momentum the 2s x 2s BdG block ``H_k`` is diagonalized and the Bogoliubov
data is organized in the particle-hole consistent layout

    U_k = [[alpha_k^dag, beta_{-k}^T], [beta_k^dag, alpha_{-k}^T]],

whose first s columns are the designated-branch eigenvectors at ``k`` (energies
``branch[k]``) and whose last s columns are the particle-hole images
``sx conj(.)`` of the designated eigenvectors at ``-k``.  The designated branch
maximizes the particle weight ``|upper components|^2``, which keeps a
number-conserving model's particle bands designated.

The ground state is the Gaussian state with Nambu correlation block

    Gamma_k = <Psi_k Psi_k^dag>,  Psi_k = (b_k, b_{-k}^dag),

computed canonically as the spectral projector onto the positive-energy
subspace of ``H_k`` (zero modes, |energy| below tolerance, enter with weight
1/2, the unique particle-hole symmetric choice).  Stored kernels:

    g_k^{jj'} = <b_k^{j dag} b_k^{j'}>   (occupation kernel, eigenvalues in [0,1])
    f_k^{jj'} = <b_k^j b_{-k}^{j'}>      (pairing kernel, f_k = -f_{-k}^T)

so real-space correlators are plain inverse transforms:
``<b+_m b_{m+n}> = (1/N) sum_k e^{+i k.n} g_k`` and
``<b_m b_{m+n}> = (1/N) sum_k e^{-i k.n} f_k``.

A second, independent route assembles the same kernels from the Bogoliubov
coefficients and branch signs (``covariance_from_coefficients``); the two must
agree and the cross-check is part of the test suite.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .lattice import LatticeShape
from .model import CouplingSet, bdg_blocks, random_model

__all__ = [
    "BogoliubovSolution",
    "CovarianceKernel",
    "RealSpaceCorrelators",
    "diagonalize",
    "spinless_closed_form",
    "ground_covariance",
    "covariance_from_coefficients",
    "real_space",
    "apply_bogoliubov_map",
    "validate_ph_map",
    "random_ph_map",
    "evolve_quench",
    "ground_energy",
    "constraint_residuals",
    "parallel_map",
]

ZERO_MODE_TOL = 1e-9


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Map ``fn`` over ``items`` with results in input order regardless of scheduling."""
    if not workers or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _ph_swap(shape: LatticeShape) -> np.ndarray:
    s = shape.spin
    sx = np.zeros((2 * s, 2 * s))
    sx[:s, s:] = np.eye(s)
    sx[s:, :s] = np.eye(s)
    return sx


def _ph_image(w: np.ndarray) -> np.ndarray:
    """Particle-hole partner of eigenvector columns: swap halves and conjugate."""
    s = w.shape[0] // 2
    return np.concatenate([w[s:].conj(), w[:s].conj()], axis=0)


def _resolve_clusters(lam: np.ndarray, vecs: np.ndarray, s: int, rtol: float = 1e-12) -> np.ndarray:
    """Within each degenerate eigenvalue cluster, rotate to particle-weight extremal vectors."""
    scale = max(1.0, float(np.abs(lam).max()))
    start = 0
    for stop in range(1, len(lam) + 1):
        if stop == len(lam) or lam[stop] - lam[stop - 1] > rtol * scale:
            if stop - start > 1:
                block = vecs[:, start:stop]
                _, rot = np.linalg.eigh(block[:s].conj().T @ block[:s])
                vecs[:, start:stop] = block @ rot[:, ::-1]
            start = stop
    return vecs


@dataclass(frozen=True)
class BogoliubovSolution:
    """Full-grid eigendata of one Hamiltonian.

    ``energies``/``vectors`` are the raw ascending eigendecompositions;
    ``u``/``u_energies`` the particle-hole consistent column layout described in
    the module docstring; ``branch`` = ``u_energies[:, :s]`` are the designated
    one-particle energies; ``alpha``/``beta`` the coefficient matrices
    ``alpha[k][j, l] = alpha^{jl}_k``; ``coef_ok`` flags momenta where the
    designation is canonical (no zero modes in the block).
    """

    shape: LatticeShape
    blocks: np.ndarray      # (M, 2s, 2s)
    energies: np.ndarray    # (M, 2s) ascending
    vectors: np.ndarray     # (M, 2s, 2s) ascending order
    u: np.ndarray           # (M, 2s, 2s)
    u_energies: np.ndarray  # (M, 2s)
    branch: np.ndarray      # (M, s)
    alpha: np.ndarray       # (M, s, s)
    beta: np.ndarray        # (M, s, s)
    coef_ok: np.ndarray     # (M,) bool
    zero_mode_tol: float

    @property
    def gap(self) -> float:
        return float(np.abs(self.energies).min())

    def zero_modes(self) -> list[tuple[tuple[int, ...], int]]:
        """(momentum tuple, eigenvalue slot) for every |energy| below tolerance."""
        hits = np.argwhere(np.abs(self.energies) < self.zero_mode_tol)
        grid = self.shape.momenta()
        return [(tuple(int(c) for c in grid[i]), int(a)) for i, a in hits]


def diagonalize(c: CouplingSet, zero_mode_tol: float = ZERO_MODE_TOL) -> BogoliubovSolution:
    """Hermitian eigendecomposition of every BdG block plus branch designation."""
    shape = c.shape
    s = shape.spin
    blocks = bdg_blocks(c)
    try:
        energies, vectors = np.linalg.eigh(blocks)
    except np.linalg.LinAlgError:
        # locate the offending momentum for the error message
        for i, blk in enumerate(blocks):
            try:
                np.linalg.eigh(blk)
            except np.linalg.LinAlgError as exc:
                k = tuple(int(x) for x in shape.momenta()[i])
                raise np.linalg.LinAlgError(f"eigensolver failed at momentum {k}") from exc
        raise

    m = shape.n_sites
    neg = shape.negation_table
    u = np.empty_like(vectors)
    u_energies = np.empty_like(energies)
    coef_ok = np.ones(m, dtype=bool)

    done = np.zeros(m, dtype=bool)
    for i in range(m):
        if done[i]:
            continue
        j = int(neg[i])
        lam = energies[i].copy()
        vecs = _resolve_clusters(lam, vectors[i].copy(), s)
        has_zero = bool((np.abs(lam) < zero_mode_tol).any())
        pw = np.sum(np.abs(vecs[:s]) ** 2, axis=0)

        if i != j:
            order = np.argsort(-pw, kind="stable")
            des = sorted(order[:s], key=lambda a: lam[a])
            rest = sorted(set(range(2 * s)) - set(des), key=lambda a: -lam[a])
            cols = list(des) + rest
            u[i] = vecs[:, cols]
            u_energies[i] = lam[cols]
            u[j] = np.concatenate([_ph_image(u[i][:, s:]), _ph_image(u[i][:, :s])], axis=1)
            u_energies[j] = np.concatenate([-u_energies[i][s:], -u_energies[i][:s]])
            coef_ok[i] = coef_ok[j] = not has_zero
            done[i] = done[j] = True
        else:
            # self-conjugate momentum: partner columns live in the same block
            if has_zero:
                des = list(range(s, 2 * s))
                rest = list(range(s - 1, -1, -1))
                u[i] = vecs[:, des + rest]
                u_energies[i] = lam[des + rest]
                coef_ok[i] = False
            else:
                pos = [a for a in range(2 * s) if lam[a] > 0]
                if len(pos) != s:
                    raise np.linalg.LinAlgError(
                        f"self-conjugate block lost its +- eigenvalue pairing at flat index {i}"
                    )
                chosen = []
                for a in pos:
                    if pw[a] >= 0.5:
                        chosen.append((lam[a], vecs[:, a]))
                    else:
                        chosen.append((-lam[a], _ph_image(vecs[:, a:a + 1])[:, 0]))
                chosen.sort(key=lambda t: t[0])
                d = np.stack([v for _, v in chosen], axis=1)
                u[i] = np.concatenate([d, _ph_image(d)], axis=1)
                u_energies[i] = np.array([e for e, _ in chosen] + [-e for e, _ in chosen])
            done[i] = True

    branch = u_energies[:, :s].copy()
    alpha = np.conj(np.transpose(u[:, :s, :s], (0, 2, 1)))
    beta = np.conj(np.transpose(u[:, s:, :s], (0, 2, 1)))
    return BogoliubovSolution(
        shape=shape, blocks=blocks, energies=energies, vectors=vectors,
        u=u, u_energies=u_energies, branch=branch, alpha=alpha, beta=beta,
        coef_ok=coef_ok, zero_mode_tol=zero_mode_tol,
    )


def constraint_residuals(sol: BogoliubovSolution) -> dict[str, float]:
    """Max residuals of the canonical-anticommutation and completeness identities.

    anticommutation: alpha_k beta_{-k}^T + beta_k alpha_{-k}^T = 0
    normalization:   alpha_k alpha_k^dag + beta_k beta_k^dag = 1
    completeness:    sum_l S^{l+}_k = alpha_k^dag beta_k + beta_{-k}^T conj(alpha_{-k}) = 0
                     sum_l Z^{l+}_k = alpha_k^dag alpha_k + beta_{-k}^T conj(beta_{-k}) = 1
    """
    neg = sol.shape.negation_table
    a, b = sol.alpha, sol.beta
    an, bn = a[neg], b[neg]
    eye = np.eye(sol.shape.spin)
    at = np.transpose(a, (0, 2, 1))
    bt = np.transpose(b, (0, 2, 1))
    ah = at.conj()
    ant = np.transpose(an, (0, 2, 1))
    bnt = np.transpose(bn, (0, 2, 1))
    return {
        "anticommutation": float(np.abs(a @ bnt + b @ ant).max()),
        "normalization": float(np.abs(a @ np.conj(at) + b @ np.conj(bt) - eye).max()),
        "s_plus": float(np.abs(ah @ b + bnt @ np.conj(an)).max()),
        "z_plus": float(np.abs(ah @ a + bnt @ np.conj(bn) - eye).max()),
    }


def spinless_closed_form(c: CouplingSet) -> np.ndarray:
    """Closed-form one-particle energies for spinless models.

    Per momentum, ``(A_k - A_{-k} + sqrt((A_k + A_{-k})^2 + 4 |B_k|^2)) / 2``;
    together with ``-value(-k)`` this reproduces the 2x2 block eigenvalue pair.
    """
    if c.shape.spin != 1:
        raise ValueError("closed form applies to spinless models only")
    from .lattice import fourier_circulant

    a = fourier_circulant(c.hop, c.shape)[:, 0, 0].real
    b = fourier_circulant(c.pair, c.shape)[:, 0, 0]
    an = a[c.shape.negation_table]
    rad = (a + an) ** 2 + 4.0 * np.abs(b) ** 2
    return (a - an + np.sqrt(np.clip(rad, 0.0, None))) / 2.0


# ---------------------------------------------------------------------------
# covariance kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceKernel:
    """Gaussian state of the lattice: occupation kernel ``g``, pairing kernel ``f``,
    and the zero modes (momentum, eigenvalue slot) filled with weight 1/2."""

    shape: LatticeShape
    g: np.ndarray  # (M, s, s)
    f: np.ndarray  # (M, s, s)
    zero_modes: tuple[tuple[tuple[int, ...], int], ...] = ()

    def gamma(self) -> np.ndarray:
        """Nambu blocks ``[[1 - g_k^T, f_k], [f_k^dag, g_{-k}]]`` (a projector when pure)."""
        s = self.shape.spin
        neg = self.shape.negation_table
        out = np.empty((self.shape.n_sites, 2 * s, 2 * s), dtype=complex)
        out[:, :s, :s] = np.eye(s) - np.transpose(self.g, (0, 2, 1))
        out[:, :s, s:] = self.f
        out[:, s:, :s] = np.conj(np.transpose(self.f, (0, 2, 1)))
        out[:, s:, s:] = self.g[neg]
        return out

    def trace_kernel(self) -> np.ndarray:
        """Spin-traced occupation per momentum (real)."""
        return np.trace(self.g, axis1=1, axis2=2).real


def _kernels_from_gamma(gamma: np.ndarray, shape: LatticeShape, zero_modes=()) -> CovarianceKernel:
    s = shape.spin
    g = gamma[shape.negation_table][:, s:, s:].copy()
    f = gamma[:, :s, s:].copy()
    return CovarianceKernel(shape=shape, g=g, f=f, zero_modes=tuple(zero_modes))


def ground_covariance(sol: BogoliubovSolution, zero_mode_tol: float | None = None) -> CovarianceKernel:
    """Exact ground-state kernels from the positive-energy spectral projector.

    Modes with |energy| below tolerance are occupied with weight 1/2 and listed
    in ``zero_modes``; everything else is filled by energy sign.
    """
    tol = sol.zero_mode_tol if zero_mode_tol is None else zero_mode_tol
    lam, vecs = sol.energies, sol.vectors
    weight = np.where(lam > tol, 1.0, 0.0) + 0.5 * (np.abs(lam) <= tol)
    gamma = (vecs * weight[:, None, :]) @ np.conj(np.transpose(vecs, (0, 2, 1)))
    hits = np.argwhere(np.abs(lam) <= tol)
    grid = sol.shape.momenta()
    zeros = [(tuple(int(c) for c in grid[i]), int(a)) for i, a in hits]
    return _kernels_from_gamma(gamma, sol.shape, zeros)


def covariance_from_coefficients(sol: BogoliubovSolution) -> CovarianceKernel:
    """Independent kernel assembly from Bogoliubov coefficients and branch signs.

    Uses the sign functions ``M_k^l = (sgn L_k^l - sgn L_{-k}^l)/2`` and
    ``P_k^l = (sgn L_k^l + sgn L_{-k}^l)/2`` together with the coefficient
    bilinears S/Z; requires every designated energy to be resolvably nonzero.
    """
    tol = sol.zero_mode_tol
    if (np.abs(sol.branch) <= tol).any() or not sol.coef_ok.all():
        raise ValueError("coefficient route needs a zero-mode-free solution")
    neg = sol.shape.negation_table
    sgn = np.sign(sol.branch)                  # (M, s)
    m_sign = (sgn - sgn[neg]) / 2.0
    p_sign = (sgn + sgn[neg]) / 2.0

    a, b = sol.alpha, sol.beta                 # [k, j(branch), l(spin)]
    an, bn = a[neg], b[neg]

    # (S^{l +-}_k)_{jj'} = conj(a_k^{lj}) b_k^{lj'} +- b_{-k}^{lj} conj(a_{-k}^{lj'})
    s1 = np.einsum("klj,kli->klji", a.conj(), b)
    s2 = np.einsum("klj,kli->klji", bn, an.conj())
    # (Z^{l +-}_{-k})_{jj'} = conj(a_{-k}^{lj}) a_{-k}^{lj'} +- b_k^{lj} conj(b_k^{lj'})
    z1 = np.einsum("klj,kli->klji", an.conj(), an)
    z2 = np.einsum("klj,kli->klji", b, b.conj())

    w_m = (m_sign + 1.0)[:, :, None, None]
    w_p = p_sign[:, :, None, None]
    bb = (w_m * (s1 + s2) + w_p * (s1 - s2)).sum(axis=1)
    bdag_b = (w_m * np.conj(z1 + z2) - w_p * np.conj(z1 - z2)).sum(axis=1)

    return CovarianceKernel(shape=sol.shape, g=0.5 * bdag_b[neg], f=0.5 * bb, zero_modes=())


@dataclass(frozen=True)
class RealSpaceCorrelators:
    """Two-point functions at selected offsets: ``bdag_b[n] = <b+_m b_{m+n}>`` and
    ``bb[n] = <b_m b_{m+n}>`` (s x s matrices over spin)."""

    shape: LatticeShape
    bdag_b: dict[tuple[int, ...], np.ndarray]
    bb: dict[tuple[int, ...], np.ndarray]


def real_space(cov: CovarianceKernel, offsets: Iterable[Iterable[int]]) -> RealSpaceCorrelators:
    """Inverse transforms of the kernels at the requested offsets (direct sums)."""
    shape = cov.shape
    bdag_b = {}
    bb = {}
    for raw in offsets:
        n = shape.reduce(raw)
        ph = shape.phases(n)
        bdag_b[n] = np.tensordot(ph, cov.g, axes=(0, 0)) / shape.n_sites
        bb[n] = np.tensordot(ph.conj(), cov.f, axes=(0, 0)) / shape.n_sites
    return RealSpaceCorrelators(shape=shape, bdag_b=bdag_b, bb=bb)


def validate_ph_map(w: np.ndarray, shape: LatticeShape, tol: float = 1e-10) -> None:
    """Check a per-momentum map is unitary with the particle-hole block structure."""
    s = shape.spin
    if w.shape != (shape.n_sites, 2 * s, 2 * s):
        raise ValueError(f"map must have shape {(shape.n_sites, 2 * s, 2 * s)}, got {w.shape}")
    eye = np.eye(2 * s)
    uerr = np.abs(w @ np.conj(np.transpose(w, (0, 2, 1))) - eye).max()
    if uerr > tol:
        raise ValueError(f"map is not unitary (residual {uerr:.2e})")
    sx = _ph_swap(shape)
    pherr = np.abs(sx @ np.conj(w[shape.negation_table]) @ sx - w).max()
    if pherr > tol:
        raise ValueError(f"map breaks particle-hole structure (residual {pherr:.2e})")


def apply_bogoliubov_map(cov: CovarianceKernel, w: np.ndarray) -> CovarianceKernel:
    """Conjugate the Nambu blocks by a validated translation-invariant Bogoliubov map."""
    validate_ph_map(np.asarray(w, dtype=complex), cov.shape)
    gamma = w @ cov.gamma() @ np.conj(np.transpose(w, (0, 2, 1)))
    return _kernels_from_gamma(gamma, cov.shape, cov.zero_modes)


def random_ph_map(shape: LatticeShape, seed: int, strength: float = 1.0) -> np.ndarray:
    """Random valid Bogoliubov map ``exp(-i * strength * H_k)`` of a seeded Hamiltonian."""
    reach = min(2, (min(shape.dims) - 1) // 2)
    h = random_model(shape, reach=reach, pairing=True, seed=seed)
    lam, vecs = np.linalg.eigh(bdg_blocks(h))
    phases = np.exp(-1j * strength * lam)
    return (vecs * phases[:, None, :]) @ np.conj(np.transpose(vecs, (0, 2, 1)))


def evolve_quench(cov: CovarianceKernel, h: CouplingSet, t: float) -> CovarianceKernel:
    """Sudden-quench evolution: conjugate each Nambu block by ``exp(-i t H'_k)``."""
    if h.shape != cov.shape:
        raise ValueError(f"quench shape {h.shape} does not match state shape {cov.shape}")
    lam, vecs = np.linalg.eigh(bdg_blocks(h))
    phases = np.exp(-1j * t * lam)
    prop = (vecs * phases[:, None, :]) @ np.conj(np.transpose(vecs, (0, 2, 1)))
    gamma = prop @ cov.gamma() @ np.conj(np.transpose(prop, (0, 2, 1)))
    return _kernels_from_gamma(gamma, cov.shape, cov.zero_modes)


def ground_energy(c: CouplingSet) -> float:
    """Ground energy of the normal-ordered Hamiltonian.

    The half-sum of negative BdG eigenvalues is the ground energy of the
    symmetrized (Nambu) form, which sits ``-(1/2) sum_k tr A_k`` below the
    normal-ordered one; the constant is restored here so the value is directly
    comparable with brute-force Fock diagonalization.
    """
    from .lattice import fourier_circulant

    lam = np.linalg.eigvalsh(bdg_blocks(c))
    trace_a = np.trace(fourier_circulant(c.hop, c.shape), axis1=1, axis2=2).real.sum()
    return float(lam[lam < 0].sum() / 2.0 + trace_a / 2.0)
