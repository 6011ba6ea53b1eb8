"""Site/momentum indexing and circulant Fourier transforms on periodic cubic lattices.

Offsets and momenta are plain tuples of ints; :class:`LatticeShape` is the single
authority for reducing, negating and enumerating them.  Momentum-resolved kernels
are stored as arrays of shape ``(n_sites, s, s)`` whose first axis runs over
``LatticeShape.momenta()`` in row-major order.

Phase convention: ``phase(n, k) = exp(+2pi i sum_i n_i k_i / N_i)``.  The
forward circulant transform carries the conjugate phase, the inverse carries
``phase/N``, so the two are exact inverses in any dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "LatticeShape",
    "phase",
    "fourier_circulant",
    "inverse_fourier",
]


@dataclass(frozen=True)
class LatticeShape:
    """Periodic cubic lattice with ``dims`` sites per axis and ``spin`` modes per site."""

    dims: tuple[int, ...]
    spin: int = 1

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if not 1 <= len(self.dims) <= 3:
            raise ValueError(f"supported dimensions are 1..3, got {len(self.dims)}")
        if any(n < 2 for n in self.dims):
            raise ValueError(f"every axis needs at least 2 sites, got {self.dims}")
        if self.spin < 1:
            raise ValueError(f"spin count must be >= 1, got {self.spin}")

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return self.n_sites * self.spin

    # -- offset / momentum arithmetic -------------------------------------

    def _check(self, idx: Iterable[int]) -> tuple[int, ...]:
        idx = tuple(int(c) for c in idx)
        if len(idx) != self.d:
            raise ValueError(f"index {idx} has {len(idx)} components, lattice has {self.d}")
        return idx

    def reduce(self, offset: Iterable[int]) -> tuple[int, ...]:
        """Reduce an offset (or momentum) componentwise modulo the axis sizes."""
        return tuple(c % n for c, n in zip(self._check(offset), self.dims))

    def negate(self, offset: Iterable[int]) -> tuple[int, ...]:
        return tuple((n - c) % n for c, n in zip(self._check(offset), self.dims))

    def add(self, a: Iterable[int], b: Iterable[int]) -> tuple[int, ...]:
        return tuple((x + y) % n for x, y, n in zip(self._check(a), self._check(b), self.dims))

    def signed(self, offset: Iterable[int]) -> tuple[int, ...]:
        """Minimal-magnitude signed representative (ties resolve to the positive one)."""
        out = []
        for c, n in zip(self.reduce(offset), self.dims):
            out.append(c if c <= n // 2 else c - n)
        return tuple(out)

    def is_self_conjugate(self, k: Iterable[int]) -> bool:
        return self.reduce(k) == self.negate(k)

    # -- momentum grid ------------------------------------------------------

    @cached_property
    def _momenta(self) -> np.ndarray:
        return np.stack(np.unravel_index(np.arange(self.n_sites), self.dims), axis=1)

    def momenta(self) -> np.ndarray:
        """All momentum index tuples as an ``(n_sites, d)`` int array, row-major order."""
        return self._momenta

    def momentum_index(self, k: Iterable[int]) -> int:
        return int(np.ravel_multi_index(self.reduce(k), self.dims))

    @cached_property
    def negation_table(self) -> np.ndarray:
        """``negation_table[i]`` is the flat index of ``-k`` for flat momentum ``i``."""
        neg = (-self._momenta) % np.asarray(self.dims)
        return np.ravel_multi_index(tuple(neg.T), self.dims)

    @cached_property
    def self_conjugate_mask(self) -> np.ndarray:
        return self.negation_table == np.arange(self.n_sites)

    def phases(self, offset: Iterable[int]) -> np.ndarray:
        """``exp(+2pi i n.k)`` for one offset against every momentum on the grid.

        The per-axis products are reduced mod N_i in integer arithmetic before
        the angle is formed, so the phase stays accurate on large lattices.
        """
        dims = np.asarray(self.dims)
        n = np.asarray(self._check(offset), dtype=np.int64)
        frac = ((self._momenta * n) % dims) / dims
        return np.exp(2j * np.pi * frac.sum(axis=1))


def phase(n: Iterable[int], k: Iterable[int], shape: LatticeShape) -> complex:
    """Unit-modulus plane-wave factor ``exp(+2pi i sum_i n_i k_i / N_i)``."""
    nv = shape._check(n)
    kv = shape._check(k)
    frac = sum((a * b) % d / d for a, b, d in zip(nv, kv, shape.dims))
    return complex(np.exp(2j * np.pi * frac))


def fourier_circulant(
    couplings: Mapping[tuple[int, ...], np.ndarray], shape: LatticeShape
) -> np.ndarray:
    """Momentum kernel of a finite-support circulant: ``X_k = sum_n conj(phase(n,k)) X_n``.

    Offsets colliding after modular reduction make the circulant ambiguous and
    raise ``ValueError``.  The sum runs over the support only, never the lattice.
    """
    s = shape.spin
    out = np.zeros((shape.n_sites, s, s), dtype=complex)
    seen: set[tuple[int, ...]] = set()
    for offset, mat in couplings.items():
        red = shape.reduce(offset)
        if red in seen:
            raise ValueError(f"support collision after modular reduction at offset {red}")
        seen.add(red)
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (s, s):
            raise ValueError(f"coupling at {offset} has shape {mat.shape}, expected {(s, s)}")
        out += shape.phases(red).conj()[:, None, None] * mat
    return out


def inverse_fourier(kernel: np.ndarray, shape: LatticeShape) -> dict[tuple[int, ...], np.ndarray]:
    """Offset map of a full-grid momentum kernel: ``X_n = (1/N) sum_k phase(n,k) X_k``."""
    kernel = np.asarray(kernel, dtype=complex)
    if kernel.shape != (shape.n_sites, shape.spin, shape.spin):
        raise ValueError(
            f"kernel must cover the full momentum grid with shape "
            f"{(shape.n_sites, shape.spin, shape.spin)}, got {kernel.shape}"
        )
    out: dict[tuple[int, ...], np.ndarray] = {}
    for flat in range(shape.n_sites):
        n = tuple(int(c) for c in np.unravel_index(flat, shape.dims))
        out[n] = np.tensordot(shape.phases(n), kernel, axes=(0, 0)) / shape.n_sites
    return out
