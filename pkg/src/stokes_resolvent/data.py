"""Deterministic pseudo-random band-limited data for tests, sweeps and demos."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .field import (
    Field,
    RhsTriple,
    SlabGrid,
    TorusGrid,
    bwd,
    component_parity,
    lq_norm,
)

__all__ = [
    "SPECTRA",
    "band_limited_coefficients",
    "random_field",
    "random_rhs",
    "random_slab_field",
    "random_slab_rhs",
    "flip_vertical",
]

SPECTRA = ("flat", "smooth")
SMOOTH_SIGMA = 2.0


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def band_limited_coefficients(
    grid: TorusGrid, components: tuple, rng, spectrum: str = "flat", zero_mean: bool = False
) -> np.ndarray:
    """
    Random coefficients supported on ``|k index|_inf <= n/4`` per axis.

    ``spectrum="smooth"`` weights each mode by ``exp(-|k|^2 / (2 sigma^2))``
    with ``sigma = 2`` (integer mode indices).
    """
    if spectrum not in SPECTRA:
        raise ValueError(f"unknown spectrum {spectrum!r}; expected one of {SPECTRA}")
    rng = _rng(rng)
    shape = tuple(components) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    idx = np.meshgrid(*[grid.index_wavenumbers(a) for a in range(grid.d)], indexing="ij")
    support = np.logical_and.reduce([np.abs(k) <= n // 4 for k, n in zip(idx, grid.shape)])
    c = c * support
    if spectrum == "smooth":
        r2 = sum(k.astype(float) ** 2 for k in idx)
        c = c * np.exp(-r2 / (2 * SMOOTH_SIGMA**2))
    if zero_mean:
        c[(Ellipsis,) + (0,) * grid.d] = 0.0
    return c


def _real_field(grid: TorusGrid, components: tuple, rng, spectrum: str, zero_mean: bool) -> np.ndarray:
    c = band_limited_coefficients(grid, components, rng, spectrum, zero_mean)
    return bwd(c, grid).real


def random_field(
    grid: TorusGrid,
    rank: int,
    seed=None,
    spectrum: str = "flat",
    zero_mean: bool = False,
    normalize: bool = True,
) -> Field:
    """Real band-limited field of the given tensor rank, unit ``L^2`` norm by default."""
    comps = (grid.d,) * rank
    v = _real_field(grid, comps, _rng(seed), spectrum, zero_mean)
    f = Field(grid, v)
    if normalize:
        nrm = lq_norm(f, 2)
        if nrm > 0:
            f = f * (1.0 / nrm)
    return f


def random_rhs(
    grid: TorusGrid,
    seed=None,
    parts: Iterable[str] = ("F", "f", "g"),
    spectrum: str = "flat",
) -> RhsTriple:
    """Independent unit-norm entries for each name in ``parts``; ``g`` is mean-zero."""
    rng = _rng(seed)
    parts = set(parts)
    F = random_field(grid, 1, rng, spectrum) if "F" in parts else None
    f = random_field(grid, 2, rng, spectrum) if "f" in parts else None
    g = random_field(grid, 0, rng, spectrum, zero_mean=True) if "g" in parts else None
    return RhsTriple(F, f, g, grid=grid)


def flip_vertical(arr: np.ndarray) -> np.ndarray:
    """Samples of ``v(x', -x_d)`` on a torus whose last axis is vertical."""
    n = arr.shape[-1]
    return arr[..., (-np.arange(n)) % n]


def random_slab_field(
    slab: SlabGrid,
    rank: int,
    seed=None,
    spectrum: str = "flat",
    zero_mean: bool = False,
    normalize: bool = True,
    signs: Optional[np.ndarray] = None,
) -> Field:
    """
    Slab restriction of a band-limited field on the extended torus that has
    the reflection parities of :func:`component_parity`.

    Odd components vanish at ``x_d = 0`` and ``x_d = H``.
    """
    ext = slab.extended()
    d = slab.d
    comps = (d,) * rank
    v = _real_field(ext, comps, _rng(seed), spectrum, zero_mean)
    if signs is None:
        signs = component_parity(d, rank)
    s = np.asarray(signs, dtype=float).reshape(np.shape(signs) + (1,) * d)
    v = 0.5 * (v + s * flip_vertical(v))
    f = Field(slab, v[..., : slab.n_vertical])
    if normalize:
        nrm = lq_norm(f, 2)
        if nrm > 0:
            f = f * (1.0 / nrm)
    return f


def random_slab_rhs(
    slab: SlabGrid,
    seed=None,
    parts: Iterable[str] = ("F", "f", "g"),
    spectrum: str = "flat",
) -> RhsTriple:
    """Slab data that extends to the torus with exact parities; ``g`` mean-zero there."""
    rng = _rng(seed)
    parts = set(parts)
    F = random_slab_field(slab, 1, rng, spectrum) if "F" in parts else None
    f = random_slab_field(slab, 2, rng, spectrum) if "f" in parts else None
    g = random_slab_field(slab, 0, rng, spectrum, zero_mean=True) if "g" in parts else None
    return RhsTriple(F, f, g, grid=slab)
