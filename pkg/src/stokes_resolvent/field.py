"""
Grids, sampled fields and spectral plumbing shared by every solver.

Fourier convention
------------------
The forward transform is the mean-preserving one: a field sampled on an
``n_1 x ... x n_d`` torus is written as

    v(x) = sum_k  c_k exp(i k . x),      c_k = fftn(v) / N,

so a constant ``c`` has coefficient ``c`` at ``k = 0`` and ``cos(x_1)`` has
coefficient ``1/2`` at ``k = +-e_1``.  Discrete derivatives multiply by
``i k`` with the Nyquist wavenumber replaced by zero; every operator in the
package is built from that single discrete derivative, which keeps the
discrete identities (Leray projection, divergence, residuals) exact.

Slab layout
-----------
On a :class:`SlabGrid` the horizontal axes come first and the vertical axis
``x_d`` is last.  Vertical nodes are ``0, H/(n-1), ..., H``; the vertical
direction is not periodic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "Sector",
    "ResolventParam",
    "DEFAULT_SECTOR",
    "sector_contains",
    "principal_sqrt",
    "TorusGrid",
    "SlabGrid",
    "Field",
    "RhsTriple",
    "scalar_field",
    "vector_field",
    "tensor_field",
    "fft_forward",
    "fft_backward",
    "spectral_derivative",
    "vertical_derivative_fd4",
    "lq_norm",
    "neg_sobolev_surrogate",
]


# ---------------------------------------------------------------------------
# sector arithmetic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sector:
    """Open sector ``{z != 0 : |arg z| < pi - theta}``, optionally with ``|z| > delta``."""

    theta: float
    delta: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi / 2:
            raise ValueError(f"theta must lie in (0, pi/2), got {self.theta}")
        if self.delta is not None and not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    def __contains__(self, lam) -> bool:
        return sector_contains(lam, self)

    @property
    def half_angle(self) -> float:
        return math.pi - self.theta


DEFAULT_SECTOR = Sector(math.pi / 4)


def sector_contains(lam: complex, sector: Sector) -> bool:
    lam = complex(lam)
    if lam == 0:
        return False
    if sector.delta is not None and not abs(lam) > sector.delta:
        return False
    # atan2 returns +pi on the negative real axis, so -1 is excluded
    return abs(math.atan2(lam.imag, lam.real)) < math.pi - sector.theta


def principal_sqrt(z):
    """
    Square root with nonnegative real part.

    On the negative real axis the root with positive imaginary part is
    returned regardless of the sign of the zero imaginary part.  Works
    elementwise on arrays.
    """
    arr = np.asarray(z, dtype=complex)
    if np.any(arr == 0):
        raise ValueError("principal_sqrt is undefined at 0")
    w = np.sqrt(arr)
    cut = (arr.imag == 0) & (arr.real < 0)
    if np.any(cut):
        w = np.where(cut, 1j * np.sqrt(np.abs(arr.real)), w)
    if np.ndim(z) == 0:
        return complex(w)
    return w


@dataclass(frozen=True)
class ResolventParam:
    """Spectral parameter ``lambda`` together with its principal square root."""

    lam: complex
    sqrt_lam: complex = dc_field(init=False)

    def __post_init__(self):
        lam = complex(self.lam)
        if lam == 0:
            raise ValueError("lambda must be nonzero")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "sqrt_lam", principal_sqrt(lam))

    @classmethod
    def of(cls, lam) -> "ResolventParam":
        return lam if isinstance(lam, ResolventParam) else cls(lam)

    def __complex__(self):
        return self.lam

    def __abs__(self):
        return abs(self.lam)

    def check(self, sector: Sector) -> None:
        if not sector_contains(self.lam, sector):
            raise ValueError(
                f"lambda = {self.lam} is outside the sector |arg| < pi - {sector.theta:.6g}"
            )


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    """
    Uniform periodic grid on a box with sides ``lengths``.

    Parameters
    ----------
    shape : tuple of int
        Points per axis (powers of two).
    lengths : tuple of float
        Period along each axis.
    """

    shape: tuple
    lengths: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lengths = tuple(float(L) for L in self.lengths)
        if len(shape) != len(lengths) or not shape:
            raise ValueError("shape and lengths must be non-empty and of equal length")
        for n in shape:
            if not _is_pow2(n) or n < 2:
                raise ValueError(f"points per axis must be a power of two >= 2, got {n}")
        if any(L <= 0 for L in lengths):
            raise ValueError("periods must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def cube(cls, d: int, n: int, period: float = 2 * math.pi) -> "TorusGrid":
        return cls((n,) * d, (period,) * d)

    @property
    def d(self) -> int:
        return len(self.shape)

    ndim = d

    @property
    def n_per_axis(self) -> int:
        if len(set(self.shape)) != 1:
            raise AttributeError("grid is not uniform across axes")
        return self.shape[0]

    @property
    def period(self) -> float:
        if len(set(self.lengths)) != 1:
            raise AttributeError("grid periods differ across axes")
        return self.lengths[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> tuple:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def coords(self, axis: int) -> np.ndarray:
        n, L = self.shape[axis], self.lengths[axis]
        return np.arange(n) * (L / n)

    def mesh(self) -> np.ndarray:
        """Coordinates as an array of shape ``(d, *shape)``."""
        return np.stack(np.meshgrid(*[self.coords(a) for a in range(self.d)], indexing="ij"))

    def wavenumbers(self, axis: int, nyquist: bool = False) -> np.ndarray:
        """Angular wavenumbers along ``axis``; the Nyquist entry is zero unless ``nyquist``."""
        n, L = self.shape[axis], self.lengths[axis]
        k = np.fft.fftfreq(n, d=1.0 / n) * (2 * math.pi / L)
        if not nyquist:
            k[n // 2] = 0.0
        return k

    def kvec(self) -> np.ndarray:
        """Nyquist-zeroed wavenumber vectors, shape ``(d, *shape)``."""
        ks = [self.wavenumbers(a) for a in range(self.d)]
        return np.stack(np.meshgrid(*ks, indexing="ij"))

    def k2(self) -> np.ndarray:
        return np.sum(self.kvec() ** 2, axis=0)

    def band_mask(self) -> np.ndarray:
        """True on every mode except those carrying a Nyquist index on some axis."""
        masks = []
        for n in self.shape:
            m = np.ones(n, dtype=bool)
            m[n // 2] = False
            masks.append(m)
        return np.logical_and.reduce(np.meshgrid(*masks, indexing="ij"))

    def index_wavenumbers(self, axis: int) -> np.ndarray:
        """Integer mode indices along ``axis`` in FFT order."""
        n = self.shape[axis]
        return np.fft.fftfreq(n, d=1.0 / n).astype(int)

    def scaled(self, factor: float) -> "TorusGrid":
        return TorusGrid(self.shape, tuple(L * factor for L in self.lengths))

    def describe(self) -> dict:
        return {"kind": "torus", "shape": list(self.shape), "lengths": list(self.lengths)}


@dataclass(frozen=True)
class SlabGrid:
    """
    Horizontal torus times the closed interval ``[0, H]``.

    The extended torus used for parity reflection has ``2 (n_vertical - 1)``
    vertical points and period ``2 H``.
    """

    horizontal: TorusGrid
    n_vertical: int
    height: float

    def __post_init__(self):
        m = self.n_vertical - 1
        if m < 2 or not _is_pow2(m):
            raise ValueError("n_vertical - 1 must be a power of two >= 2")
        if not self.height > 0:
            raise ValueError("height must be positive")
        object.__setattr__(self, "height", float(self.height))

    @classmethod
    def make(cls, d: int, n: int, n_vertical: int, height: float, period: float = 2 * math.pi):
        return cls(TorusGrid.cube(d - 1, n, period), n_vertical, height)

    @property
    def d(self) -> int:
        return self.horizontal.d + 1

    @property
    def ndim(self) -> int:
        return self.d

    @property
    def shape(self) -> tuple:
        return self.horizontal.shape + (self.n_vertical,)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def dz(self) -> float:
        return self.height / (self.n_vertical - 1)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.height, self.n_vertical)

    def extended(self) -> TorusGrid:
        m = self.n_vertical - 1
        return TorusGrid(self.horizontal.shape + (2 * m,), self.horizontal.lengths + (2 * self.height,))

    def vertical_weights(self) -> np.ndarray:
        w = np.full(self.n_vertical, self.dz)
        w[0] = w[-1] = 0.5 * self.dz
        return w

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid in ``x_d`` times the horizontal cell area, broadcast to ``shape``."""
        return self.horizontal.cell_volume * self.vertical_weights()

    def scaled(self, factor: float) -> "SlabGrid":
        return SlabGrid(self.horizontal.scaled(factor), self.n_vertical, self.height * factor)

    def describe(self) -> dict:
        return {
            "kind": "slab",
            "horizontal_shape": list(self.horizontal.shape),
            "horizontal_lengths": list(self.horizontal.lengths),
            "n_vertical": self.n_vertical,
            "height": self.height,
        }


Grid = Union[TorusGrid, SlabGrid]


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Field:
    """
    Complex samples on a grid.  ``data`` has shape ``components + grid.shape``;
    scalars have no component axes, vectors one axis of length ``d`` and
    tensors two.  The array is stored read-only.
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        gs = self.grid.shape
        if data.shape[data.ndim - len(gs):] != gs:
            raise ValueError(f"data shape {data.shape} does not end with grid shape {gs}")
        rank = data.ndim - len(gs)
        if rank > 2 or any(c != self.grid.d for c in data.shape[:rank]):
            raise ValueError(f"component axes {data.shape[:rank]} incompatible with d={self.grid.d}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def rank(self) -> int:
        return self.data.ndim - len(self.grid.shape)

    @property
    def real(self) -> np.ndarray:
        return self.data.real

    def __getitem__(self, idx) -> np.ndarray:
        return self.data[idx]

    def _like(self, data) -> "Field":
        return Field(self.grid, data)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return self._like(self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return self._like(self.data - other.data)

    def __mul__(self, c) -> "Field":
        return self._like(self.data * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self._like(-self.data)

    @classmethod
    def zeros(cls, grid: Grid, rank: int) -> "Field":
        return cls(grid, np.zeros((grid.d,) * rank + grid.shape, dtype=complex))


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.rank != b.rank:
        raise ValueError("fields have different ranks")


def scalar_field(grid: Grid, values) -> Field:
    f = Field(grid, values)
    if f.rank != 0:
        raise ValueError("expected a scalar field")
    return f


def vector_field(grid: Grid, values) -> Field:
    f = Field(grid, values)
    if f.rank != 1:
        raise ValueError("expected a vector field")
    return f


def tensor_field(grid: Grid, values) -> Field:
    f = Field(grid, values)
    if f.rank != 2:
        raise ValueError("expected a tensor field")
    return f


@dataclass(frozen=True, eq=False)
class RhsTriple:
    """Data ``(F, f, g)`` of ``-Lap u + grad p + lam u = F + div f``, ``div u = g``.

    ``div f`` has components ``sum_j d_j f[j, k]``.  Missing entries are zero.
    """

    F: Optional[Field] = None
    f: Optional[Field] = None
    g: Optional[Field] = None
    grid: Optional[Grid] = None

    def __post_init__(self):
        grids = [x.grid for x in (self.F, self.f, self.g) if x is not None]
        grid = self.grid if self.grid is not None else (grids[0] if grids else None)
        if grid is None:
            raise ValueError("RhsTriple needs a grid when all three entries are zero")
        if any(g != grid for g in grids):
            raise ValueError("all right-hand-side entries must live on one grid")
        for x, r in ((self.F, 1), (self.f, 2), (self.g, 0)):
            if x is not None and x.rank != r:
                raise ValueError("RhsTriple expects (vector, tensor, scalar)")
        object.__setattr__(self, "grid", grid)
        if self.F is None:
            object.__setattr__(self, "F", Field.zeros(grid, 1))
        if self.f is None:
            object.__setattr__(self, "f", Field.zeros(grid, 2))
        if self.g is None:
            object.__setattr__(self, "g", Field.zeros(grid, 0))

    @property
    def nonzero(self) -> dict:
        return {k: bool(np.any(getattr(self, k).data != 0)) for k in ("F", "f", "g")}

    def scaled(self, cF=1.0, cf=1.0, cg=1.0, grid: Optional[Grid] = None) -> "RhsTriple":
        grid = grid or self.grid
        return RhsTriple(
            Field(grid, self.F.data * cF), Field(grid, self.f.data * cf), Field(grid, self.g.data * cg)
        )

    def __add__(self, other: "RhsTriple") -> "RhsTriple":
        return RhsTriple(self.F + other.F, self.f + other.f, self.g + other.g)

    def __mul__(self, c) -> "RhsTriple":
        return RhsTriple(self.F * c, self.f * c, self.g * c)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def _axes(grid: Grid, ndim: int):
    """Trailing array axes that carry the periodic directions of ``grid``."""
    if isinstance(grid, SlabGrid):
        nper = grid.horizontal.d
        return tuple(range(ndim - nper - 1, ndim - 1))
    return tuple(range(ndim - grid.d, ndim))


def _periodic(grid: Grid) -> TorusGrid:
    return grid.horizontal if isinstance(grid, SlabGrid) else grid


def fwd(arr: np.ndarray, grid: Grid) -> np.ndarray:
    axes = _axes(grid, arr.ndim)
    n = np.prod([arr.shape[a] for a in axes])
    return np.fft.fftn(arr, axes=axes) / n


def bwd(coef: np.ndarray, grid: Grid) -> np.ndarray:
    axes = _axes(grid, coef.ndim)
    n = np.prod([coef.shape[a] for a in axes])
    return np.fft.ifftn(coef, axes=axes) * n


def fft_forward(field: Field) -> np.ndarray:
    """
    Mean-preserving coefficients of ``field``.

    On a slab only the horizontal axes are transformed.
    """
    return fwd(field.data, field.grid)


def fft_backward(coef: np.ndarray, grid: Grid) -> Field:
    return Field(grid, bwd(np.asarray(coef, dtype=complex), grid))


def _kvec_broadcast(grid: Grid, axis: int, ndim: int) -> np.ndarray:
    """Wavenumbers of periodic ``axis`` reshaped to broadcast against an array of ``ndim`` dims."""
    tg = _periodic(grid)
    k = tg.wavenumbers(axis)
    shape = [1] * ndim
    pos = _axes(grid, ndim)[axis]
    shape[pos] = k.size
    return k.reshape(shape)


def spectral_derivative(field: Field, axis: int) -> Field:
    """
    ``d/dx_axis`` by multiplication with ``i k`` (Nyquist zeroed).

    On a slab the vertical axis (the last one) is rejected; use
    :func:`vertical_derivative_fd4` there.
    """
    grid = field.grid
    if isinstance(grid, SlabGrid) and axis == grid.d - 1:
        raise ValueError("the vertical slab axis is not periodic; use vertical_derivative_fd4")
    if not 0 <= axis < _periodic(grid).d:
        raise ValueError(f"axis {axis} out of range")
    c = fwd(field.data, grid)
    c = c * (1j * _kvec_broadcast(grid, axis, c.ndim))
    return Field(grid, bwd(c, grid))


def _fd_weights(offsets: Sequence[int], order: int) -> np.ndarray:
    """Weights of the finite-difference formula on integer ``offsets`` (unit spacing)."""
    offs = np.asarray(offsets, dtype=float)
    m = offs.size
    V = np.vander(offs, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def vertical_derivative_fd4(field: Field, order: int = 1) -> Field:
    """
    Fourth-order finite differences along the vertical slab axis.

    Centered five-point stencils in the interior; the two nodes at each end
    use one-sided stencils of the same order (six points for the second
    derivative).
    """
    grid = field.grid
    if not isinstance(grid, SlabGrid):
        raise ValueError("vertical derivatives are defined on slab fields only")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    v = field.data
    n = grid.n_vertical
    h = grid.dz
    width = 5 if order == 1 else 6
    out = np.empty_like(v)
    for i in range(n):
        if 2 <= i <= n - 3:
            offs = [-2, -1, 0, 1, 2]
        elif i < 2:
            offs = [j - i for j in range(width)]
        else:
            offs = [j - i for j in range(n - width, n)]
        w = _fd_weights(offs, order)
        out[..., i] = sum(wj * v[..., i + o] for wj, o in zip(w, offs)) / h**order
    return Field(grid, out)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def _pointwise_abs(field: Field) -> np.ndarray:
    a = np.abs(field.data)
    if field.rank:
        a = np.sqrt(np.sum(a**2, axis=tuple(range(field.rank))))
    return a


def lq_norm(field: Field, q: float) -> float:
    """
    Discrete ``L^q`` norm with pointwise Euclidean (Frobenius) magnitude.

    Torus grids use the cell volume as weight; slabs use the trapezoid rule in
    ``x_d``.
    """
    if not 1.0 < q < math.inf:
        raise ValueError(f"q must lie in (1, inf), got {q}")
    a = _pointwise_abs(field)
    grid = field.grid
    if isinstance(grid, SlabGrid):
        w = grid.quadrature_weights()
        return float(np.sum(a**q * w) ** (1.0 / q))
    return float((np.sum(a**q) * grid.cell_volume) ** (1.0 / q))


def _neg_sobolev_coeffs(c: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Coefficients of ``grad Lap^{-1}`` applied to each component; gradient axis first."""
    k = grid.kvec()
    k2 = np.sum(k**2, axis=0)
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    lead = c.ndim - grid.d
    kk = k.reshape((grid.d,) + (1,) * lead + grid.shape)
    return -1j * kk * (inv * c)[None]


def neg_sobolev_surrogate(g: Field, q: float) -> float:
    """
    ``||grad Lap^{-1} g||_q``, a computable stand-in for ``||g||_{W^{-1,q}}``.

    A nonzero mean is projected out (logged).  On a slab ``g`` is reflected
    evenly onto the extended torus and the norm is taken over the slab part.
    """
    grid = g.grid
    if isinstance(grid, SlabGrid):
        ext = grid.extended()
        c = fwd(reflect(g.data, grid, rank=g.rank), ext)
        _log_mean(c, ext)
        gv = bwd(_neg_sobolev_coeffs(c, ext), ext)[..., : grid.n_vertical]
        return lq_norm(Field(grid, gv), q)
    c = fwd(g.data, grid)
    _log_mean(c, grid)
    return lq_norm(Field(grid, bwd(_neg_sobolev_coeffs(c, grid), grid)), q)


def _log_mean(c: np.ndarray, grid: TorusGrid) -> None:
    m = c[(Ellipsis,) + (0,) * grid.d]
    if np.any(np.abs(m) > 1e-14):
        logger.info("neg_sobolev_surrogate: projected out mean %s", np.max(np.abs(m)))


# ---------------------------------------------------------------------------
# parity reflection (slab <-> extended torus)
# ---------------------------------------------------------------------------


def component_parity(d: int, rank: int) -> np.ndarray:
    """
    Reflection signs under ``x_d -> -x_d``: tangential vector components are
    even, the normal component odd; tensors take the product of the two
    index parities; scalars are even.
    """
    p = np.ones(d)
    p[-1] = -1.0
    if rank == 0:
        return np.ones(())
    if rank == 1:
        return p
    return np.outer(p, p)


def reflect(data: np.ndarray, slab: SlabGrid, signs=None, rank: int = 0) -> np.ndarray:
    """
    Extend slab samples to the doubled vertical torus with the parity signs of
    :func:`component_parity` (or explicit per-component ``signs``).
    """
    m = slab.n_vertical - 1
    if signs is None or rank == 0:
        signs = component_parity(slab.d, rank)
    signs = np.asarray(signs, dtype=float).reshape(np.shape(signs) + (1,) * (slab.d))
    mirror = data[..., m - 1 : 0 : -1] * signs
    return np.concatenate([data, mirror], axis=-1)
