"""Parameter grids and sampled nets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegenerateImmersionError, DomainError

_IMMERSION_TOL = 1e-13


@dataclass(frozen=True)
class GridSpec:
    """A rectangular sample grid on the closed box ``u_range x v_range``.

    ``margin`` records the relative inset that was used to keep the box away
    from singular curves; the helpers below apply it, the box itself is taken
    as given.
    """

    u_range: tuple[float, float]
    v_range: tuple[float, float]
    nu: int
    nv: int
    margin: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "u_range", (float(self.u_range[0]), float(self.u_range[1])))
        object.__setattr__(self, "v_range", (float(self.v_range[0]), float(self.v_range[1])))
        if int(self.nu) < 2 or int(self.nv) < 2:
            raise DomainError(f"grid needs at least 2 samples per direction, got {self.nu}x{self.nv}")
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "nv", int(self.nv))
        for lo, hi in (self.u_range, self.v_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DomainError(f"grid range must be finite and increasing, got ({lo}, {hi})")
        if not 0.0 <= self.margin < 0.5:
            raise DomainError(f"margin must lie in [0, 0.5), got {self.margin}")

    @property
    def u(self) -> np.ndarray:
        return np.linspace(*self.u_range, self.nu)

    @property
    def v(self) -> np.ndarray:
        return np.linspace(*self.v_range, self.nv)

    @property
    def du(self) -> float:
        return (self.u_range[1] - self.u_range[0]) / (self.nu - 1)

    @property
    def dv(self) -> float:
        return (self.v_range[1] - self.v_range[0]) / (self.nv - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.u, self.v, indexing="ij")

    def as_dict(self) -> dict:
        return {
            "u_range": list(self.u_range),
            "v_range": list(self.v_range),
            "nu": self.nu,
            "nv": self.nv,
            "margin": self.margin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(d["u_range"]), tuple(d["v_range"]), d["nu"], d["nv"], d.get("margin", 1e-3))

    @classmethod
    def in_strip(cls, lo: float, hi: float, n: int, margin: float = 1e-3, width: float = 4.0) -> "GridSpec":
        """Square box whose diagonal sum ``u + v`` stays inside ``(lo, hi)``.

        The strip is shrunk by ``margin`` times its width on each side; an
        unbounded side is replaced by ``width`` measured from the other one.
        """
        if math.isinf(lo) and math.isinf(hi):
            raise DomainError("at least one side of the strip must be finite")
        if math.isinf(hi):
            hi = lo + width
        if math.isinf(lo):
            lo = hi - width
        inset = margin * (hi - lo)
        a, b = 0.5 * (lo + inset), 0.5 * (hi - inset)
        return cls((a, b), (a, b), n, n, margin)

    @classmethod
    def in_quadrant(cls, r_cusp: float, n: int, margin: float = 1e-3, lo: float = 0.05) -> "GridSpec":
        """Square box ``[lo, b]^2`` with ``4 uv <= (1 - margin)^2 r_cusp^2``."""
        b = 0.5 * (1.0 - margin) * r_cusp
        if math.isinf(b):
            raise DomainError("an infinite cusp radius needs an explicit box")
        if b <= lo:
            raise DomainError(f"cusp radius {r_cusp} leaves no room above {lo}")
        return cls((lo, b), (lo, b), n, n, margin)


@dataclass
class SurfaceGrid:
    """Sampled net ``X(u_i, v_j)`` with optional exact derivatives.

    ``d1`` is ``(X_u, X_v)`` and ``d2`` is ``(X_uu, X_uv, X_vv)``, each of
    shape ``(nu, nv, 3)``.
    """

    spec: GridSpec
    positions: np.ndarray
    d1: tuple[np.ndarray, np.ndarray] | None = None
    d2: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.spec.nu, self.spec.nv, 3)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.shape != shape:
            raise DomainError(f"positions have shape {self.positions.shape}, expected {shape}")
        if not np.all(np.isfinite(self.positions)):
            raise DomainError("positions contain non-finite values")
        if self.d1 is not None:
            Xu, Xv = (np.asarray(a, dtype=float) for a in self.d1)
            self.d1 = (Xu, Xv)
            cross = np.linalg.norm(np.cross(Xu, Xv), axis=-1)
            scale = np.linalg.norm(Xu, axis=-1) * np.linalg.norm(Xv, axis=-1)
            bad = ~(cross > _IMMERSION_TOL * np.maximum(scale, 1e-300))
            if np.any(bad):
                idx = tuple(int(i) for i in np.argwhere(bad)[0])
                raise DegenerateImmersionError("tangent vectors are linearly dependent", idx)
        if self.d2 is not None:
            self.d2 = tuple(np.asarray(a, dtype=float) for a in self.d2)

    @property
    def u(self) -> np.ndarray:
        return self.spec.u

    @property
    def v(self) -> np.ndarray:
        return self.spec.v

    def with_positions(self, positions: np.ndarray, d1=None, d2=None, **extra) -> "SurfaceGrid":
        prov = dict(self.provenance)
        prov.update(extra)
        return SurfaceGrid(self.spec, positions, d1, d2, prov)


def affine_transform(surface: SurfaceGrid, R: np.ndarray, shift: np.ndarray, **extra) -> SurfaceGrid:
    """Apply ``X -> R X + shift`` to positions and derivatives alike."""
    R = np.asarray(R, dtype=float)
    pos = surface.positions @ R.T + shift
    d1 = None if surface.d1 is None else tuple(a @ R.T for a in surface.d1)
    d2 = None if surface.d2 is None else tuple(a @ R.T for a in surface.d2)
    return surface.with_positions(pos, d1, d2, **extra)
