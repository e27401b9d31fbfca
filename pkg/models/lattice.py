"""
格点与区域模型
Lattice / Region / PartitionPlan: immutable site geometry with a Euclidean metric
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Optional, Tuple

import numpy as np

from models.errors import InvalidArgumentError

Site = Tuple[int, ...]


@dataclass(frozen=True)
class Lattice:
    """
    D 维正则格点

    spacing is the physical length of one lattice step; distances and radii are
    measured in physical units. extents overrides the per-axis side length for
    rectangular tori and defaults to (linear_size,) * dimension.
    """
    dimension: int
    linear_size: int
    periodic: Tuple[bool, ...] = ()
    spacing: float = 1.0
    extents: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.dimension < 1 or self.linear_size < 1:
            raise InvalidArgumentError("dimension 与 linear_size 必须为正整数")
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * self.dimension
        if len(periodic) != self.dimension:
            raise InvalidArgumentError(f"periodic 长度 {len(periodic)} 与维数 {self.dimension} 不符")
        extents = tuple(int(e) for e in self.extents) or (self.linear_size,) * self.dimension
        if len(extents) != self.dimension or min(extents) < 1:
            raise InvalidArgumentError("extents 必须为每个轴给出正整数")
        if self.spacing <= 0:
            raise InvalidArgumentError("spacing 必须为正")
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "extents", extents)

    @classmethod
    def open(cls, dimension: int, linear_size: int, spacing: float = 1.0) -> "Lattice":
        return cls(dimension, linear_size, (False,) * dimension, spacing)

    @classmethod
    def torus(cls, dimension: int, linear_size: int, spacing: float = 1.0) -> "Lattice":
        return cls(dimension, linear_size, (True,) * dimension, spacing)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.extents))

    def sites(self) -> Iterator[Site]:
        return itertools.product(*(range(e) for e in self.extents))

    def contains(self, site: Site) -> bool:
        return len(site) == self.dimension and all(0 <= c < e for c, e in zip(site, self.extents))

    def wrap(self, site: Iterable[int]) -> Optional[Site]:
        """Map integer coordinates into the lattice; None when they fall off an open axis."""
        out = []
        for c, e, p in zip(site, self.extents, self.periodic):
            if p:
                c %= e
            elif not 0 <= c < e:
                return None
            out.append(int(c))
        return tuple(out)

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Per-axis separation |a - b| under the minimal-image convention, broadcasting."""
        diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        extents = np.asarray(self.extents, dtype=float)
        periodic = np.asarray(self.periodic, dtype=bool)
        return np.where(periodic, np.minimum(diff, extents - diff), diff)

    def distance(self, a: Site, b: Site) -> float:
        return float(np.sqrt(np.sum(self.displacement(a, b) ** 2)) * self.spacing)

    def pairwise_distances(self, sites_a, sites_b) -> np.ndarray:
        a = np.asarray(list(sites_a), dtype=float).reshape(-1, 1, self.dimension)
        b = np.asarray(list(sites_b), dtype=float).reshape(1, -1, self.dimension)
        return np.sqrt(np.sum(self.displacement(a, b) ** 2, axis=-1)) * self.spacing

    def full_region(self) -> "Region":
        return Region(self, tuple(self.sites()))

    def empty_region(self) -> "Region":
        return Region(self, ())

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "linear_size": self.linear_size,
            "periodic": list(self.periodic),
            "spacing": self.spacing,
            "extents": list(self.extents),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Lattice":
        return cls(
            int(payload["dimension"]),
            int(payload["linear_size"]),
            tuple(payload.get("periodic", ())),
            float(payload.get("spacing", 1.0)),
            tuple(payload.get("extents", ())),
        )


def _as_site(raw, dimension: int) -> Site:
    if isinstance(raw, (int, np.integer)):
        raw = (raw,)
    site = tuple(int(c) for c in raw)
    if len(site) != dimension:
        raise InvalidArgumentError(f"坐标 {raw} 的维数与格点维数 {dimension} 不符")
    return site


@dataclass(frozen=True)
class Region:
    """格点上的有序、无重复站点集合"""
    lattice: Lattice
    sites: Tuple[Site, ...] = ()

    def __post_init__(self):
        cleaned = sorted({_as_site(s, self.lattice.dimension) for s in self.sites})
        for s in cleaned:
            if not self.lattice.contains(s):
                raise InvalidArgumentError(f"站点 {s} 不在格点内")
        object.__setattr__(self, "sites", tuple(cleaned))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self.site_set

    @property
    def site_set(self) -> frozenset:
        return frozenset(self.sites)

    def is_empty(self) -> bool:
        return not self.sites

    def _check(self, other: "Region"):
        if other.lattice != self.lattice:
            raise InvalidArgumentError("区域来自不同的格点")

    def union(self, other: "Region") -> "Region":
        self._check(other)
        return Region(self.lattice, self.sites + other.sites)

    def difference(self, other: "Region") -> "Region":
        self._check(other)
        drop = other.site_set
        return Region(self.lattice, tuple(s for s in self.sites if s not in drop))

    def intersection(self, other: "Region") -> "Region":
        self._check(other)
        keep = other.site_set
        return Region(self.lattice, tuple(s for s in self.sites if s in keep))

    def complement(self) -> "Region":
        mine = self.site_set
        return Region(self.lattice, tuple(s for s in self.lattice.sites() if s not in mine))

    def distance_to(self, other: "Region") -> float:
        """Minimum pairwise distance; infinite when either side is empty."""
        self._check(other)
        if self.is_empty() or other.is_empty():
            return float("inf")
        return float(self.lattice.pairwise_distances(self.sites, other.sites).min())

    def to_literal(self) -> list:
        return [list(s) for s in self.sites]

    @classmethod
    def from_literal(cls, lattice: Lattice, literal) -> "Region":
        if not isinstance(literal, (list, tuple)):
            raise InvalidArgumentError("区域字面量必须是坐标数组")
        return cls(lattice, tuple(_as_site(s, lattice.dimension) for s in literal))


@dataclass(frozen=True)
class PartitionPlan:
    """
    命名的不相交区域划分

    regions maps a name to its Region, roles maps the same names to a role tag
    (x_cell, y_cell, z_bar, corner_disk, ...). required_separations maps a role to
    the minimum distance that distinct regions carrying it must keep apart.
    """
    lattice: Lattice
    regions: Dict[str, Region]
    roles: Dict[str, str]
    required_separations: Dict[str, float] = field(default_factory=dict)
    metadata: Dict[str, object] = field(default_factory=dict)

    def names_with_role(self, role: str) -> list:
        return sorted(name for name, r in self.roles.items() if r == role)

    def role_union(self, role: str) -> Region:
        out = self.lattice.empty_region()
        for name in self.names_with_role(role):
            out = out.union(self.regions[name])
        return out

    def measured_separations(self) -> Dict[str, float]:
        """For each declared role, the smallest distance between two distinct regions with it."""
        measured = {}
        for role in self.required_separations:
            names = self.names_with_role(role)
            best = float("inf")
            for a, b in itertools.combinations(names, 2):
                best = min(best, self.regions[a].distance_to(self.regions[b]))
            measured[role] = best
        return measured

    def verify(self) -> Dict[str, object]:
        """暴力校验不相交、覆盖与间隔"""
        seen = set()
        disjoint = True
        for name in sorted(self.regions):
            sites = self.regions[name].site_set
            if seen & sites:
                disjoint = False
            seen |= sites
        covers = seen == set(self.lattice.sites())
        measured = self.measured_separations()
        separated = all(
            measured[role] >= need - 1e-9 for role, need in self.required_separations.items()
        )
        return {
            "disjoint": disjoint,
            "covers": covers,
            "separations": measured,
            "separated": separated,
            "ok": disjoint and covers and separated,
        }

    def to_json(self) -> dict:
        measured = self.measured_separations()
        return {
            "lattice": self.lattice.to_dict(),
            "regions": {name: self.regions[name].to_literal() for name in sorted(self.regions)},
            "roles": dict(sorted(self.roles.items())),
            "separations": {
                role: (None if measured[role] == float("inf") else measured[role]) for role in sorted(measured)
            },
            "metadata": dict(self.metadata),
        }
