"""
格点与单元几何模型
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

Bond = Tuple[int, int]
Coords = Tuple[int, ...]

PERIODIC = "periodic"
FREE = "free"
BOUNDARIES = (PERIODIC, FREE)

AXIS_NAMES = ("x", "y", "z")


def site_coords(index: int, side_lengths: Tuple[int, ...]) -> Coords:
    """行优先（x 最快）下标 → 坐标"""
    coords = []
    for length in side_lengths:
        coords.append(index % length)
        index //= length
    return tuple(coords)


def site_index(coords: Coords, side_lengths: Tuple[int, ...]) -> int:
    """坐标 → 行优先下标"""
    index = 0
    stride = 1
    for value, length in zip(coords, side_lengths):
        index += value * stride
        stride *= length
    return index


@dataclass(frozen=True)
class CellGeometry:
    """单元几何：单位正方形（d=2）或单位立方体（d=3）"""

    name: str
    dimension: int
    sites: Tuple[int, ...]
    site_offsets: Tuple[Coords, ...]
    bonds: Tuple[Bond, ...]
    bond_axes: Tuple[int, ...]
    faces: Tuple[Tuple[int, ...], ...]
    multiplicity_factor: Fraction

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    def incident_bonds(self, site: int) -> Tuple[int, ...]:
        """与某格点相连的键下标"""
        return tuple(k for k, (i, j) in enumerate(self.bonds) if site in (i, j))

    def to_dict(self) -> dict:
        """转换为字典"""
        return {
            "name": self.name,
            "dimension": self.dimension,
            "sites": list(self.sites),
            "bonds": [list(b) for b in self.bonds],
            "faces": [list(f) for f in self.faces],
            "multiplicity_factor": {
                "num": self.multiplicity_factor.numerator,
                "den": self.multiplicity_factor.denominator,
            },
        }


@dataclass(frozen=True)
class FiniteLattice:
    """有限超立方格点，周期或自由边界"""

    dimension: int
    side_lengths: Tuple[int, ...]
    boundary: str
    bonds: Tuple[Bond, ...]
    bond_keys: Tuple[Tuple[int, int], ...]
    bond_lookup: Dict[Tuple[int, int], int] = field(compare=False, repr=False)

    @property
    def n_sites(self) -> int:
        n = 1
        for length in self.side_lengths:
            n *= length
        return n

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def is_periodic(self) -> bool:
        return self.boundary == PERIODIC

    def coords(self, site: int) -> Coords:
        return site_coords(site, self.side_lengths)

    def index(self, coords: Coords) -> int:
        return site_index(coords, self.side_lengths)

    def shift(self, site: int, axis: int, step: int = 1) -> int:
        """沿某轴平移（周期回绕）"""
        coords = list(self.coords(site))
        coords[axis] = (coords[axis] + step) % self.side_lengths[axis]
        return self.index(tuple(coords))

    def bond_index(self, anchor: int, axis: int) -> int:
        """以 anchor 为起点、沿 axis 方向的键下标"""
        return self.bond_lookup[(anchor, axis)]

    def incident_bonds(self, site: int) -> List[int]:
        return [k for k, (i, j) in enumerate(self.bonds) if site in (i, j)]

    def to_dict(self) -> dict:
        """转换为字典"""
        return {
            "dimension": self.dimension,
            "side_lengths": list(self.side_lengths),
            "boundary": self.boundary,
            "n_sites": self.n_sites,
            "n_bonds": self.n_bonds,
        }


@dataclass(frozen=True)
class CellInstance:
    """锚定在某格点的单元：单元键 k → 格点键 bond_map[k]"""

    anchor: int
    sites: Tuple[int, ...]
    bond_map: Tuple[int, ...]


@dataclass(frozen=True)
class CellCover:
    """周期格点的单元覆盖，每个格点锚定一个单元"""

    lattice: FiniteLattice
    geometry: CellGeometry
    cells: Tuple[CellInstance, ...]

    def multiplicity(self) -> List[Fraction]:
        """每条格点键上 c_d 的累加值（应全部等于 1）"""
        totals = [Fraction(0)] * self.lattice.n_bonds
        for cell in self.cells:
            for lattice_bond in cell.bond_map:
                totals[lattice_bond] += self.geometry.multiplicity_factor
        return totals
