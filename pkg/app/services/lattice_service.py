"""
格点几何相关服务：单元、有限格点、单元覆盖、元格（plaquette）枚举
"""
import itertools
import logging
from fractions import Fraction
from typing import List, Sequence, Tuple

from app.models.lattice import (
    BOUNDARIES, FREE, PERIODIC, CellCover, CellGeometry, CellInstance, FiniteLattice,
    site_coords, site_index,
)
from app.utils.response import ConfigException

logger = logging.getLogger(__name__)

# 消除键重复计数的因子 c_d
MULTIPLICITY = {2: Fraction(1, 2), 3: Fraction(1, 4)}

CELL_NAMES = {2: "square", 3: "cube"}


class LatticeService:
    """格点几何服务类"""

    @staticmethod
    def make_cell(dimension: int) -> CellGeometry:
        """
        构造规范单元

        格点按行优先（x 最快）编号；键按 (锚点下标, 轴 x<y<z) 字典序排列，
        保证耦合比特掩码编码在不同运行间稳定。

        Args:
            dimension: 维数，2 或 3

        Returns:
            CellGeometry: 单位正方形或单位立方体

        Raises:
            ConfigException: 不支持的维数
        """
        if dimension not in MULTIPLICITY:
            raise ConfigException(f"不支持的维数: {dimension}（仅支持 2 或 3）")

        sides = (2,) * dimension
        n_sites = 2 ** dimension
        offsets = tuple(site_coords(s, sides) for s in range(n_sites))

        bonds = []
        axes = []
        for s in range(n_sites):
            for axis in range(dimension):
                if offsets[s][axis] == 0:
                    bonds.append((s, s + 2 ** axis))
                    axes.append(axis)

        # 面顺序：xy(z=0), xy(z=1), xz(y=0), ...
        faces = []
        for a, b in itertools.combinations(range(dimension), 2):
            fixed_axes = [c for c in range(dimension) if c not in (a, b)]
            for fixed_values in itertools.product((0, 1), repeat=len(fixed_axes)):
                face = []
                for k, (i, j) in enumerate(bonds):
                    if axes[k] not in (a, b):
                        continue
                    if all(offsets[i][c] == v and offsets[j][c] == v for c, v in zip(fixed_axes, fixed_values)):
                        face.append(k)
                faces.append(tuple(face))

        return CellGeometry(
            name=CELL_NAMES[dimension],
            dimension=dimension,
            sites=tuple(range(n_sites)),
            site_offsets=offsets,
            bonds=tuple(bonds),
            bond_axes=tuple(axes),
            faces=tuple(faces),
            multiplicity_factor=MULTIPLICITY[dimension],
        )

    @staticmethod
    def make_dimer() -> CellGeometry:
        """两格点单键的退化几何，仅用于单元测试与量子校验"""
        return CellGeometry(
            name="dimer",
            dimension=1,
            sites=(0, 1),
            site_offsets=((0,), (1,)),
            bonds=((0, 1),),
            bond_axes=(0,),
            faces=(),
            multiplicity_factor=Fraction(1),
        )

    @staticmethod
    def make_lattice(dimension: int, side_lengths: Sequence[int], boundary: str = PERIODIC) -> FiniteLattice:
        """
        构造有限格点

        Args:
            dimension: 维数，2 或 3
            side_lengths: 各轴边长
            boundary: periodic 或 free

        Returns:
            FiniteLattice: 键列表完整、去重、规范排序的格点

        Raises:
            ConfigException: 维数、边界或边长不合法
        """
        if dimension not in MULTIPLICITY:
            raise ConfigException(f"不支持的维数: {dimension}（仅支持 2 或 3）")
        if boundary not in BOUNDARIES:
            raise ConfigException(f"未知边界条件: {boundary}（可选 {', '.join(BOUNDARIES)}）")
        sides = tuple(int(length) for length in side_lengths)
        if len(sides) != dimension:
            raise ConfigException(f"边长个数 {len(sides)} 与维数 {dimension} 不一致")

        minimum = 3 if boundary == PERIODIC else 2
        for length in sides:
            if length < minimum:
                # 周期边界下 L=2 会产生同一对格点间的重复键
                raise ConfigException(f"{boundary} 边界要求边长 >= {minimum}，收到 {length}")

        n_sites = 1
        for length in sides:
            n_sites *= length

        bonds: List[Tuple[int, int]] = []
        keys: List[Tuple[int, int]] = []
        for s in range(n_sites):
            coords = site_coords(s, sides)
            for axis in range(dimension):
                if boundary == FREE and coords[axis] + 1 >= sides[axis]:
                    continue
                neighbour = list(coords)
                neighbour[axis] = (coords[axis] + 1) % sides[axis]
                bonds.append((s, site_index(tuple(neighbour), sides)))
                keys.append((s, axis))

        lattice = FiniteLattice(
            dimension=dimension,
            side_lengths=sides,
            boundary=boundary,
            bonds=tuple(bonds),
            bond_keys=tuple(keys),
            bond_lookup={key: k for k, key in enumerate(keys)},
        )
        logger.debug(f"构造格点 {sides} {boundary}: {lattice.n_sites} 个格点, {lattice.n_bonds} 条键")
        return lattice

    @staticmethod
    def make_cover(lattice: FiniteLattice) -> CellCover:
        """
        构造周期格点的单元覆盖：每个格点 n 锚定一个单元（n 为单元中坐标最小的顶点）

        Args:
            lattice: 周期格点

        Returns:
            CellCover: N 个单元，每个单元键映射到格点键

        Raises:
            ConfigException: 非周期格点
        """
        if not lattice.is_periodic:
            raise ConfigException("单元覆盖只对周期边界格点定义")

        geometry = LatticeService.make_cell(lattice.dimension)
        cells = []
        for anchor in range(lattice.n_sites):
            base = lattice.coords(anchor)
            sites = []
            for offset in geometry.site_offsets:
                shifted = tuple((c + o) % L for c, o, L in zip(base, offset, lattice.side_lengths))
                sites.append(lattice.index(shifted))
            bond_map = tuple(
                lattice.bond_index(sites[i], axis)
                for (i, _j), axis in zip(geometry.bonds, geometry.bond_axes)
            )
            cells.append(CellInstance(anchor=anchor, sites=tuple(sites), bond_map=bond_map))

        return CellCover(lattice=lattice, geometry=geometry, cells=tuple(cells))

    @staticmethod
    def lattice_plaquettes(lattice: FiniteLattice) -> List[Tuple[int, int, int, int]]:
        """
        枚举格点上的所有元格（每个元格由 4 条键组成）

        d=2 只有 xy 元格；d=3 有 xy、xz、yz 三类。自由边界下只保留完整落在格点内的元格。

        Returns:
            List[Tuple[int, int, int, int]]: 每个元格的 4 个键下标
        """
        plaquettes = []
        for s in range(lattice.n_sites):
            coords = lattice.coords(s)
            for a, b in itertools.combinations(range(lattice.dimension), 2):
                if not lattice.is_periodic and (
                    coords[a] + 1 >= lattice.side_lengths[a] or coords[b] + 1 >= lattice.side_lengths[b]
                ):
                    continue
                plaquettes.append((
                    lattice.bond_index(s, a),
                    lattice.bond_index(s, b),
                    lattice.bond_index(lattice.shift(s, a), b),
                    lattice.bond_index(lattice.shift(s, b), a),
                ))
        return plaquettes
