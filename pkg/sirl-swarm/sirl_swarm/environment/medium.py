import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np

import sirl_swarm.settings as s

# LOG_LEVEL = logging.INFO
# LOG_LEVEL = logging.DEBUG
LOG_LEVEL = logging.WARN

Cell = Tuple[int, int]

# (dx, dy) of the Moore neighborhood in row-major order
MOORE_OFFSETS = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


@dataclass(frozen=True)
class MediumConfig:
    r"""
    Dynamics of the digital pheromone field

    deposit_amount : amount left by an agent on a labeled cell
    discount : factor applied to the amount of an unlabeled cell the agent stands on
    diffusion_rate : fraction of a new deposit spread over the Moore neighbors
    decay_rate : fraction removed at every occupied cell after each phase
    sense_radius : Chebyshev radius of the sensing window
    mark_labeled : start every map with one deposit on each labeled cell
    """

    deposit_amount: float = 1.0
    discount: float = 0.9
    diffusion_rate: float = 0.2
    decay_rate: float = 0.1
    sense_radius: int = 3
    mark_labeled: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.deposit_amount) and self.deposit_amount > 0):
            raise ValueError("deposit_amount must be finite and positive: {}".format(self.deposit_amount))
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must be in (0, 1): {}".format(self.discount))
        for name in ["diffusion_rate", "decay_rate"]:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError("{} must be in [0, 1]: {}".format(name, value))
        if self.sense_radius < 1:
            raise ValueError("sense_radius must be at least 1: {}".format(self.sense_radius))

    @classmethod
    def from_dict(cls, section):
        section = section or {}
        return cls(
            deposit_amount=float(section.get("deposit_amount", 1.0)),
            discount=float(section.get("discount", 0.9)),
            diffusion_rate=float(section.get("diffusion_rate", 0.2)),
            decay_rate=float(section.get("decay_rate", 0.1)),
            sense_radius=int(section.get("sense_radius", 3)),
            mark_labeled=bool(section.get("mark_labeled", True)),
        )


class PheromoneMap:
    r"""
    Scalar digital pheromone amount per grid cell.

    The amounts are kept in a float64 array indexed as [y, x]; cells are passed around
    as (x, y) tuples with the origin at the top-left corner.
    The map is only written between the action phases of the swarm, reads during the
    sensing phase never overlap a write.
    """

    def __init__(self, width, height):
        if width < 1 or height < 1:
            raise ValueError("Invalid field size w={} h={}".format(width, height))
        self._width = int(width)
        self._height = int(height)
        self._amount = np.zeros((self._height, self._width), dtype=np.float64)

    @classmethod
    def initial(cls, width, height, labeled_cells: Iterable[Cell], cfg):
        r"""
        Map at the start of a walk or a test. With `mark_labeled` every labeled cell
        receives one deposit, diffusion included, so the whole target area attracts from
        the first iteration. Otherwise the map starts empty.
        """
        field_map = cls(width, height)
        if cfg.mark_labeled:
            for pos in labeled_cells:
                field_map.deposit(pos, True, cfg)
        return field_map

    def _log(self):
        # Setup a custom logger
        return s.get_custom_logger(self.__class__.__name__, LOG_LEVEL)

    @property
    def width(self):
        return self._width

    @property
    def height(self):
        return self._height

    @property
    def amount(self):
        r"""
        Read-only view over the field
        """
        view = self._amount.view()
        view.flags.writeable = False
        return view

    def inside(self, pos):
        x, y = pos
        return 0 <= x < self._width and 0 <= y < self._height

    def _check_inside(self, pos):
        if not self.inside(pos):
            raise IndexError(
                "Cell {} is outside the {}x{} grid".format(pos, self._width, self._height)
            )

    def get(self, pos):
        self._check_inside(pos)
        x, y = pos
        return float(self._amount[y, x])

    def set(self, pos, value):
        r"""
        Overwrite the amount of one cell. Used to prepare test fields.
        """
        self._check_inside(pos)
        if value < 0:
            raise ValueError("Pheromone amounts cannot be negative: {}".format(value))
        x, y = pos
        self._amount[y, x] = float(value)
        return self

    def total(self):
        return float(self._amount.sum())

    def max(self):
        return float(self._amount.max())

    def reset(self):
        self._amount.fill(0.0)
        return self

    def copy(self):
        other = PheromoneMap(self._width, self._height)
        other._amount[:] = self._amount
        return other

    def deposit(self, pos, labeled, cfg):
        r"""
        Modify the pheromone at the cell the agent stands on.

        On a labeled cell the agent leaves `deposit_amount`; the fraction `diffusion_rate`
        of the new deposit is spread equally over the 8 Moore neighbors and the share of
        out-of-grid neighbors is lost. On an unlabeled cell the present amount is
        multiplied by `discount` and nothing diffuses. Amounts superpose additively.

        Parameters
        ----------
        pos : (x, y)
            Cell of the acting agent
        labeled : bool
            Whether the cell belongs to the target shape
        cfg : MediumConfig

        Returns
        -------
        PheromoneMap : self
        """
        self._check_inside(pos)
        x, y = pos
        if not labeled:
            self._amount[y, x] *= cfg.discount
            return self

        a1 = cfg.deposit_amount
        share = a1 * cfg.diffusion_rate / len(MOORE_OFFSETS)
        self._amount[y, x] += a1 * (1.0 - cfg.diffusion_rate)
        if share > 0.0:
            for dx, dy in MOORE_OFFSETS:
                nx, ny = x + dx, y + dy
                if 0 <= nx < self._width and 0 <= ny < self._height:
                    self._amount[ny, nx] += share
        return self

    def decay_occupied(self, occupied: Iterable[Cell], cfg):
        r"""
        Multiply the amount of every occupied cell by (1 - decay_rate)
        """
        factor = 1.0 - cfg.decay_rate
        for pos in occupied:
            self._check_inside(pos)
            x, y = pos
            self._amount[y, x] *= factor
        return self

    def sense(self, pos, cfg) -> List[Tuple[Cell, float]]:
        r"""
        List the pheromone-positive cells in the sensing window of a cell.

        The window is the Chebyshev ball of radius `sense_radius` clipped to the grid,
        the center cell itself is excluded. The result is in row-major order.

        Returns
        -------
        list of ((x, y), amount)
        """
        self._check_inside(pos)
        x, y = pos
        r = cfg.sense_radius
        x0, x1 = max(0, x - r), min(self._width - 1, x + r)
        y0, y1 = max(0, y - r), min(self._height - 1, y + r)
        window = self._amount[y0 : y1 + 1, x0 : x1 + 1]
        found = []
        for wy, wx in zip(*np.nonzero(window > 0.0)):
            cx, cy = x0 + int(wx), y0 + int(wy)
            if cx == x and cy == y:
                continue
            found.append(((cx, cy), float(window[wy, wx])))
        return found

    def to_pgm(self, path):
        r"""
        Export the field as a plain portable graymap (P2), amounts scaled linearly so
        that the maximum maps to 255.
        """
        peak = self.max()
        if peak > 0.0:
            levels = np.rint(self._amount / peak * 255.0).astype(np.int64)
        else:
            levels = np.zeros_like(self._amount, dtype=np.int64)
        write_pgm(path, levels)


def write_pgm(path, levels):
    r"""
    Write an integer array [height, width] with values in 0..255 as a P2 graymap
    """
    path = Path(path)
    height, width = levels.shape
    lines = ["P2", "{} {}".format(width, height), "255"]
    for row in levels:
        lines.append(" ".join(str(int(v)) for v in row))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="ascii") as fd:
            fd.write("\n".join(lines))
            fd.write("\n")
    except OSError as e:
        raise OSError("Cannot write graymap {}: {}".format(path, e)) from e
