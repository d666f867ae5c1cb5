from dataclasses import dataclass
from functools import cached_property

from django.core.exceptions import ValidationError

BOUNDARY_CHOICES = (
    ('open', 'Open'),
    ('periodic', 'Periodic'),
)


@dataclass(frozen=True)
class QubitLattice:
    """
    Square L x L lattice of qubits with row-major site indices.

    Column bonds join (i, j) and (i + 1, j); row bonds join (i, j) and
    (i, j + 1). Periodic lattices add the wrap-around bonds and need L >= 3 so
    that no bond is listed twice.
    """

    size: int
    boundary: str = 'open'

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValidationError(f'Lattice size must be a positive integer, got {self.size}.')
        if self.boundary not in dict(BOUNDARY_CHOICES):
            raise ValidationError(f'Unknown boundary condition {self.boundary!r}.')
        if self.boundary == 'periodic' and self.size < 3:
            raise ValidationError('Periodic lattices need at least 3 x 3 sites.')

    @property
    def n_sites(self):
        return self.size * self.size

    @property
    def dim(self):
        return 2 ** self.n_sites

    def site_index(self, row, col):
        return row * self.size + col

    def coordinates(self, site):
        return divmod(site, self.size)

    def _bonds(self, step_row, step_col):
        bonds = []
        for row in range(self.size):
            for col in range(self.size):
                next_row, next_col = row + step_row, col + step_col
                if self.boundary == 'periodic':
                    next_row, next_col = next_row % self.size, next_col % self.size
                elif next_row >= self.size or next_col >= self.size:
                    continue
                bonds.append((self.site_index(row, col), self.site_index(next_row, next_col)))
        return tuple(bonds)

    @cached_property
    def column_bonds(self):
        return self._bonds(1, 0)

    @cached_property
    def row_bonds(self):
        return self._bonds(0, 1)

    @property
    def bonds(self):
        return self.column_bonds + self.row_bonds

    @property
    def coordination(self):
        """Neighbours per site in the bulk."""
        return 4 if self.size > 1 else 0

    def neighbours(self, site):
        return sorted(
            {b for a, b in self.bonds if a == site} | {a for a, b in self.bonds if b == site}
        )

    def __str__(self):
        return f'{self.size}x{self.size} ({self.boundary})'
