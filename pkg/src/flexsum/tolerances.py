"""Central numerical tolerance configuration.

Every module takes its thresholds from a single :class:`Tolerances` record so
that an entire pipeline can be tightened or loosened coherently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the package.

    Attributes
    ----------
    feasibility:
        Slack allowed when testing ``A x <= b`` componentwise.
    vertex_dedup:
        Two vertices closer than this (inf-norm) are treated as one.
    degeneracy:
        A polytope with Chebyshev radius below this is considered
        lower-dimensional (zero volume).
    lp_value:
        Relative objective tolerance of the simplex solver.
    lp_pivot:
        Smallest acceptable pivot magnitude in the simplex tableau.
    box_volume_rel:
        Relative volume accuracy targeted by the inscribed-box solver.
    """

    feasibility: float = 1e-7
    vertex_dedup: float = 1e-9
    degeneracy: float = 1e-7
    lp_value: float = 1e-8
    lp_pivot: float = 1e-10
    box_volume_rel: float = 1e-5

    def scaled(self, factor: float) -> "Tolerances":
        """Return a copy with the feasibility-type thresholds scaled."""
        return replace(
            self,
            feasibility=self.feasibility * factor,
            degeneracy=self.degeneracy * factor,
        )


DEFAULT = Tolerances()

#: Named profiles selectable from the CLI.
PROFILES = {
    "default": DEFAULT,
    "strict": DEFAULT.scaled(0.1),
    "loose": DEFAULT.scaled(10.0),
}
