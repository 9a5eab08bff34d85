"""rigidlab: numerical verification of the pointwise identities, boundary
constructions, and kernel certificates behind surface-rigidity arguments.

Subpackages by concern:

* :mod:`rigidlab.expressions` / :mod:`rigidlab.jets`: the chart expression
  DSL and exact derivative (jet) arithmetic everything else consumes;
* :mod:`rigidlab.geometry` / :mod:`rigidlab.surfaces`: immersions, frames,
  curvature, geodesic boundary charts, and the shipped catalog;
* :mod:`rigidlab.darboux`, :mod:`rigidlab.pairs`: support-function
  identities and isometric-pair diagnostics with the energy pairing;
* :mod:`rigidlab.flex`: infinitesimal flexes, rotation data, and discrete
  kernel certification;
* :mod:`rigidlab.highdim`: pointwise rank-based rigidity in R^(n+1);
* :mod:`rigidlab.boundary`: boundary profiles, the boundary ODE, and the
  boundary energy inequality;
* :mod:`rigidlab.linalg`, :mod:`rigidlab.quadrature`,
  :mod:`rigidlab.report`, :mod:`rigidlab.cli`: shared numerics and the
  reporting harness.
"""

__version__ = "0.1.0"

from .expressions import evaluate_jet, parse_expression, to_text
from .geometry import Immersion, frame_at, geodesic_boundary_chart
from .surfaces import catalog, load_surface

__all__ = [
    "__version__",
    "parse_expression",
    "to_text",
    "evaluate_jet",
    "Immersion",
    "frame_at",
    "geodesic_boundary_chart",
    "catalog",
    "load_surface",
]
