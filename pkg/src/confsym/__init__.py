"""Symbolic conformal geometry: curvature, the order <= 2 conformally invariant
quantization and conformal symmetries of the Yamabe Laplacian.

Modules
-------
``expr``        exact scalar expressions (FLINT-backed rational functions with atoms)
``dsl``         the ``.geo`` geometry-definition language
``geometry``    coordinate charts with a metric
``tensor``      component tensors, index gymnastics, covariant derivatives
``curvature``   Riemann, Ricci, Schouten, Weyl, Cotton-York and conformal laws
``symbols``     symbols on the cotangent bundle, Poisson bracket, Killing tests
``quantize``    differential operators, the quantization, the Yamabe Laplacian
``obstruction`` G, F, F1, F2, Obs, exterior calculus, potentials and classification
``suite``       the acceptance checks behind ``confsym paper-suite``
``cli``         the ``confsym`` command
"""

from importlib import resources as _resources

from .dsl import GeometrySpec, load_geometry, parse_expr, parse_geometry
from .geometry import Geometry
from .obstruction import classify, obs, solve_potential
from .quantize import DiffOp, Weights, quantize_order2, yamabe
from .symbols import PolySymbol, poisson
from .tensor import TensorField

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Geometry",
    "GeometrySpec",
    "TensorField",
    "PolySymbol",
    "DiffOp",
    "Weights",
    "load_geometry",
    "parse_geometry",
    "parse_expr",
    "poisson",
    "quantize_order2",
    "yamabe",
    "obs",
    "solve_potential",
    "classify",
    "fixture_path",
    "load_fixture",
]


def fixture_path(name: str) -> str:
    """Filesystem path of a bundled ``.geo`` fixture (``name`` with or without the suffix)."""
    if not name.endswith(".geo"):
        name += ".geo"
    return str(_resources.files(__package__).joinpath("fixtures", name))


def load_fixture(name: str) -> GeometrySpec:
    return load_geometry(fixture_path(name))
