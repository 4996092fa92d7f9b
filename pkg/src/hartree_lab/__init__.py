"""Pseudospectral simulator and diagnostics lab for the defocusing Hartree equation."""

from .grid import Field, Grid, load_snapshot, make_grid, save_snapshot, transform
from .multipliers import IParams, i_operator, m_eval
from .dynamics import EvolveConfig, ModelParams, evolve, step_strang
from .functionals import energy, mass, modified_energy, sobolev_norm

__version__ = "0.1.0"

__all__ = [
    "EvolveConfig",
    "Field",
    "Grid",
    "IParams",
    "ModelParams",
    "energy",
    "evolve",
    "i_operator",
    "load_snapshot",
    "m_eval",
    "make_grid",
    "mass",
    "modified_energy",
    "save_snapshot",
    "sobolev_norm",
    "step_strang",
    "transform",
]
