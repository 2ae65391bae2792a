"""hml: a desk-scale numerical laboratory for the sharp constant lambda_p
of the distance-weighted sup-norm Hardy inequality

    lambda * sup |u/d^(1-n/p)|^p  <=  integral |Du|^p,    p > n,

over open sets in R^1 and R^2.  Potentials, Rayleigh quotients, exact 1D
oracles and geometry sweeps live in the submodules; the ``hml`` CLI drives
batch experiments.
"""

from . import geometry, mesh, oracle, potential, spectrum  # noqa: F401

__version__ = "0.1.0"
