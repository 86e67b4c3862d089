"""Bounded holomorphic Legendrian disks in SL(2,C), numerically.

The package builds Legendrian immersions of the closed unit disk into
SL(2,C) by iterated corridor-bump modifications of their holomorphic
data, measures every inequality of the construction empirically, and
projects the result to flat fronts in hyperbolic and de Sitter 3-space
and to improper affine fronts in R^3.

Modules
-------
holo       truncated power series calculus on the closed disk
labyrinth  corridor/wall geometry of the annular labyrinth
contact    SL(2,C) values, the Legendrian ODE, Darboux correspondence
runge      zero-free holomorphic bump construction with certificates
geometry   conformal geodesic distance, hyperbolic 3-space primitives
keylemma   the 2N-step sweep and its margin verification
fronts     flat fronts, affine fronts, singular sets, mesh export
cli        construct / verify / export command line front end
"""

__all__ = [
    "holo",
    "labyrinth",
    "contact",
    "runge",
    "geometry",
    "keylemma",
    "fronts",
    "cli",
]
