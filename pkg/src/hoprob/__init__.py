"""Exact computations for homotopy probability algebras.

Submodules:

* ``kernel``: graded bases, multilinear maps, partitions, exact series.
* ``corralg``: correlation algebras and their product families.
* ``cumulants``: moments, cumulants and expectations.
* ``slinfty``: sL-infinity structures, morphisms, flows and transfer.
* ``descend``: descendant structures and morphisms.
* ``realize``: Koszul realizations, coinvariants and MGF ODEs.
* ``randomvar``: spaces of random variables, laws and complete spaces.
* ``flatgeo``: connection, flat coordinates and the MGF system.
* ``cli``: command-line front end.
"""

from .kernel import CapExceeded, GradedBasis, MultiMap, Report, SuperSeries, UPoly, ValidationError

__version__ = "0.1.0"

__all__ = ["CapExceeded", "GradedBasis", "MultiMap", "Report", "SuperSeries", "UPoly",
           "ValidationError", "__version__"]
