from .structure import (
    BUILTINS,
    GeneratorBasis,
    StructureConstants,
    Violation,
    abelian,
    beta,
    hamiltonian_algebra,
    heisenberg,
    sp2,
    sp2m,
    sp2m_forms,
    su2,
    symplectic_form,
    validate,
)
from .weyl import (
    DegreeCapError,
    WeylPolynomial,
    nested_commutator,
    nested_commutator_degree,
    weyl_commutator,
)

__all__ = [
    "BUILTINS", "GeneratorBasis", "StructureConstants", "Violation", "abelian", "beta",
    "hamiltonian_algebra", "heisenberg", "sp2", "sp2m", "sp2m_forms", "su2",
    "symplectic_form", "validate", "DegreeCapError", "WeylPolynomial", "nested_commutator",
    "nested_commutator_degree", "weyl_commutator",
]
