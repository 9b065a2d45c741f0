//! q-wavefunctions, the ladder operators `b`, `b⁺`, the Hamiltonian and the
//! generic q-ladder operator families.
//!
//! Operators act on samples over the two-branch lattice. In the branch
//! coordinate `x` the shift `s ↦ s + 1` of `x = q^s` becomes `x ↦ qx`, which
//! moves from row `k` to row `k + 1` on either branch.

mod families;
mod grid;
mod ladder;

pub use families::{verify_ladder_family, LadderFamily, FAMILY_GRID_LEN};
pub use grid::{inner_product, GridFunction};
pub use ladder::{
    adjointness_residual, apply_b, apply_bdag, commutator_residual, e_factorial, eigenvalue,
    factorization_residual, gram_matrix, hamiltonian, hamiltonian_residual, lowering_residual,
    orthonormality_residual, pointwise_lattice, raising_residual, wavefunction, wavefunctions,
    Basis, OperatorMatrix, DEGREE_CAP,
};
