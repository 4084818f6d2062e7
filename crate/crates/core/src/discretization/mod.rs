//! Taylor–Hood discretization of the slip-Stokes forms.

mod assemble;
mod helmholtz;
mod slip;
mod space;

pub use assemble::{assemble, boundary_mass, convection_matrix, energy_by_quadrature, load_vector, OperatorSet};
pub use helmholtz::{greens_formula_check, helmholtz_project, LerayProjector};
pub use slip::{SlipArc, SlipCoefficient};
pub use space::{edge_point, p1_shapes, p2_shapes, BoundaryMode, CellPoint, FunctionSpace, NodeDofs, NodeFrame};
