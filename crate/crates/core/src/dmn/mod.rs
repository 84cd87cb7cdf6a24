//! Deep material network: tree topology, linear laminate homogenization and
//! the kinematic operator linking interface jumps to leaf strains.

mod laminate;
mod operator;
mod topology;

pub use laminate::{default_shift, homogenize_linear, laminate_stiffness, laminate_stiffness_with_shift};
pub use operator::{GradientOperator, Term};
pub use topology::{random_direction, Child, ModelFile, Topology, TreeShape, MODEL_VERSION, WEIGHT_EPS};
