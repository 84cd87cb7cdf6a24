pub mod bounds;
pub mod dmn;
pub mod driver;
pub mod dual;
pub mod error;
pub mod fft;
pub mod material;
pub mod reference;
pub mod solver;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
