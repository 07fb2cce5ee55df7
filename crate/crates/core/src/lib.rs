pub mod codes;
pub mod error;
pub mod exactmath;
pub mod lpbound;
pub mod perturb;
pub mod specstab;

pub use error::{Error, Result};
pub use exactmath::Rational;
