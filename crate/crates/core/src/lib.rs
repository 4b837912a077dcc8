pub mod error;
pub mod format;
pub mod param;
pub mod series;
pub mod scalar;
