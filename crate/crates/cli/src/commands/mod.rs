pub mod average;
pub mod correlate;
pub mod ensemble;
pub mod iaa;
pub mod refscores;
pub mod score;
pub mod validate;
