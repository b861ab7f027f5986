pub mod kg;
pub mod rules;
pub mod scalar;
pub mod tensor;
pub mod eval;
pub mod synthetic;
pub mod policy;
pub mod training;
pub mod experiment;
pub mod checkpoint;
pub mod cli;
