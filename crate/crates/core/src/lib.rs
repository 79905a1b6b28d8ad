pub mod experiment;
pub mod geometry;
pub mod loewner;
pub mod metrics;
pub mod parallel;
pub mod paths;
pub mod perturbation;
pub mod report;
pub mod verify;
