pub mod agents;
pub mod comm;
pub mod harness;
pub mod metrics;
pub mod numeric;
pub mod rng;
pub mod stochastic_field;
pub mod substrate;
pub mod topology;
