//! Parameter vectors, data fractions and the objective families.

mod fractions;
mod logistic;
mod param;
mod quadratic;
mod synthetic;
mod task;
mod theory;

pub use fractions::DataFractions;
pub use logistic::{LogisticTask, NUM_CLASSES, NUM_FEATURES};
pub use param::ParamVector;
pub use quadratic::{QuadraticOptima, QuadraticTask};
pub use synthetic::{ClientSamples, SyntheticDataset, SyntheticParams, MIN_CLIENT_SAMPLES};
pub use task::{Objective, Task};
pub use theory::TheoryParams;
