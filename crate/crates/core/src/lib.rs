pub mod airports;
pub mod clock;
pub mod features;
pub mod ingest;
pub mod interpret;
pub mod tensor;
pub mod training;
pub mod model;
