pub mod body;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod flag;
pub mod functional;
pub mod geometry;
pub mod harness;
pub mod quermass;
pub mod report;
pub mod special;

pub use body::{Body, BodySpec};
pub use error::{Error, Result};
pub use estimate::Estimate;
pub use exec::{ExecMode, McConfig};
pub use flag::{Flag, FlagSampler, FlagSampling, Frame, IndexSeq, RngSpec};
pub use quermass::Permutation;
