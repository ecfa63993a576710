//! Matching of operator-provided scene descriptions against imperfectly
//! perceived objects, with possibilistic scoring and redundancy analysis.

pub mod desc;
pub mod geometry;
pub mod matcher;
pub mod possibility;
pub mod redundancy;
pub mod scene;
pub mod synth;
pub mod vocab;

pub use possibility::Possibility;
