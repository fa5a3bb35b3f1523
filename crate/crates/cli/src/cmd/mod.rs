pub mod eval;
pub mod prep;
pub mod run;
pub mod select;
pub mod simulate;
pub mod transform;
