pub mod csv;
pub mod gfmt;
pub mod replay;
pub mod snapshot;
