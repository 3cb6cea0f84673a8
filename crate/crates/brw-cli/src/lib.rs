//! IO companion to `brw-core`: model and projection file formats, JSON and
//! CSV output writers, the parallel Monte Carlo driver, and the
//! verification fixtures behind `brw verify-example`.

pub mod formats;
pub mod par;
pub mod verify;
