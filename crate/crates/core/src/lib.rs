//! Supervisory control of discrete-event systems under partial observation:
//! generator algebra, supremal controllable and relatively observable
//! synthesis, supervisor localization, and a heterarchical synthesis pipeline.

pub mod automata;
pub mod error;
pub mod fixtures;
pub mod heterarchical;
pub mod io;
pub mod localization;
pub mod synthesis;
pub mod verify;

pub use automata::{
    EventAttrs, EventId, EventSet, EventTable, Generator, ObservationMask, StateId,
};
pub use error::{Error, Result};
