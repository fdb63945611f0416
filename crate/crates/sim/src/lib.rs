//! Simulated network, termination detection, communication layer and the
//! distributed mechanism protocol.

pub mod dtd;
pub mod error;
pub mod hlc;
pub mod kernel;
pub mod protocol;
pub mod world;

pub use error::SimError;
pub use kernel::{Class, Ctx, Kernel, KernelConfig, Message, ProcessId, RunReport, Timeout, TraceEvent};
