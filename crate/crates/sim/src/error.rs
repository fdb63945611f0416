use thiserror::Error;

use crate::kernel::ProcessId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown process {0}")]
    UnknownProcess(ProcessId),
    #[error("termination detection already initialized for phase {0}")]
    AlreadyInitialized(u64),
    #[error("no barrier has been detected yet")]
    NoBarrierYet,
    #[error("process {0} is already registered")]
    AlreadyRegistered(ProcessId),
    #[error("process {0} is not registered")]
    NotRegistered(ProcessId),
    #[error("locking policy forbids this operation: {0}")]
    PolicyViolation(String),
    #[error("malformed payload: {0}")]
    Payload(String),
}
