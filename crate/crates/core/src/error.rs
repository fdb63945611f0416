use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("expected {expected} announced types, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("mechanism needs at least {required} players, got {actual}")]
    TooFewPlayers { required: usize, actual: usize },
    #[error("malformed interval [{first}, {last}] for {items} items")]
    MalformedInterval { first: usize, last: usize, items: usize },
    #[error("negative value in announced type of player {player}")]
    NegativeValue { player: usize },
    #[error("{0}")]
    InvalidGraph(String),
    #[error("no path from {source_node} to {sink} avoiding edge {edge}")]
    NoAlternativePath { source_node: String, sink: String, edge: String },
    #[error("announced type does not fit mechanism {mechanism}: {detail}")]
    TypeMismatch { mechanism: &'static str, detail: String },
}
