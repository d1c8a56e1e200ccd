use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range for mode {mode} (size {size})")]
    Index { mode: usize, index: usize, size: usize },

    #[error("index has {got} components, tensor has order {order}")]
    IndexLength { got: usize, order: usize },

    #[error("offset {offset} out of range for {len} elements")]
    Offset { offset: usize, len: usize },

    #[error("mode {mode} out of range for order {order}")]
    Mode { mode: usize, order: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("element count exceeds capacity ({0})")]
    Capacity(String),

    #[error("not symmetric positive definite: {0}")]
    Definiteness(String),

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),
}
