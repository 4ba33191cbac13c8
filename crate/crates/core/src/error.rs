use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("filter height R={r} exceeds PE array height J={j}")]
    FilterExceedsArray { r: u64, j: u64 },

    #[error("filter row width S={s} exceeds ifmap RF capacity I_s={i_s}")]
    RowExceedsIfmapRf { s: u64, i_s: u64 },

    #[error("GLB of {glb_bits} bits cannot hold a single pass (needs {needed_bits} bits at minimum tile)")]
    GlbTooSmall { glb_bits: u64, needed_bits: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{value} is outside the table range [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },

    #[error("layer too large to enumerate: {macs} MACs exceeds limit {limit}")]
    TooLargeToEnumerate { macs: u64, limit: u64 },

    #[error("unsupported bit width {0}")]
    BitWidth(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
