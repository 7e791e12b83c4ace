//! Range coder, `.g4c` container and the encode/decode pipeline.

mod container;
mod pipeline;
pub mod range;
mod report;

pub use container::{
    read_container, split_container, write_container, Header, Layout, OpacityField, Payload,
    Stored, StoredCodebook, CONTAINER_MAGIC, CONTAINER_VERSION, SECTIONS,
};
pub use pipeline::{
    decode_scene, encode_scene, inspect_payload, reconstruct, CodecConfig, Encoded, Encoder,
};
pub use range::{range_decode, range_encode, FrequencyTable, RangeDecoder, RangeEncoder};
pub use report::{size_report, RateReport, SectionSize};
