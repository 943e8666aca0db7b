//! File formats and configuration.

mod binary;
mod compressed;
mod config;
mod stream;
mod weights;

pub use compressed::{
    read_compressed, read_compressed_file, write_compressed, write_compressed_file,
    COMPRESSED_MAGIC, COMPRESSED_VERSION,
};
pub use config::{
    load_config, parse_config, read_matrix_json, resolve_config, write_matrix_json, ConfigOverrides,
};
pub use stream::{
    read_stream, read_stream_file, read_stream_header, read_stream_header_file, write_stream,
    write_stream_file, StreamFileHeader, FLAG_ROW_MAJOR_FHW, STREAM_HEADER_LEN, STREAM_MAGIC,
    STREAM_VERSION,
};
pub use weights::{
    read_weights, read_weights_file, write_weights, write_weights_file,
    ARCH_PRENORM_XATTN_RELU_HEAD, WEIGHTS_HEADER_LEN, WEIGHTS_MAGIC, WEIGHTS_VERSION,
};
