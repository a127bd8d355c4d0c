//! Two-dimensional geometric quantization: latent vectors are bounded, split into
//! coordinate pairs, and each pair is snapped to the nearest point of a fixed 2D grid
//! (rectangular, hexagonal, or rhombic). The grids form an implicit product codebook
//! addressed by mixed-radix codes.
//!
//! ```
//! use q2d2::{QuantizerConfig, TilingKind, CodebookLayout};
//!
//! let q = QuantizerConfig::uniform(TilingKind::Rhombic, vec![7; 6]).unwrap();
//! let out = q.quantize(&[0.1, -0.4, 0.9, 0.0, -1.0, 0.3]).unwrap();
//! let layout = CodebookLayout::from_config(&q).unwrap();
//! let token = layout.encode_global(&out.pair_codes).unwrap();
//! assert_eq!(layout.decode_global(token).unwrap(), out.pair_codes);
//! ```

pub mod analytics;
pub mod baselines;
pub mod codebook;
pub mod error;
pub mod grid;
pub mod nearest;
pub mod par;
pub mod quantizer;
pub mod token_io;
pub mod trainer;

pub use codebook::{pair_size, CodebookLayout, TokenFrame};
pub use error::{Error, Result};
pub use grid::{build_grid, GridPoint, PairGrid, PairGridSpec, TilingKind};
pub use quantizer::{LatentVector, NearestSearch, QuantizedVector, QuantizerConfig};
pub use token_io::{read_stream, write_stream, TokenStreamHeader};
