//! File formats and synthetic datasets.

pub mod csv;
pub mod generate;
pub mod result;
pub mod svg;

pub use self::csv::{load_csv, read_csv, write_csv, CsvOptions};
pub use generate::{generate, Generator};
pub use result::{load_result, save_result, FitResult};
pub use svg::{render_svg, write_svg, Projection, SvgOptions};
