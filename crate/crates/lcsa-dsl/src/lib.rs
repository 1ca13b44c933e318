//! Text format for user-defined conformal superalgebras (`.lcsa`) and
//! degree-0 modules (`.g0m`), plus machine-readable JSON reports.

pub mod parser;
pub mod printer;
pub mod report;

pub use parser::{parse_algebra, parse_ann_element, parse_element, parse_g0_module, ParseError};
pub use printer::print_algebra;
pub use report::{emit_report, Report};
