//! Textual training records for the fast planner, the search planner and
//! the controller, with parsers for round trips.

mod dataset;
mod text;

pub use dataset::{
    check_round_trip, controller_record, emit_datasets, read_records, sys1_record, sys2_record, DatasetRecord, EmitConfig,
    EmitError, FileEntry, Manifest, RecordKind, RoundTripError, MANIFEST_FILE,
};
pub use text::{parse_meta_plan_text, parse_plan_text, parse_trace_text, ParseError, Verbalize, TEMPLATE_VERSION};
