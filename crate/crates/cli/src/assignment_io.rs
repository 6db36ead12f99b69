//! CSV assignments and edge reports.
//!
//! An assignment file has a mandatory header whose first field is `open`, then one row per
//! open set: its key followed by the stalk coordinates. Rows may have different lengths.
//! Numbers are written with 17 significant digits so files round-trip exactly.

use std::io::{Read, Write};
use std::path::Path;

use sheaf_core::consistency::{Assignment, ConsistencyReport};
use sheaf_core::sheaf::Sheaf;
use sheaf_core::topology::Topology;

use crate::error::{CliError, CliResult};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses an assignment from CSV text; `origin` names the source in errors.
pub fn parse_assignment<'s, R: Read>(sheaf: &'s Sheaf, input: R, origin: &Path) -> CliResult<Assignment<'s>> {
    let csv_err = |source| CliError::Csv { path: origin.to_path_buf(), source };
    let context = |line: u64| format!("{} line {line}", origin.display());
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(csv_err)?;
    if header.get(0) != Some("open") {
        return Err(CliError::invalid(context(1), "the header row must start with `open`"));
    }
    let t = sheaf.topology();
    let mut a = Assignment::new(sheaf);
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let key = record.get(0).unwrap_or_default();
        let open =
            t.open_by_key(key).map_err(|_| CliError::invalid(context(line), format!("unknown open set `{key}`")))?;
        if a.get(open).is_some() {
            return Err(CliError::invalid(context(line), format!("open set `{key}` appears twice")));
        }
        let values = record
            .iter()
            .skip(1)
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().map_err(|_| CliError::invalid(context(line), format!("`{f}` is not a number"))))
            .collect::<CliResult<Vec<f64>>>()?;
        let dim = sheaf.stalk(open).dim();
        if values.len() != dim {
            return Err(CliError::invalid(
                context(line),
                format!("`{key}` has {} values, its stalk has dimension {dim}", values.len()),
            ));
        }
        a.set(open, values).map_err(|e| CliError::invalid(context(line), e.to_string()))?;
    }
    Ok(a)
}

/// Reads an assignment file.
pub fn read_assignment<'s>(sheaf: &'s Sheaf, path: &Path) -> CliResult<Assignment<'s>> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    parse_assignment(sheaf, file, path)
}

/// Writes an assignment as CSV, opens in canonical order.
pub fn write_assignment<W: Write>(a: &Assignment<'_>, out: W) -> std::io::Result<()> {
    let t = a.sheaf().topology();
    let width = a.iter().map(|(_, p)| p.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    let mut header = vec![String::from("open")];
    header.extend((1..=width).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for (open, p) in a.iter() {
        let mut row = vec![t.key(open)];
        row.extend(p.iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()
}

/// Writes the edge table `smaller,larger,error_km`, largest error first.
pub fn write_edges<W: Write>(topology: &Topology, report: &ConsistencyReport, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["smaller", "larger", "error_km"])?;
    for e in &report.edges {
        w.write_record([topology.key(e.smaller), topology.key(e.larger), fmt_f64(e.error)])?;
    }
    w.flush()
}

/// Writes a file through a closure, mapping IO errors to [`CliError::Write`].
pub fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
    std::fs::write(path, buf).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}
