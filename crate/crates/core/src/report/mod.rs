//! Deterministic CSV and SVG artifact writers.

mod svg;

use std::path::{Path, PathBuf};

pub use svg::{line_chart, radar_chart, LineSeries, RadarSeries};

pub const ENGINE: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed-precision float cell; `NaN` and infinities render as empty cells.
pub fn num(value: f64, decimals: usize) -> String {
    if value.is_finite() {
        let s = format!("{value:.decimals$}");
        // avoid "-0.00"
        if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
            s[1..].to_owned()
        } else {
            s
        }
    } else {
        String::new()
    }
}

/// A CSV table preceded by `#` comment lines: a provenance line first, then
/// any notes.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        let cells: Vec<String> = cells.into_iter().map(Into::into).collect();
        debug_assert_eq!(cells.len(), self.header.len(), "row width");
        self.rows.push(cells);
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, provenance: &str) -> String {
        let mut out = format!("# {provenance}\n");
        for note in &self.notes {
            out.push_str(&format!("# {note}\n"));
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        let bytes = writer.into_inner().expect("in-memory flush");
        out.push_str(std::str::from_utf8(&bytes).expect("utf-8 cells"));
        out
    }
}

/// Single owner of the output directory: records every artifact written.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    provenance: String,
    written: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>, config_hash: &str) -> std::io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            provenance: format!("{ENGINE} {VERSION} config={config_hash}"),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn write_text(&mut self, relative: &str, contents: &str) -> std::io::Result<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.written.push(relative.to_owned());
        Ok(())
    }

    pub fn write_csv(&mut self, relative: &str, table: &CsvTable) -> std::io::Result<()> {
        let text = table.render(&self.provenance);
        self.write_text(relative, &text)
    }

    pub fn artifacts(&self) -> &[String] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_provenance_notes_and_quoting() {
        let mut t = CsvTable::new(["name", "value"]);
        t.note("k=0 rows use same-day counts");
        t.row(["Bitcoin", "1.00"]).row(["a,b", "2"]);
        assert_eq!(
            t.render("coinpulse 0.1.0 config=abc"),
            "# coinpulse 0.1.0 config=abc\n# k=0 rows use same-day counts\nname,value\nBitcoin,1.00\n\"a,b\",2\n"
        );
    }

    #[test]
    fn number_cells() {
        assert_eq!(num(3091.6439, 2), "3091.64");
        assert_eq!(num(-0.001, 2), "0.00");
        assert_eq!(num(-0.19, 2), "-0.19");
        assert_eq!(num(f64::NAN, 2), "");
    }
}
