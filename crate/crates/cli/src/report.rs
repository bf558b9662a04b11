//! CSV emission: one header row naming every column (with units in the
//! names), full-precision data rows, and `#` metadata comments that suffice
//! to reproduce the run. Floats use Rust's shortest round-trip formatting,
//! so every emitted number parses back to the identical value.

use std::io::Write;
use std::path::Path;

pub struct CsvReport {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    leading_comments: String,
    trailing_comments: Vec<String>,
}

impl CsvReport {
    pub fn new(command: &str, header: Vec<&'static str>, config_lines: &str) -> Self {
        let mut leading = String::new();
        leading.push_str(&format!("# cellcov {}\n", env!("CARGO_PKG_VERSION")));
        leading.push_str(&format!("# command = {command}\n"));
        leading.push_str(config_lines);
        CsvReport {
            header,
            rows: Vec::new(),
            leading_comments: leading,
            trailing_comments: Vec::new(),
        }
    }

    pub fn push_row(&mut self, values: &[f64]) {
        assert_eq!(
            values.len(),
            self.header.len(),
            "column count must stay constant"
        );
        self.rows
            .push(values.iter().map(|v| format!("{v}")).collect());
    }

    pub fn push_mixed_row(&mut self, values: Vec<String>) {
        assert_eq!(
            values.len(),
            self.header.len(),
            "column count must stay constant"
        );
        self.rows.push(values);
    }

    pub fn comment(&mut self, line: String) {
        self.trailing_comments.push(line);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.leading_comments);
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for line in &self.trailing_comments {
            out.push_str(&format!("# {line}\n"));
        }
        out
    }

    pub fn write(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = self.render();
        match out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().write_all(text.as_bytes()),
        }
    }
}
