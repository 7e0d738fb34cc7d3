//! CSV tables, the JSON summary and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Version string: crate version plus the `git describe` of the build tree
/// when one was available.
pub fn version_string() -> String {
    match option_env!("FIBERPATH_GIT_DESCRIBE") {
        Some(g) if !g.is_empty() => format!("{}+{g}", fiberpath::VERSION),
        _ => fiberpath::VERSION.to_string(),
    }
}

/// Shortest round-trip-safe fixed format: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Csv {
    pub name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Csv { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Writes through a temporary file in the same directory, so readers never
/// see a half-written file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))
}
