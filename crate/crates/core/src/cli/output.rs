//! Artifact files: atomic writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Files produced by one command, keyed by file name.
#[derive(Default)]
pub struct Artifacts {
    pub result: serde_json::Value,
    /// The table printed for `--format csv`.
    pub csv: Option<String>,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new<T: Serialize>(result: &T) -> Result<Self, CliError> {
        Ok(Artifacts {
            result: serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?,
            csv: None,
            files: Vec::new(),
        })
    }

    pub fn with_csv(mut self, name: &str, csv: String) -> Self {
        self.files.push((name.to_string(), csv.clone()));
        self.csv = Some(csv);
        self
    }

    pub fn with_file(mut self, name: &str, contents: String) -> Self {
        self.files.push((name.to_string(), contents));
        self
    }
}

#[derive(Serialize)]
pub struct Manifest<'a, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: &'a str,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub spec: &'a S,
    pub files: Vec<String>,
}

/// Writes the result, the extra files and the manifest into `dir`.
pub fn persist<S: Serialize>(
    dir: &Path,
    kind: &str,
    art: &Artifacts,
    spec: &S,
    seed: u64,
    wall_time_s: f64,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let result = dir.join(format!("{kind}.json"));
    write_atomic(&result, to_json(&art.result)?.as_bytes())?;
    written.push(result);
    for (name, contents) in &art.files {
        let p = dir.join(name);
        write_atomic(&p, contents.as_bytes())?;
        written.push(p);
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        kind,
        seed,
        threads: rayon::current_num_threads(),
        wall_time_s,
        spec,
        files: written
            .iter()
            .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from))
            .collect(),
    };
    let mp = dir.join("manifest.json");
    write_atomic(&mp, to_json(&manifest)?.as_bytes())?;
    written.push(mp);
    Ok(written)
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Shortest round-trip decimal, in exponent form for very small or large values.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}
