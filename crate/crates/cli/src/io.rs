//! Deterministic output writing: CSV with 17-significant-digit floats and
//! LF line endings, JSON with sorted keys, and a run manifest that records
//! the content hash of every file as it is written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use kolmo_core::integrator::ScalarTracks;
use kolmo_core::{PhysicalField, TorusConfig};

use crate::error::{CliError, CliResult};

/// Formats a float with 17 significant digits, enough to round-trip `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shortest decimal form of a time, used in snapshot file names.
pub fn fmt_time(t: f64) -> String {
    format!("{t}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Serializes through `serde_json::Value`, whose object maps are ordered,
/// so every emitted JSON document has sorted keys.
pub fn to_sorted_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let value = serde_json::to_value(value)
        .map_err(|e| CliError::Io(format!("serializing json: {e}")))?;
    let mut bytes = serde_json::to_vec_pretty(&value)
        .map_err(|e| CliError::Io(format!("serializing json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Collects every file of one command run under a root directory and then
/// seals them into `manifest.json`. All writes go through this single
/// writer, so concurrent experiment workers never interleave file output.
pub struct OutputWriter {
    root: PathBuf,
    started_unix_ms: u64,
    files: Vec<(String, String)>,
}

impl OutputWriter {
    pub fn new(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", root.display())))?;
        Ok(OutputWriter {
            root: root.to_path_buf(),
            started_unix_ms: unix_millis(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes one output file and records its content hash.
    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
        }
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.files.push((rel.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let bytes = to_sorted_json(value)?;
        self.write_bytes(rel, &bytes)
    }

    /// Writes scalar tracks as `t,l2,x,gradx2` rows.
    pub fn write_timeseries(&mut self, rel: &str, tracks: &ScalarTracks) -> CliResult<()> {
        let mut out = String::with_capacity(tracks.len() * 96 + 16);
        out.push_str("t,l2,x,gradx2\n");
        for i in 0..tracks.len() {
            out.push_str(&fmt_float(tracks.t[i]));
            out.push(',');
            out.push_str(&fmt_float(tracks.l2[i]));
            out.push(',');
            out.push_str(&fmt_float(tracks.x[i]));
            out.push(',');
            out.push_str(&fmt_float(tracks.grad_x_sq[i]));
            out.push('\n');
        }
        self.write_bytes(rel, out.as_bytes())
    }

    /// Writes a vorticity field as `x,y,omega` rows in row-major node order.
    pub fn write_field(&mut self, rel: &str, field: &PhysicalField) -> CliResult<()> {
        let grid = field.config();
        let mut out = String::with_capacity(grid.nx * grid.ny * 60 + 16);
        out.push_str("x,y,omega\n");
        for p in 0..grid.nx {
            for q in 0..grid.ny {
                let (x, y) = grid.node(p, q);
                out.push_str(&fmt_float(x));
                out.push(',');
                out.push_str(&fmt_float(y));
                out.push(',');
                out.push_str(&fmt_float(field.value(p, q)));
                out.push('\n');
            }
        }
        self.write_bytes(rel, out.as_bytes())
    }

    /// Writes `manifest.json` recording the command, config digest, seed,
    /// tool version, wall-clock bounds, and the hash of every output file.
    pub fn finish(
        mut self,
        command: &str,
        config_sha256: &str,
        seed: Option<u64>,
    ) -> CliResult<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            config_sha256: &'a str,
            finished_unix_ms: u64,
            outputs: Vec<BTreeMap<&'a str, &'a str>>,
            schema_version: u32,
            seed: Option<u64>,
            started_unix_ms: u64,
            tool_version: &'a str,
        }
        let outputs = self
            .files
            .iter()
            .map(|(path, sha)| {
                BTreeMap::from([("path", path.as_str()), ("sha256", sha.as_str())])
            })
            .collect();
        let manifest = Manifest {
            command,
            config_sha256,
            finished_unix_ms: unix_millis(),
            outputs,
            schema_version: crate::config::SCHEMA_VERSION,
            seed,
            started_unix_ms: self.started_unix_ms,
            tool_version: env!("CARGO_PKG_VERSION"),
        };
        let bytes = to_sorted_json(&manifest)?;
        let path = self.root.join("manifest.json");
        std::fs::write(&path, &bytes)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.files.clear();
        Ok(())
    }
}

/// Digest of a config file's bytes, recorded in the manifest.
pub fn config_digest(bytes: &[u8]) -> String {
    sha256_hex(bytes)
}

/// Reads a field CSV written by [`OutputWriter::write_field`] back into
/// node values, checking the header and the node coordinates.
pub fn read_field_csv(path: &Path, grid: &TorusConfig) -> CliResult<PhysicalField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "x,y,omega" {
        return Err(CliError::Config(format!(
            "{}: expected header x,y,omega, got {header:?}",
            path.display()
        )));
    }
    let mut values = Vec::with_capacity(grid.nx * grid.ny);
    for (i, line) in lines.enumerate() {
        let mut cols = line.split(',');
        let (x, y, omega) = (|| {
            let x = cols.next()?.parse::<f64>().ok()?;
            let y = cols.next()?.parse::<f64>().ok()?;
            let omega = cols.next()?.parse::<f64>().ok()?;
            cols.next().is_none().then_some((x, y, omega))
        })()
        .ok_or_else(|| {
            CliError::Config(format!("{}: line {}: malformed row", path.display(), i + 2))
        })?;
        let (p, q) = (i / grid.ny, i % grid.ny);
        if p >= grid.nx {
            return Err(CliError::Config(format!(
                "{}: more rows than the {}x{} grid has nodes",
                path.display(),
                grid.nx,
                grid.ny
            )));
        }
        let (xn, yn) = grid.node(p, q);
        if (x - xn).abs() > 1e-12 || (y - yn).abs() > 1e-12 {
            return Err(CliError::Config(format!(
                "{}: line {}: node ({x}, {y}) does not match the grid node ({xn}, {yn})",
                path.display(),
                i + 2
            )));
        }
        values.push(omega);
    }
    if values.len() != grid.nx * grid.ny {
        return Err(CliError::Config(format!(
            "{}: {} rows for a {}x{} grid",
            path.display(),
            values.len(),
            grid.nx,
            grid.ny
        )));
    }
    Ok(PhysicalField::from_raw(grid, values))
}
