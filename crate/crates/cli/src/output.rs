//! Output files. Every CSV starts with one `#` provenance line naming the
//! command, the SHA-256 of the effective config and the seed, so a table can
//! always be matched to the run that produced it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Hash of everything that can change a result; the output location is not.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = Default::default();
    hex::encode(Sha256::digest(c.to_toml().as_bytes()))
}

/// Destination directory plus the provenance every file is stamped with.
pub struct Output {
    pub dir: PathBuf,
    command: &'static str,
    hash: String,
    seed: u64,
}

impl Output {
    pub fn new(command: &'static str, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::Io(format!("{}: {e}", cfg.output_dir.display())))?;
        Ok(Self {
            dir: cfg.output_dir.clone(),
            command,
            hash: config_hash(cfg),
            seed: cfg.seed,
        })
    }

    pub fn header(&self, extra: &[(&str, String)]) -> String {
        let mut line = format!(
            "# molmimo {} config_sha256={} seed={}",
            self.command, self.hash, self.seed
        );
        for (k, v) in extra {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok((path, BufWriter::new(file)))
    }

    /// Writes `rows` under the provenance header and returns the path.
    pub fn csv<R: Serialize>(&self, name: &str, rows: &[R], extra: &[(&str, String)]) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        writeln!(w, "{}", self.header(extra))?;
        let mut writer = csv::Writer::from_writer(w);
        for r in rows {
            writer.serialize(r)?;
        }
        writer.flush()?;
        Ok(path)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        writeln!(w, "{}", self.header(&[]))?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(path)
    }
}

pub type HeaderFields = Vec<(String, String)>;

/// Reads a CSV written by [`Output::csv`]; returns the rows and the
/// `key=value` pairs of its header line.
pub fn read_csv<R: serde::de::DeserializeOwned>(path: &Path) -> Result<(Vec<R>, HeaderFields), CliError> {
    let body = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let meta = body
        .lines()
        .next()
        .filter(|l| l.starts_with('#'))
        .map(|l| {
            l.split_whitespace()
                .filter_map(|kv| kv.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        })
        .unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((rows, meta))
}
