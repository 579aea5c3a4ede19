use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::ExperimentConfig;
use crate::error::{Error, Result};

/// Footer identifying what produced a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub version: String,
}

impl Provenance {
    pub fn of(config: &ExperimentConfig) -> Self {
        Self {
            config_sha256: config.hash(),
            seeds: config.seeds.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn footer(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "# config_sha256={}\n# seeds={}\n# version=ctxspan {}\n",
            self.config_sha256,
            seeds.join(" "),
            self.version
        )
    }
}

/// Long-format CSV of serializable rows plus provenance footer.
pub struct CsvReport;

impl CsvReport {
    pub fn write<T: Serialize>(path: &Path, rows: &[T], provenance: &Provenance) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        let mut bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
        bytes.extend_from_slice(provenance.footer().as_bytes());
        let mut f = File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::format(format!("csv: {e}"))
}

/// JSON artifact wrapping rows with their provenance.
#[derive(Serialize)]
pub(crate) struct JsonReport<'a, T: Serialize> {
    pub provenance: &'a Provenance,
    pub rows: &'a [T],
}
