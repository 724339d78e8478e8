//! HPV table ingestion.

use std::path::Path;

use sha2::{Digest, Sha256};
use smi_core::models::HpvRecord;

use crate::error::CliError;

/// The bundled 13-population table. See `data/README.md` for its origin.
pub const BUNDLED_HPV: &str = include_str!("../data/hpv.csv");
pub const BUNDLED_HPV_SHA256: &str = "af64c6476d37e684778a202d42a36e3598cd32ed9f37589cec0de02e201ccb6a";

pub const HPV_HEADER: [&str; 5] = ["pop_id", "ncases", "person_years", "ninf", "npart"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse an HPV CSV, collecting one message per bad row.
pub fn parse_hpv(text: &str, source: &str) -> Result<Vec<HpvRecord>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{source}: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != HPV_HEADER {
        return Err(CliError::Usage(format!(
            "{source}: expected header {}, got {}",
            HPV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (i, row) in reader.deserialize::<HpvRecord>().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        match row {
            Ok(r) => match r.validate() {
                Ok(()) => records.push(r),
                Err(e) => problems.push(format!("line {line}: {e}")),
            },
            Err(e) => problems.push(format!("line {line}: {e}")),
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Usage(format!("{source}: {} bad row(s)\n  {}", problems.len(), problems.join("\n  "))));
    }
    if records.is_empty() {
        return Err(CliError::Usage(format!("{source}: no data rows")));
    }
    Ok(records)
}

/// Records, a label for the source, and the SHA-256 of the raw bytes.
pub fn load_hpv(path: Option<&Path>) -> Result<(Vec<HpvRecord>, String, String), CliError> {
    match path {
        None => Ok((parse_hpv(BUNDLED_HPV, "bundled hpv.csv")?, "bundled".into(), sha256_hex(BUNDLED_HPV.as_bytes()))),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            let label = p.display().to_string();
            Ok((parse_hpv(&text, &label)?, label, sha256_hex(text.as_bytes())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_checksum_and_shape() {
        assert_eq!(sha256_hex(BUNDLED_HPV.as_bytes()), BUNDLED_HPV_SHA256);
        let rows = parse_hpv(BUNDLED_HPV, "bundled").unwrap();
        assert_eq!(rows.len(), 13);
    }

    #[test]
    fn bad_rows_are_all_reported() {
        let text = "pop_id,ncases,person_years,ninf,npart\na,1,100,3,2\nb,x,100,1,2\nc,1,0,1,2\n";
        let err = parse_hpv(text, "t.csv").unwrap_err().to_string();
        assert!(err.contains("3 bad row(s)"), "{err}");
        assert!(err.contains("line 2") && err.contains("line 3") && err.contains("line 4"), "{err}");
    }

    #[test]
    fn wrong_header_is_a_usage_error() {
        let err = parse_hpv("id,y,t,z,n\n1,1,1,1,1\n", "t.csv").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
