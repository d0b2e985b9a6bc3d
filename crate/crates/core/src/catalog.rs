// Copyright 2026 The magnus-core Authors
// SPDX-License-Identifier: Apache-2.0

//! Bundled pulse descriptors.
//!
//! The JSON files under `data/` are compiled into the library. Setting
//! `MAGNUS_DATA_DIR` replaces them with the `*.json` files of that
//! directory.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pulse::PulseFile;

/// Environment variable naming an alternative data directory.
pub const DATA_DIR_ENV: &str = "MAGNUS_DATA_DIR";

const BUNDLED: &[(&str, &str)] = &[
    ("eburp1.json", include_str!("../data/eburp1.json")),
    ("eburp2.json", include_str!("../data/eburp2.json")),
    ("iburp1.json", include_str!("../data/iburp1.json")),
    ("iburp2.json", include_str!("../data/iburp2.json")),
    ("uburp.json", include_str!("../data/uburp.json")),
    ("reburp.json", include_str!("../data/reburp.json")),
    ("g3.json", include_str!("../data/g3.json")),
    ("g4.json", include_str!("../data/g4.json")),
    ("q3.json", include_str!("../data/q3.json")),
    ("q5.json", include_str!("../data/q5.json")),
    ("gaussian90.json", include_str!("../data/gaussian90.json")),
    ("gaussian270.json", include_str!("../data/gaussian270.json")),
    ("sech180.json", include_str!("../data/sech180.json")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    /// File name, e.g. `reburp.json`.
    pub file: String,
    pub pulse: PulseFile,
}

fn data_dir_override() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Pulses compiled into the binary, in a fixed order.
pub fn bundled() -> Vec<CatalogEntry> {
    BUNDLED
        .iter()
        .map(|(file, text)| CatalogEntry {
            file: file.to_string(),
            pulse: PulseFile::from_json(text, file).expect("bundled pulse files are valid"),
        })
        .collect()
}

/// All `*.json` pulse files in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<CatalogEntry>> {
    let io = |source| Error::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|path| {
            Ok(CatalogEntry {
                file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                pulse: PulseFile::from_path(&path)?,
            })
        })
        .collect()
}

/// The active catalog: `MAGNUS_DATA_DIR` if set, otherwise the bundled set.
pub fn catalog() -> Result<Vec<CatalogEntry>> {
    match data_dir_override() {
        Some(dir) => load_dir(&dir),
        None => Ok(bundled()),
    }
}

/// Resolves a `--pulse` argument: an existing path, or the file name
/// (with or without `data/` prefix and `.json` suffix) or pulse name of a
/// catalog entry.
pub fn resolve(spec: &str) -> Result<PulseFile> {
    let path = Path::new(spec);
    if path.is_file() {
        return PulseFile::from_path(path);
    }
    let key = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    let stem = key.trim_end_matches(".json").to_ascii_lowercase();
    catalog()?
        .into_iter()
        .find(|e| {
            e.file.trim_end_matches(".json").eq_ignore_ascii_case(&stem)
                || e.pulse.name.eq_ignore_ascii_case(&stem)
        })
        .map(|e| e.pulse)
        .ok_or_else(|| Error::InvalidPulse(format!("no pulse file or catalog entry `{spec}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::build_pulse;

    #[test]
    fn bundled_entries_build() {
        let all = bundled();
        assert_eq!(all.len(), BUNDLED.len());
        for e in &all {
            let p = build_pulse(&e.pulse).unwrap();
            assert!(p.nominal_flip().is_some(), "{}", e.file);
        }
    }

    #[test]
    fn resolves_by_file_and_name() {
        assert_eq!(resolve("data/reburp.json").unwrap().name, "RE-BURP");
        assert_eq!(resolve("g4").unwrap().name, "G4");
        assert_eq!(resolve("E-BURP-2").unwrap().name, "E-BURP-2");
        assert!(resolve("nope.json").is_err());
    }

    #[test]
    fn tabulated_pulses_cite_sources() {
        for e in bundled() {
            if matches!(e.pulse.family.as_str(), "fourier" | "gaussian_cascade") {
                assert!(e.pulse.source.is_some(), "{}", e.file);
            }
        }
    }
}
