//! Machine-readable run manifests in the same key/value text format the
//! config loader reads back.

use std::io::Write;
use std::path::Path;

use super::config::ExperimentConfig;
use crate::Result;

/// Writes `run_manifest.txt`: the resolved config (canonical form), the
/// config hash, tool metadata, and any experiment-specific notes.
pub fn write_manifest(
    dir: &Path,
    config: &ExperimentConfig,
    notes: &[(String, String)],
) -> Result<()> {
    let mut out = std::fs::File::create(dir.join("run_manifest.txt"))?;
    writeln!(out, "config_hash = {}", config.config_hash())?;
    writeln!(out, "tool = lipband {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "threads = {}", config.worker_count())?;
    writeln!(out, "out_dir = {}", config.out_dir.display())?;
    for (key, value) in notes {
        writeln!(out, "{key} = {value}")?;
    }
    writeln!(out)?;
    write!(out, "{}", config.canonical_text())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::config::{parse_sections, ExperimentKind};

    #[test]
    fn manifest_round_trips_through_the_parser() {
        let dir = std::env::temp_dir().join(format!("lipband-man-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let config = ExperimentConfig::defaults(ExperimentKind::Transfer);
        write_manifest(&dir, &config, &[("note".into(), "hello".into())]).unwrap();
        let text = std::fs::read_to_string(dir.join("run_manifest.txt")).unwrap();
        let sections = parse_sections(&text).unwrap();
        let root = &sections[""];
        assert!(root.iter().any(|(k, v)| k == "config_hash" && *v == config.config_hash()));
        assert!(root.iter().any(|(k, _)| k == "note"));
        assert!(sections.contains_key("estimators"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
