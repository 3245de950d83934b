use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{load_representation, ObserverKind, ObserverMeta, RepresentationSet};
use crate::error::{Error, Result};

/// A registry row: observer metadata plus the files holding its data.
/// Data is loaded lazily via [`RegistryEntry::load`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub meta: ObserverMeta,
    pub matrix: PathBuf,
    pub labels: PathBuf,
}

impl RegistryEntry {
    pub fn load(&self) -> Result<RepresentationSet> {
        load_representation(&self.matrix, &self.labels, &self.meta)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    #[serde(default)]
    observer: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    matrix: PathBuf,
    labels: PathBuf,
    family: Option<String>,
    accuracy: Option<f64>,
    #[serde(default)]
    kind: ObserverKind,
}

/// Parse a TOML registry of `[[observer]]` tables. Relative paths resolve
/// against the registry's directory; entries come back sorted by id.
pub fn registry_load(config_path: impl AsRef<Path>) -> Result<Vec<RegistryEntry>> {
    let path = config_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawRegistry =
        toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(raw.observer.len());
    for e in raw.observer {
        if !seen.insert(e.id.clone()) {
            return Err(Error::Registry(format!("duplicate observer id {:?}", e.id)));
        }
        if let Some(acc) = e.accuracy {
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::Registry(format!(
                    "observer {:?}: accuracy {acc} outside [0, 1]",
                    e.id
                )));
            }
        }
        let matrix = base.join(&e.matrix);
        let labels = base.join(&e.labels);
        for f in [&matrix, &labels] {
            if !f.is_file() {
                return Err(Error::Registry(format!(
                    "observer {:?}: file {} does not exist",
                    e.id,
                    f.display()
                )));
            }
        }
        entries.push(RegistryEntry {
            meta: ObserverMeta {
                observer_id: e.id,
                family: e.family,
                accuracy: e.accuracy,
                kind: e.kind,
            },
            matrix,
            labels,
        });
    }
    entries.sort_by(|a, b| a.meta.observer_id.cmp(&b.meta.observer_id));
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(dir: &Path, name: &str) {
        fs::write(dir.join(name), "1,2\n3,4\n").unwrap();
    }

    #[test]
    fn sorted_by_id() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "m.csv");
        touch(dir.path(), "l.txt");
        let reg = dir.path().join("reg.toml");
        fs::write(
            &reg,
            r#"
[[observer]]
id = "zeta"
matrix = "m.csv"
labels = "l.txt"
kind = "brain"

[[observer]]
id = "alpha"
matrix = "m.csv"
labels = "l.txt"
family = "resnet"
accuracy = 0.75
"#,
        )
        .unwrap();
        let entries = registry_load(&reg).unwrap();
        let ids: Vec<_> = entries.iter().map(|e| e.meta.observer_id.as_str()).collect();
        assert_eq!(ids, ["alpha", "zeta"]);
        assert_eq!(entries[0].meta.accuracy, Some(0.75));
        assert_eq!(entries[0].meta.kind, ObserverKind::Model);
        assert_eq!(entries[1].meta.kind, ObserverKind::Brain);
    }

    #[test]
    fn duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "m.csv");
        touch(dir.path(), "l.txt");
        let reg = dir.path().join("reg.toml");
        let entry = "[[observer]]\nid = \"a\"\nmatrix = \"m.csv\"\nlabels = \"l.txt\"\n";
        fs::write(&reg, format!("{entry}{entry}")).unwrap();
        assert!(matches!(registry_load(&reg), Err(Error::Registry(_))));
    }

    #[test]
    fn dangling_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "l.txt");
        let reg = dir.path().join("reg.toml");
        fs::write(
            &reg,
            "[[observer]]\nid = \"a\"\nmatrix = \"missing.csv\"\nlabels = \"l.txt\"\n",
        )
        .unwrap();
        let err = registry_load(&reg).unwrap_err();
        assert!(err.to_string().contains("missing.csv"));
    }
}
