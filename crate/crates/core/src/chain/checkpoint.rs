//! Checkpoints: a config digest plus the child-index path of the next
//! pre-order node. Replaying the path under the same config resumes the
//! exhaustion exactly where it stopped.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub digest: String,
    pub path: Vec<u32>,
}

impl Checkpoint {
    pub fn save(&self, file: &Path) -> Result<()> {
        let path_s = if self.path.is_empty() {
            "-".to_string()
        } else {
            self.path
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        fs::write(file, format!("digest {}\npath {}\n", self.digest, path_s))?;
        Ok(())
    }

    pub fn load(file: &Path) -> Result<Checkpoint> {
        let text = fs::read_to_string(file)?;
        let mut digest = None;
        let mut path = None;
        for line in text.lines() {
            if let Some(d) = line.strip_prefix("digest ") {
                digest = Some(d.trim().to_string());
            } else if let Some(p) = line.strip_prefix("path ") {
                let p = p.trim();
                path = Some(if p == "-" {
                    Vec::new()
                } else {
                    p.split(',')
                        .map(|t| t.parse::<u32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| Error::Config(format!("bad checkpoint path: {p}")))?
                });
            }
        }
        match (digest, path) {
            (Some(digest), Some(path)) => Ok(Checkpoint { digest, path }),
            _ => Err(Error::Config(format!(
                "malformed checkpoint file {}",
                file.display()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("cp.txt");
        for path in [vec![], vec![0], vec![3, 1, 4, 1, 5]] {
            let cp = Checkpoint {
                digest: "abcd1234".into(),
                path,
            };
            cp.save(&file).unwrap();
            assert_eq!(Checkpoint::load(&file).unwrap(), cp);
        }
    }

    #[test]
    fn malformed_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("cp.txt");
        std::fs::write(&file, "digest abcd\n").unwrap();
        assert!(Checkpoint::load(&file).is_err());
        std::fs::write(&file, "digest abcd\npath 1,x\n").unwrap();
        assert!(Checkpoint::load(&file).is_err());
    }
}
