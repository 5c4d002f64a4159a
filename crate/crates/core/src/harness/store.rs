//! Solution-set files, output directory bookkeeping and the run manifest.
//!
//! Solution file layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic "LTOPOSOL"
//!      8     4  format version (1)
//!     12     4  parameter layout version
//!     16    32  sha256 of the network descriptor
//!     48     8  parameters per vector (N_prm)
//!     56     8  vector count
//!     64     .  count * N_prm f64 values, vector-major
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{NetworkSpec, ParamVector, LAYOUT_VERSION};

pub const SOLUTION_MAGIC: &[u8; 8] = b"LTOPOSOL";
pub const SOLUTION_VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn spec_hash(spec: &NetworkSpec) -> [u8; 32] {
    Sha256::digest(spec.descriptor().as_bytes()).into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    pub spec_hash: [u8; 32],
    pub n_params: usize,
    pub vectors: Vec<ParamVector>,
}

impl SolutionSet {
    pub fn new(spec: &NetworkSpec, vectors: Vec<ParamVector>) -> Result<Self> {
        let n_params = spec.n_params();
        for v in &vectors {
            if v.len() != n_params {
                return Err(Error::DimensionMismatch {
                    expected: n_params,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            spec_hash: spec_hash(spec),
            n_params,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        self.spec_hash == spec_hash(spec) && self.n_params == spec.n_params()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.n_params * self.len());
        out.extend_from_slice(SOLUTION_MAGIC);
        out.extend_from_slice(&SOLUTION_VERSION.to_le_bytes());
        out.extend_from_slice(&LAYOUT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.spec_hash);
        out.extend_from_slice(&(self.n_params as u64).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in &self.vectors {
            for x in v.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| Err(Error::SolutionFile(msg));
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                needed: HEADER_LEN,
                available: bytes.len(),
            });
        }
        if &bytes[..8] != SOLUTION_MAGIC {
            return bad("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(8) != SOLUTION_VERSION {
            return bad(format!("unsupported version {}", u32_at(8)));
        }
        if u32_at(12) != LAYOUT_VERSION {
            return bad(format!("unsupported parameter layout {}", u32_at(12)));
        }
        let spec_hash: [u8; 32] = bytes[16..48].try_into().unwrap();
        let (n_params, count) = (u64_at(48), u64_at(56));
        let needed = n_params
            .checked_mul(count)
            .and_then(|v| v.checked_mul(8))
            .and_then(|v| v.checked_add(HEADER_LEN as u64))
            .ok_or(Error::DimensionOverflow)?;
        if (bytes.len() as u64) < needed {
            return Err(Error::Truncated {
                needed: needed as usize,
                available: bytes.len(),
            });
        }
        if (bytes.len() as u64) > needed {
            return bad(format!("{} trailing bytes", bytes.len() as u64 - needed));
        }
        let (n_params, count) = (n_params as usize, count as usize);
        let vectors = bytes[HEADER_LEN..]
            .chunks_exact(8 * n_params.max(1))
            .take(count)
            .map(|chunk| {
                ParamVector::new(
                    chunk
                        .chunks_exact(8)
                        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                        .collect(),
                )
            })
            .collect();
        Ok(Self {
            spec_hash,
            n_params,
            vectors,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one command in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub config: serde_json::Value,
    /// Named seeds used by the command, e.g. `init/3`.
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub tool: String,
    pub parameter_layout: u32,
    /// Desk-scale budgets chosen here rather than taken from a published protocol.
    pub budgets: String,
    pub commands: BTreeMap<String, CommandRecord>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            format: 1,
            tool: format!("losstopo {}", env!("CARGO_PKG_VERSION")),
            parameter_layout: LAYOUT_VERSION,
            budgets: "desk-scale".into(),
            commands: BTreeMap::new(),
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock timings live outside the manifest so manifests stay reproducible.
pub const TIMINGS_FILE: &str = "timings.json";

/// Writes artifacts below a root directory and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes via a temporary file and rename, so a crash never leaves a partial artifact.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("partial");
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, &path)?;
        self.artifacts.retain(|a| a.path != rel);
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Adds this command's record to `manifest.json`, keeping other commands' records.
    pub fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        seeds: BTreeMap<String, u64>,
        seconds: f64,
    ) -> Result<Manifest> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let mut manifest = read_json_or_default::<Manifest>(&self.path(MANIFEST_FILE))?;
        manifest.commands.insert(
            command.to_string(),
            CommandRecord {
                config,
                seeds,
                artifacts: std::mem::take(&mut self.artifacts),
            },
        );
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.path(MANIFEST_FILE), text)?;

        let mut timings = read_json_or_default::<BTreeMap<String, f64>>(&self.root.join(TIMINGS_FILE))?;
        timings.insert(command.to_string(), seconds);
        std::fs::write(self.root.join(TIMINGS_FILE), serde_json::to_string_pretty(&timings)? + "\n")?;
        Ok(manifest)
    }
}

fn read_json_or_default<T: Default + for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(serde_json::from_slice(&bytes)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(T::default()),
        Err(e) => Err(e.into()),
    }
}

/// Checks every artifact listed in a manifest against the files on disk.
pub fn verify_manifest(root: &Path) -> Result<Vec<String>> {
    let manifest: Manifest = serde_json::from_slice(&std::fs::read(root.join(MANIFEST_FILE))?)?;
    let mut mismatched = Vec::new();
    for record in manifest.commands.values() {
        for a in &record.artifacts {
            match std::fs::read(root.join(&a.path)) {
                Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
                _ => mismatched.push(a.path.clone()),
            }
        }
    }
    Ok(mismatched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn;

    fn small_spec() -> NetworkSpec {
        NetworkSpec::uniform(vec![3, 2], nn::Activation::Identity, nn::Activation::Identity, true, nn::LossKind::MeanSquaredError)
            .unwrap()
    }

    #[test]
    fn solution_round_trip_is_bit_exact() {
        let spec = small_spec();
        let vs = vec![
            ParamVector::new(vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300, -3.5, 2.0, 7.0, 8.0]),
            ParamVector::new(vec![1.0; 8]),
        ];
        let set = SolutionSet::new(&spec, vs).unwrap();
        let bytes = set.to_bytes();
        assert_eq!(bytes.len(), 64 + 2 * 8 * 8);
        let back = SolutionSet::from_bytes(&bytes).unwrap();
        assert!(back.matches(&spec));
        for (a, b) in set.vectors.iter().zip(&back.vectors) {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert!(!back.matches(&NetworkSpec::fcp()));
    }

    #[test]
    fn rejects_corrupt_files() {
        let spec = small_spec();
        let bytes = SolutionSet::new(&spec, vec![ParamVector::zeros(8)]).unwrap().to_bytes();
        assert!(SolutionSet::from_bytes(&bytes[..40]).is_err());
        assert!(SolutionSet::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(SolutionSet::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(SolutionSet::from_bytes(&magic), Err(Error::SolutionFile(_))));
        let mut huge = bytes;
        huge[48..56].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(SolutionSet::from_bytes(&huge).is_err());
        assert!(SolutionSet::new(&spec, vec![ParamVector::zeros(3)]).is_err());
    }

    #[test]
    fn manifest_records_checksums_and_merges_commands() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a/b.txt", b"hello").unwrap();
        out.finish("one", serde_json::json!({"k": 1}), BTreeMap::new(), 0.5).unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("c.txt", b"x").unwrap();
        let m = out.finish("two", serde_json::Value::Null, BTreeMap::new(), 0.1).unwrap();
        assert_eq!(m.commands.len(), 2);
        assert_eq!(
            m.commands["one"].artifacts[0].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("c.txt"), b"y").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["c.txt".to_string()]);
    }
}
