//! The benchmark matrix corpus: registry, download and verification.

use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spgemm_core::io::{load_binary, load_matrix_market, save_binary};
use spgemm_core::{CsrMatrix, Engine};

use crate::error::CliError;

pub const CORPUS_DIR_VAR: &str = "SPGEMM_CORPUS_DIR";

/// Corpus location: `$SPGEMM_CORPUS_DIR`, else `./corpus`.
pub fn corpus_dir() -> PathBuf {
    std::env::var_os(CORPUS_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("corpus"))
}

/// A matrix with its published self-product figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    /// Matrix Market file, relative to the corpus directory or manifest.
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub rows: usize,
    pub nnz: usize,
    pub total_ip: u64,
    pub nnz_a2: u64,
    /// The published `nnz(A^2)` is reported but not enforced.
    #[serde(default)]
    pub a2_informational: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl CorpusEntry {
    /// Lower-case name with spaces replaced, used on the command line.
    pub fn key(&self) -> String {
        self.name.to_lowercase().replace(' ', "-")
    }

    fn matches(&self, query: &str) -> bool {
        let q = query.to_lowercase();
        let stem = self.file.trim_end_matches(".mtx").to_lowercase();
        q == self.key() || q == stem || q == self.name.to_lowercase()
    }
}

const SUITESPARSE: &str = "https://sparse.tamu.edu/MM";

#[allow(clippy::too_many_arguments)]
fn published(
    name: &str,
    group: &str,
    ss_name: &str,
    rows: usize,
    nnz: usize,
    total_ip: u64,
    nnz_a2: u64,
    a2_informational: bool,
) -> CorpusEntry {
    CorpusEntry {
        name: name.into(),
        file: format!("{ss_name}.mtx"),
        url: Some(format!("{SUITESPARSE}/{group}/{ss_name}.tar.gz")),
        rows,
        nnz,
        total_ip,
        nnz_a2,
        a2_informational,
        sha256: None,
    }
}

/// The twelve benchmark matrices.
pub fn registry() -> Vec<CorpusEntry> {
    vec![
        published(
            "RoadTX",
            "SNAP",
            "roadNet-TX",
            1_393_383,
            3_843_320,
            12_099_370,
            3_843_320,
            true,
        ),
        published(
            "p2p-Gnutella04",
            "SNAP",
            "p2p-Gnutella04",
            10_879,
            39_994,
            180_230,
            39_994,
            true,
        ),
        published(
            "amazon0601",
            "SNAP",
            "amazon0601",
            403_394,
            3_387_388,
            32_373_599,
            16_258_436,
            false,
        ),
        published(
            "web-Google",
            "SNAP",
            "web-Google",
            916_428,
            5_105_039,
            60_687_836,
            29_710_164,
            false,
        ),
        published(
            "scircuit", "Hamm", "scircuit", 170_998, 958_936, 8_676_313, 5_222_525, false,
        ),
        published(
            "cit-Patents",
            "SNAP",
            "cit-Patents",
            3_774_768,
            16_518_948,
            82_152_992,
            68_848_721,
            false,
        ),
        published(
            "Economics",
            "Williams",
            "mac_econ_fwd500",
            206_500,
            1_273_389,
            7_556_897,
            6_704_899,
            false,
        ),
        published(
            "webbase-1M",
            "Williams",
            "webbase-1M",
            1_000_005,
            3_105_536,
            69_524_195,
            51_111_996,
            false,
        ),
        published(
            "wb-edu",
            "Gleich",
            "wb-edu",
            9_845_725,
            57_156_537,
            1_559_579_990,
            630_077_764,
            false,
        ),
        published(
            "cage15",
            "vanHeukelum",
            "cage15",
            5_154_859,
            99_199_551,
            2_078_631_615,
            929_023_247,
            false,
        ),
        published(
            "Wind Tunnel",
            "Boeing",
            "pwtk",
            217_918,
            11_634_424,
            626_054_402,
            32_772_236,
            false,
        ),
        published(
            "Protein",
            "Williams",
            "pdb1HYS",
            36_417,
            4_344_765,
            555_322_659,
            19_594_581,
            false,
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<CorpusEntry>,
}

/// A set of entries and the directory their files live in.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dir: PathBuf,
    pub entries: Vec<CorpusEntry>,
    /// Keep a binary copy of each parsed matrix beside its source.
    pub binary_cache: bool,
}

impl Corpus {
    pub fn builtin() -> Self {
        Self {
            dir: corpus_dir(),
            entries: registry(),
            binary_cache: true,
        }
    }

    /// Entries from a JSON manifest; files resolve next to it.
    pub fn from_manifest(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(Self {
            dir: path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            entries: m.entries,
            binary_cache: false,
        })
    }

    /// Entries named by `queries`, or all when empty.
    pub fn select(&self, queries: &[String]) -> Result<Vec<&CorpusEntry>, CliError> {
        if queries.is_empty() {
            return Ok(self.entries.iter().collect());
        }
        queries
            .iter()
            .map(|q| {
                self.entries
                    .iter()
                    .find(|e| e.matches(q))
                    .ok_or_else(|| CliError::input(format!("unknown corpus matrix {q:?}")))
            })
            .collect()
    }

    pub fn path_of(&self, e: &CorpusEntry) -> PathBuf {
        self.dir.join(&e.file)
    }

    pub fn is_present(&self, e: &CorpusEntry) -> bool {
        self.path_of(e).is_file()
    }

    /// Loads a matrix, preferring (and refreshing) the binary cache beside it
    /// when caching is on.
    pub fn load(&self, e: &CorpusEntry) -> Result<CsrMatrix, CliError> {
        let mtx = self.path_of(e);
        if !self.binary_cache {
            return load_matrix_market(&mtx, true)
                .map_err(|err| CliError::input(format!("{}: {err}", mtx.display())));
        }
        let cache = mtx.with_extension("csr");
        let fresh = |c: &Path| -> Option<bool> {
            let cm = fs::metadata(c).ok()?.modified().ok()?;
            let mm = fs::metadata(&mtx).ok()?.modified().ok()?;
            Some(cm >= mm)
        };
        if fresh(&cache) == Some(true) {
            if let Ok(m) = load_binary(&cache) {
                return Ok(m);
            }
        }
        let m = load_matrix_market(&mtx, true)
            .map_err(|err| CliError::input(format!("{}: {err}", mtx.display())))?;
        // the cache is an optimisation only
        let _ = save_binary(&cache, &m);
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub field: String,
    pub expected: u64,
    pub actual: u64,
    pub informational: bool,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Verified,
    Mismatch,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub name: String,
    pub status: EntryStatus,
    pub checks: Vec<Check>,
}

impl EntryReport {
    fn missing(e: &CorpusEntry) -> Self {
        Self {
            name: e.name.clone(),
            status: EntryStatus::Missing,
            checks: Vec::new(),
        }
    }

    pub fn summary(&self) -> String {
        let mut parts = vec![format!("{}: {:?}", self.name, self.status).to_lowercase()];
        for c in &self.checks {
            let mark = match (c.ok(), c.informational) {
                (true, _) => "ok",
                (false, true) => "differs, informational",
                (false, false) => "MISMATCH",
            };
            parts.push(format!(
                "{}={} (expected {}, {mark})",
                c.field, c.actual, c.expected
            ));
        }
        parts.join(" ")
    }
}

/// Checks shape and nnz, then unless `shape_only` the self-product IP count
/// and `nnz(A^2)` from the symbolic phase.
pub fn verify_entry(
    corpus: &Corpus,
    e: &CorpusEntry,
    engine: &Engine,
    shape_only: bool,
) -> Result<EntryReport, CliError> {
    if !corpus.is_present(e) {
        return Ok(EntryReport::missing(e));
    }
    let m = corpus.load(e)?;
    let mut checks = vec![
        Check {
            field: "rows".into(),
            expected: e.rows as u64,
            actual: m.n_rows() as u64,
            informational: false,
        },
        Check {
            field: "cols".into(),
            expected: e.rows as u64,
            actual: m.n_cols() as u64,
            informational: false,
        },
        Check {
            field: "nnz".into(),
            expected: e.nnz as u64,
            actual: m.nnz() as u64,
            informational: false,
        },
    ];
    if m.is_square() && !shape_only {
        let plan = engine.plan(&m, &m)?;
        checks.push(Check {
            field: "total_ip".into(),
            expected: e.total_ip,
            actual: plan.total_ip as u64,
            informational: false,
        });
        let row_ptr = engine.allocation_phase(&m, &m, &plan)?;
        checks.push(Check {
            field: "nnz_a2".into(),
            expected: e.nnz_a2,
            actual: *row_ptr.last().unwrap_or(&0) as u64,
            informational: e.a2_informational,
        });
    }
    let failed = checks.iter().any(|c| !c.ok() && !c.informational);
    Ok(EntryReport {
        name: e.name.clone(),
        status: if failed {
            EntryStatus::Mismatch
        } else {
            EntryStatus::Verified
        },
        checks,
    })
}

/// Downloads the archive, checks its digest when one is pinned, and extracts
/// the Matrix Market file. Returns the archive's SHA-256.
pub fn fetch_entry(corpus: &Corpus, e: &CorpusEntry) -> Result<String, CliError> {
    let url = e
        .url
        .as_deref()
        .ok_or_else(|| CliError::input(format!("{} has no download URL", e.name)))?;
    fs::create_dir_all(&corpus.dir)?;
    let archive = corpus
        .dir
        .join(format!("{}.tar.gz", e.file.trim_end_matches(".mtx")));
    let resp = ureq::get(url)
        .call()
        .map_err(|err| CliError::download(format!("{url}: {err}")))?;
    let digest = {
        let mut reader = resp.into_reader();
        let mut out = File::create(&archive)?;
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            out.write_all(&buf[..n])?;
        }
        format!("{:x}", hasher.finalize())
    };
    if let Some(want) = &e.sha256 {
        if !want.eq_ignore_ascii_case(&digest) {
            return Err(CliError::download(format!(
                "{}: checksum mismatch, expected {want}, got {digest}",
                e.name
            )));
        }
    }
    fs::write(archive.with_extension("sha256"), format!("{digest}\n"))?;
    extract_member(&archive, &e.file, &corpus.path_of(e))?;
    Ok(digest)
}

fn extract_member(archive: &Path, file: &str, dest: &Path) -> Result<(), CliError> {
    let gz = flate2::read::GzDecoder::new(BufReader::new(File::open(archive)?));
    let mut tar = tar::Archive::new(gz);
    for entry in tar.entries()? {
        let mut entry = entry?;
        let hit = entry.path()?.file_name().is_some_and(|n| n == file);
        if hit {
            let mut out = File::create(dest)?;
            io::copy(&mut entry, &mut out)?;
            return Ok(());
        }
    }
    Err(CliError::download(format!(
        "{} not found in {}",
        file,
        archive.display()
    )))
}
