pub mod decompose;
pub mod enhance;
pub mod metrics;
pub mod noise_sim;
pub mod reconstruct;
pub mod roundtrip;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

/// Caps worker threads at `ICD_THREADS` when set.
pub fn init_thread_pool() {
    let threads = std::env::var("ICD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    if let Some(n) = threads {
        // a second call in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs `f` on every item in parallel; results keep input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

pub fn require_inputs(inputs: &[PathBuf]) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Usage("no input files given".into()));
    }
    Ok(())
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Per-file status line shared by the batch commands.
#[derive(Debug, Serialize)]
pub struct FileResult<T: Serialize> {
    pub input: String,
    pub status: &'static str,
    #[serde(flatten)]
    pub detail: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl<T: Serialize> FileResult<T> {
    pub fn from_result(input: &Path, r: anyhow::Result<T>) -> Self {
        match r {
            Ok(d) => FileResult {
                input: display(input),
                status: "ok",
                detail: Some(d),
                error: None,
            },
            Err(e) => FileResult {
                input: display(input),
                status: "error",
                detail: None,
                error: Some(format!("{e:#}")),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn all_ok<T: Serialize>(results: &[FileResult<T>]) -> bool {
    results.iter().all(FileResult::is_ok)
}

/// Creates `dir` and refuses to write over any input file.
pub fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}

pub fn guard_overwrite(target: &Path, inputs: &[PathBuf]) -> anyhow::Result<()> {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    if let Some(t) = canon(target) {
        if inputs.iter().any(|i| canon(i).as_ref() == Some(&t)) {
            anyhow::bail!("refusing to overwrite input {}", target.display());
        }
    }
    Ok(())
}
