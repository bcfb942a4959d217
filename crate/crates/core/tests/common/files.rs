//! On-disk fixtures and helpers for driving the `nudge` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nudge::io::{write_embeddings, write_labels, Dtype};

use super::synth::Instance;

pub struct InstanceFiles {
    pub embeddings: PathBuf,
    pub train_queries: PathBuf,
    pub train_labels: PathBuf,
    pub val_queries: PathBuf,
    pub val_labels: PathBuf,
}

pub fn write_instance(dir: &Path, inst: &Instance, dtype: Dtype) -> InstanceFiles {
    let f = InstanceFiles {
        embeddings: dir.join("data.emb"),
        train_queries: dir.join("train.emb"),
        train_labels: dir.join("train.labels"),
        val_queries: dir.join("val.emb"),
        val_labels: dir.join("val.labels"),
    };
    write_embeddings(&f.embeddings, &inst.data, dtype).unwrap();
    write_embeddings(&f.train_queries, &inst.train_q, dtype).unwrap();
    write_labels(&f.train_labels, &inst.train_l).unwrap();
    write_embeddings(&f.val_queries, &inst.val_q, dtype).unwrap();
    write_labels(&f.val_labels, &inst.val_l).unwrap();
    f
}

pub fn nudge_bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nudge"));
    cmd.env_remove("NUDGE_THREADS");
    cmd
}

/// `nudge [global...] finetune` over the instance files, writing `out` and `report`.
pub fn finetune_cmd(files: &InstanceFiles, method: &str, out: &Path, report: &Path) -> Command {
    let mut cmd = nudge_bin();
    cmd.arg("finetune")
        .arg("--embeddings")
        .arg(&files.embeddings)
        .arg("--train-queries")
        .arg(&files.train_queries)
        .arg("--train-labels")
        .arg(&files.train_labels)
        .arg("--val-queries")
        .arg(&files.val_queries)
        .arg("--val-labels")
        .arg(&files.val_labels)
        .arg("--method")
        .arg(method)
        .arg("--out")
        .arg(out)
        .arg("--report")
        .arg(report);
    cmd
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Parses a report and drops the `runtime` section.
pub fn report_without_runtime(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("runtime");
    v
}
