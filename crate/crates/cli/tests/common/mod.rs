#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plurality_core::io::{self, FileFormat};
use plurality_core::FeatureDataset;

pub fn plurality() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_plurality"));
    cmd.env_remove("PLURALITY_THREADS");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    plurality().args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes `data` as `<name>.lnf` and `<name>.lnl` in binary format.
pub fn write_dataset(dir: &Path, name: &str, data: &FeatureDataset) -> (PathBuf, PathBuf) {
    let features = dir.join(format!("{name}.lnf"));
    let labels = dir.join(format!("{name}.lnl"));
    io::write_features(&features, data).unwrap();
    io::write_bytes(&labels, &io::encode_labels(data.labels(), FileFormat::Binary)).unwrap();
    (features, labels)
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV output, comments and the column header removed.
pub fn rows(text: &str) -> Vec<Vec<f64>> {
    io::parse_curve_csv(text)
}
