//! Acceptance criteria, one PASS/FAIL line each. Criteria 1-9 run in
//! process; criterion 10 runs the `validate` command twice with different
//! thread counts and compares every output file byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use wiener_chaos::validation::{self, CriterionResult};

const SEED: u64 = 42;

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != "timing.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("output file")))
        .collect()
}

fn cli_determinism() -> CriterionResult {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut codes = Vec::new();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let out = tmp.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_wiener-chaos"))
            .args(["--threads", &threads.to_string(), "validate", "--seed", &SEED.to_string(), "--out"])
            .arg(&out)
            .output()
            .expect("run binary");
        codes.push(status.status.code());
        outputs.push(read_outputs(&out));
    }
    let files: Vec<&String> = outputs[0].keys().collect();
    let differing: Vec<&String> = files.iter().copied().filter(|f| outputs[0].get(*f) != outputs[1].get(*f)).collect();
    let passed = !files.is_empty() && outputs[0].len() == outputs[1].len() && differing.is_empty() && codes[0] == codes[1];
    let detail = format!(
        "validate --seed {SEED} with --threads 1 vs 3: {} files compared, {} differ, exit codes {:?}",
        files.len(),
        differing.len(),
        codes
    );
    CriterionResult { id: 10, name: "determinism".into(), passed, detail, metrics: BTreeMap::new() }
}

fn main() -> ExitCode {
    let mut results = validation::run(&[1, 2, 3, 4, 5, 6, 7, 8, 9], SEED);
    results.push(cli_determinism());
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
