//! Compiles and runs a small C program against the generated header and the
//! static library, when a C compiler is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "molqudit.h"

int main(void) {
    MqMolecule *mol = NULL;
    if (mq_molecule_load("rbcs", &mol) != MQ_STATUS_OK) return 1;
    MqEngine *eng = NULL;
    if (mq_engine_new(mol, 1, &eng) != MQ_STATUS_OK) return 2;
    MqSpectrum *sp = NULL;
    if (mq_spectrum_compute(eng, 181.5, 0.0, 0.0, &sp) != MQ_STATUS_OK) return 3;
    if (mq_spectrum_len(sp) != 128) return 4;
    MqSpectrum *bad = NULL;
    if (mq_spectrum_compute(eng, -5.0, 0.0, 0.0, &bad) != MQ_STATUS_INVALID_ARGUMENT) return 5;
    char *msg = mq_last_error();
    if (msg == NULL) return 6;
    printf("%s\n", msg);
    mq_string_free(msg);
    mq_spectrum_free(sp);
    mq_engine_free(eng);
    mq_molecule_free(mol);
    return 0;
}
"#;

fn static_lib() -> Option<PathBuf> {
    // target/<profile>/deps/<this test> -> target/<profile>/libmolqudit_ffi.a
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libmolqudit_ffi.a");
    lib.exists().then_some(lib)
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_and_runs() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("molqudit.h").exists(), "header not generated");
    let (Some(lib), true) = (static_lib(), have_cc()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("field point"));
}
