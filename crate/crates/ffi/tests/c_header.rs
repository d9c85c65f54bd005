//! Compiles a small C program against the generated header and links it to
//! the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "zerobit.h"

int main(void) {
    ZbParams *p = NULL;
    if (zb_params_new(1.0, 0.0, 2.0, 0.6, &p) != ZB_STATUS_OK) return 10;
    ZbExponentReport r;
    if (zb_exponent(p, &r) != ZB_STATUS_OK) return 11;
    if (r.method != ZB_EXPONENT_METHOD_ATTACK_FREE) return 12;
    if (fabs(r.e_fn - 0.40524796148314357) > 1e-12) return 13;
    zb_params_free(p);

    if (zb_params_new(1.0, 0.0, -1.0, 0.6, &p) != ZB_STATUS_INVALID_PARAMETER) return 14;
    if (p != NULL || zb_last_error_message() == NULL) return 15;

    ZbWatermark *w = NULL;
    if (zb_watermark_generate(16, 3, &w) != ZB_STATUS_OK) return 16;
    double u[16], s[16];
    if (zb_watermark_copy(w, u, 16) != ZB_STATUS_OK) return 17;
    for (int i = 0; i < 16; ++i) s[i] = 2.0 * u[i];
    ZbDetection d;
    if (zb_detect(s, 16, w, 0.6, &d) != ZB_STATUS_OK) return 18;
    if (!d.present || d.rho_abs != 1.0) return 19;
    zb_watermark_free(w);
    printf("%s\n", zb_version());
    return 0;
}
"#;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// `target/<profile>`, two levels above the test executable.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

fn cc() -> String {
    std::env::var("CC").unwrap_or_else(|_| "cc".into())
}

#[test]
fn header_is_valid_c_and_cpp() {
    let header = crate_dir().join("include").join("zerobit.h");
    assert!(header.exists(), "header not generated");
    for (lang, std) in [("c", "-std=c99"), ("c++", "-std=c++11")] {
        let status = Command::new(cc())
            .args(["-fsyntax-only", "-Wall", "-Werror", std, "-x", lang])
            .arg(&header)
            .status()
            .expect("C compiler available");
        assert!(status.success(), "{lang} syntax check failed");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib_dir = artifact_dir();
    let so = lib_dir.join(format!("{}zerobit_ffi{}", std::env::consts::DLL_PREFIX, std::env::consts::DLL_SUFFIX));
    assert!(so.exists(), "shared library missing at {}", so.display());
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("main.c");
    let bin = work.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc())
        .arg("-std=c99")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .args(["-lzerobit_ffi", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success(), "compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
