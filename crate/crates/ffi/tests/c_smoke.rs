use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "cvue.h"

int main(void) {
    struct CvueParams *params = NULL;
    if (cvue_params_new(11, 16, 2, 0.8, 5.0, &params) != CVUE_STATUS_OK) return 1;
    struct CvueKey *key = NULL;
    if (cvue_key_generate(params, 3, &key) != CVUE_STATUS_OK) return 2;
    uint8_t msg[11] = {1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1};
    struct CvueCipher *cipher = NULL;
    if (cvue_encrypt(key, msg, 11, &cipher) != CVUE_STATUS_OK) return 3;
    if (cvue_cipher_num_modes(cipher) != 16) return 4;
    uint8_t out[11];
    if (cvue_decrypt(key, cipher, NULL, 9, out, 11) != CVUE_STATUS_OK) return 5;
    if (memcmp(msg, out, 11) != 0) return 6;

    struct CvueParams *bad = NULL;
    if (cvue_params_new(4, 7, 1, 0.4, 1.0, &bad) != CVUE_STATUS_INVALID_PARAMS) return 7;
    if (strlen(cvue_last_error_message()) == 0) return 8;

    double beta = 0.0;
    if (cvue_ber_analytic(0.4, 3.4, &beta) != CVUE_STATUS_OK) return 9;
    printf("%.17g\n", beta);

    cvue_cipher_free(cipher);
    cvue_key_free(key);
    cvue_params_free(params);
    return 0;
}
"#;

fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = dir.join(if cfg!(windows) { "cvue_ffi.lib" } else { "libcvue_ffi.a" });
    assert!(lib.exists(), "static library not built at {}", lib.display());
    lib
}

#[test]
fn c_program_round_trips_through_the_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_smoke");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("smoke.c");
    let bin = work.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(static_lib())
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let beta: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(beta, cvue::bounds::ber_analytic(0.4, 3.4));
}
