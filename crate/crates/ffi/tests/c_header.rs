//! Compiles and runs a small C program against the generated header and
//! the static library. Skipped when no C compiler or library is available.

use std::path::{Path, PathBuf};
use std::process::Command;

fn find_static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libuavtrack_ffi.a");
    lib.is_file().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(
        header_dir.join("uavtrack.h").is_file(),
        "header not generated"
    );
    let Some(lib) = find_static_lib() else {
        eprintln!("skipping: static library not found next to the test binary");
        return;
    };
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("uavtrack_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&out)
        .status();
    match status {
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
        }
        Ok(s) => {
            assert!(s.success(), "C compilation failed");
            let run = Command::new(&out).output().expect("run smoke binary");
            assert!(
                run.status.success(),
                "smoke program exited with {:?}: {}",
                run.status.code(),
                String::from_utf8_lossy(&run.stderr)
            );
            assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
        }
    }
}
