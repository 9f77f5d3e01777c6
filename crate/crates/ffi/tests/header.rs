use std::path::Path;
use std::process::Command;

fn compiles(compiler: &str, args: &[&str]) -> Option<bool> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = format!("-I{}", dir.join("include").display());
    let source = dir.join("examples/squeezing.c");
    let status = Command::new(compiler).args(args).arg(&include).arg(&source).status().ok()?;
    Some(status.success())
}

#[test]
fn header_is_valid_c99_and_cxx() {
    let Some(c) = compiles("cc", &["-std=c99", "-Wall", "-Wextra", "-Werror", "-fsyntax-only"]) else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    assert!(c, "C compile failed");
    if let Some(cxx) = compiles("c++", &["-x", "c++", "-std=c++11", "-Wall", "-Werror", "-fsyntax-only"]) {
        assert!(cxx, "C++ compile failed");
    }
}
