use std::process::Command;

fn git(args: &[&str]) -> Option<String> {
    let out = Command::new("git").args(args).output().ok()?;
    if !out.status.success() {
        return None;
    }
    let s = String::from_utf8(out.stdout).ok()?.trim().to_string();
    (!s.is_empty()).then_some(s)
}

fn main() {
    let pkg = format!("v{}", env!("CARGO_PKG_VERSION"));
    let version = git(&["describe", "--tags", "--dirty"])
        .or_else(|| git(&["rev-parse", "--short", "HEAD"]).map(|h| format!("{pkg}-0-g{h}")))
        .unwrap_or(pkg);
    println!("cargo:rustc-env=HARRIS_VERSION={version}");
    if let Some(dir) = git(&["rev-parse", "--git-dir"]) {
        println!("cargo:rerun-if-changed={dir}/HEAD");
        println!("cargo:rerun-if-changed={dir}/refs");
    }
    println!("cargo:rerun-if-changed=build.rs");
}
