use std::process::Command;

fn main() {
    println!("cargo:rerun-if-env-changed=HOMODYNE_GIT_DESCRIBE");
    if std::env::var_os("HOMODYNE_GIT_DESCRIBE").is_some() {
        return;
    }
    let out = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output();
    if let Ok(out) = out {
        if out.status.success() {
            let desc = String::from_utf8_lossy(&out.stdout).trim().to_string();
            if !desc.is_empty() {
                let version = env!("CARGO_PKG_VERSION");
                println!("cargo:rustc-env=HOMODYNE_GIT_DESCRIBE={version}+{desc}");
            }
        }
    }
    // Rebuild when HEAD moves; missing paths are harmless.
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    println!("cargo:rerun-if-changed=../../.git/index");
}
