// Shared by integration tests; not every test binary uses every helper.
#![allow(dead_code)]

use std::path::PathBuf;

pub fn workspace_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Compares `actual` against a frozen golden file. Run with
/// `UPDATE_GOLDEN=1` to (re)write it.
pub fn check_golden(name: &str, actual: &[u8]) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    assert!(
        expected == actual,
        "{} differs from golden:\n--- expected\n{}\n--- actual\n{}",
        name,
        String::from_utf8_lossy(&expected),
        String::from_utf8_lossy(actual)
    );
}
