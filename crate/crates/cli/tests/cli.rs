use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sptree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sptree"))
        .current_dir(dir)
        .env_remove("SPTREE_THREADS")
        .env_remove("SPTREE_CACHE_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("sptree-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value column of the last CSV row.
fn last_value(o: &Output) -> String {
    stdout(o).lines().last().unwrap().rsplit(',').next().unwrap().to_string()
}

#[test]
fn documented_coefficients() {
    let d = scratch("coeffs");
    for (class, n, want) in [("B", "4", "60"), ("T", "5", "70"), ("G", "1", "5/24")] {
        let o = sptree(&d, &["coeffs", "--class", class, "--n", n]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(last_value(&o), want, "class {class}");
    }
}

#[test]
fn outputs_carry_the_config_hash_and_ignore_thread_count() {
    let d = scratch("hash");
    let one = sptree(&d, &["coeffs", "--class", "C", "--n", "6", "--threads", "1"]);
    let two = sptree(&d, &["coeffs", "--class", "C", "--n", "6", "--threads", "2"]);
    assert!(stdout(&one).lines().nth(1).unwrap().starts_with("# config_hash "));
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    let d = scratch("usage");
    assert_eq!(sptree(&d, &["coeffs", "--class", "Q", "--n", "3"]).status.code(), Some(2));
    assert_eq!(sptree(&d, &["coeffs", "--class", "Ck", "--n", "3"]).status.code(), Some(2));
    assert_eq!(
        sptree(&d, &["coeffs", "--class", "B", "--n", "3", "--y", "-1"]).status.code(),
        Some(2)
    );
    std::fs::write(d.join("bad.toml"), "prec = 8\n").unwrap();
    let o = sptree(&d, &["constants", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("prec"));
}

#[test]
fn ledger_json_is_keyed_by_name() {
    let d = scratch("ledger");
    let o = sptree(&d, &["constants", "--scope", "excess", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"]["gamma"]["status"], "match");
    assert_eq!(v["rows"]["c_tilde"]["status"], "flagged-discrepancy");
    assert!(v["meta"]["config_hash"].as_str().unwrap().len() == 16);
}

fn small_config(d: &Path) {
    std::fs::write(d.join("small.toml"), "oracle_cap = 6\nnetwork_cap = 4\ncache_dir = \"cache\"\n").unwrap();
}

/// Failure lines on stderr, without the known upper sandwich bound.
fn unexpected_failures(o: &Output) -> Vec<String> {
    stderr(o)
        .lines()
        .filter(|l| l.starts_with("FAIL") && !l.contains("upper bound"))
        .map(String::from)
        .collect()
}

#[test]
fn perturbed_grammar_fails_naming_the_parallel_rule() {
    let d = scratch("perturb");
    small_config(&d);
    let o = sptree(&d, &["verify-all", "--config", "small.toml", "--skip-ledger", "--perturb-fixture"]);
    assert_eq!(o.status.code(), Some(1));
    let fails = unexpected_failures(&o);
    assert!(!fails.is_empty());
    assert!(
        fails[0].contains("(class D, n 2, m 4)") && fails[0].contains("parallel rule P"),
        "{fails:?}"
    );
}

#[test]
fn corrupted_cache_entry_is_recomputed() {
    let d = scratch("cache");
    small_config(&d);
    let first = sptree(&d, &["verify-all", "--config", "small.toml", "--skip-ledger"]);
    assert!(unexpected_failures(&first).is_empty(), "{}", stderr(&first));
    let entry = d.join("cache/spanning_tree_P-4-12-generic.series");
    let good = std::fs::read_to_string(&entry).unwrap();
    assert!(good.contains("\n2 5 20/1\n"));
    std::fs::write(&entry, good.replace("\n2 5 20/1\n", "\n2 5 21/1\n")).unwrap();

    let second = sptree(&d, &["verify-all", "--config", "small.toml", "--skip-ledger"]);
    assert!(unexpected_failures(&second).is_empty(), "{}", stderr(&second));
    assert!(stdout(&second).contains("recomputed entry"));
    assert_eq!(std::fs::read_to_string(&entry).unwrap(), good);

    let listed = sptree(&d, &["cache", "list", "--config", "small.toml"]);
    assert!(stdout(&listed).contains("spanning_tree_P-4-12-generic"));
    assert!(sptree(&d, &["cache", "purge", "--config", "small.toml"]).status.success());
    let listed = sptree(&d, &["cache", "list", "--config", "small.toml"]);
    assert!(!stdout(&listed).contains(".series"));
}
