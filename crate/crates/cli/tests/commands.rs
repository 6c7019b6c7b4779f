use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use bibcap_core::workflow::load_volume_dir;
use bibcap_core::{validate_bibcode_string, Registry, Service};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn registry_path() -> PathBuf {
    fixtures().join("registry.tsv")
}

fn volume(name: &str) -> PathBuf {
    fixtures().join("volumes").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bibcap(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_bibcap"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn library_export(name: &str) -> String {
    let registry = Registry::load(&fs::read_to_string(registry_path()).unwrap()).unwrap();
    let service = Service::in_memory(registry);
    service
        .derive_volume(load_volume_dir(&volume(name)).unwrap(), "cli")
        .unwrap()
}

fn write_lines(dir: &Path, lines: &str) -> PathBuf {
    let file = dir.join("codes.txt");
    fs::write(&file, lines).unwrap();
    file
}

#[test]
fn validate_accepts_published_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_lines(dir.path(), "1910YalRY...1....1E\n1906PUSNO...4D...1.\n");
    let run = bibcap(&["validate", path(&file)]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.stdout, "");
    assert_eq!(run.stderr, "");
}

#[test]
fn validate_reports_short_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_lines(dir.path(), "1906PUSNO...4D...1\n");
    let run = bibcap(&["validate", path(&file)]);
    assert_eq!(run.code, 1);
    assert!(
        run.stderr.starts_with("line 1: WrongLength"),
        "{}",
        run.stderr
    );
    assert_eq!(run.stdout, "");
}

#[test]
fn validate_empty_file_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_lines(dir.path(), "");
    let run = bibcap(&["validate", path(&file)]);
    assert_eq!((run.code, run.stderr.as_str()), (0, ""));
}

#[test]
fn validate_matches_library_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let lines = [
        "1910YalRY...1....1E",
        "191OYalRY...1....1E",
        "",
        "1910Yal.Y...1....1e",
        "short",
    ];
    let file = write_lines(dir.path(), &(lines.join("\n") + "\n"));
    let run = bibcap(&["validate", path(&file)]);
    assert_eq!(run.code, 1);
    let mut expected = String::new();
    for (i, line) in lines.iter().enumerate() {
        let diagnostics = validate_bibcode_string(line);
        if !line.is_empty() && !diagnostics.is_empty() {
            let joined: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
            expected.push_str(&format!("line {}: {}\n", i + 1, joined.join("; ")));
        }
    }
    assert_eq!(run.stderr, expected);
    assert_eq!(run.stderr.lines().count(), 3);
    assert!(run.stderr.contains("line 2: InvalidYear at chars 0-3"));
}

#[test]
fn validate_missing_file_is_environmental() {
    let run = bibcap(&["validate", "/nonexistent/codes.txt"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.starts_with("error: "));
}

#[test]
fn derive_yale_prints_the_library_export() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "derive",
        path(&volume("yale")),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.stdout, library_export("yale"));
    assert!(run
        .stdout
        .contains("Bibliographic Code: 1910YalRY...1....1E\n"));
    assert!(run.stdout.contains("Publication Date: 00/1910\n"));
}

#[test]
fn derive_collision_has_a_q_code() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "derive",
        path(&volume("collision")),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.stdout, library_export("collision"));
    assert!(run.stdout.contains("1890BuAst...7Q...1S"));
}

#[test]
fn derive_tsv_prints_the_article_table() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "--format",
        "tsv",
        "derive",
        path(&volume("pusno")),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows: Vec<&str> = run.stdout.lines().collect();
    assert!(rows[0].starts_with("article_id\tbibcode\t"));
    assert!(rows[1].starts_with("pusno-4.a1\t1906PUSNO...4D...1.\t"));
}

#[test]
fn derive_unpaginated_fails_with_domain_error() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "derive",
        path(&volume("unpaginated")),
    ]);
    assert_eq!(run.code, 1);
    assert!(
        run.stderr.starts_with("error: PaginationIncomplete"),
        "{}",
        run.stderr
    );
    assert_eq!(run.stdout, "");
}

#[test]
fn derive_missing_directory_is_environmental() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "derive",
        "/nonexistent/volume",
    ]);
    assert_eq!(run.code, 2, "{}", run.stderr);
}

#[test]
fn missing_registry_is_environmental() {
    let run = bibcap(&[
        "--registry",
        "/nonexistent/registry.tsv",
        "registry",
        "list",
    ]);
    assert_eq!(run.code, 2);
}

#[test]
fn registry_resolve_split_series() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "registry",
        "resolve",
        "Bulletin Astronomique",
        "--series",
        "Serie I",
    ]);
    assert_eq!((run.code, run.stdout.as_str()), (0, "BuAsI\n"));
}

#[test]
fn registry_resolve_unknown_title() {
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "registry",
        "resolve",
        "Unknown Annals",
    ]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.starts_with("error: NotFound"), "{}", run.stderr);
}

#[test]
fn registry_list_prints_entry_lines() {
    let run = bibcap(&["--registry", path(&registry_path()), "registry", "list"]);
    assert_eq!(run.code, 0);
    let registry = Registry::load(&fs::read_to_string(registry_path()).unwrap()).unwrap();
    let expected: String = registry.entries().map(|e| e.to_line() + "\n").collect();
    assert_eq!(run.stdout, expected);
    assert_eq!(run.stdout.lines().count(), 7);
}

#[test]
fn registry_add_then_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("registry.tsv");
    fs::copy(registry_path(), &file).unwrap();
    let original = fs::read_to_string(&file).unwrap();

    let run = bibcap(&[
        "--registry",
        path(&file),
        "registry",
        "add",
        "AnWiN",
        "Annalen der Universitaets-Sternwarte Wien",
        "--series",
        "Neue Folge",
        "--years",
        "1930-",
        "--predecessor",
        "AnWiD",
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.stdout, "v1\tregister\tAnWiN\n");

    let rewritten = fs::read_to_string(&file).unwrap();
    for line in original
        .lines()
        .filter(|l| l.starts_with('#') || l.is_empty())
    {
        assert!(rewritten.contains(line), "comment lost: {line:?}");
    }
    assert!(rewritten.contains(
        "AnWiD\tAnnalen der Universitaets-Sternwarte Wien\tDritte Folge\t\t\t\t\tAnWie\tAnWiN\n"
    ));

    let run = bibcap(&[
        "--registry",
        path(&file),
        "registry",
        "resolve",
        "annalen der  universitaets-sternwarte wien",
        "--series",
        "Neue Folge",
    ]);
    assert_eq!((run.code, run.stdout.as_str()), (0, "AnWiN\n"));

    let run = bibcap(&[
        "--registry",
        path(&file),
        "registry",
        "add",
        "AnWiN",
        "Other",
    ]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("DuplicateStem"), "{}", run.stderr);
}

#[test]
fn ingest_then_derive_into_a_data_directory() {
    let data = tempfile::tempdir().unwrap();
    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "ingest",
        path(&volume("unpaginated")),
        "--data",
        path(data.path()),
    ]);
    assert_eq!(
        (run.code, run.stdout.as_str()),
        (0, "yale-draft\n"),
        "{}",
        run.stderr
    );
    assert!(data
        .path()
        .join("volumes/yale-draft/events.jsonl")
        .is_file());
    assert!(data.path().join("volumes/yale-draft/pages.tsv").is_file());

    let run = bibcap(&[
        "--registry",
        path(&registry_path()),
        "derive",
        path(&volume("yale")),
        "--data",
        path(data.path()),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let registry = Registry::load(&fs::read_to_string(registry_path()).unwrap()).unwrap();
    let reopened = Service::open(data.path(), registry).unwrap();
    assert_eq!(reopened.export_records("yale-1910").unwrap(), run.stdout);
    assert_eq!(reopened.list_volumes().len(), 2);
}

#[test]
fn usage_errors_are_reported() {
    let run = bibcap(&["frobnicate"]);
    assert_ne!(run.code, 0);
    assert!(!run.stderr.is_empty());
}
