use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bpcm::fixtures::{create_quote, user_task_mut, CREATE_QUOTE_XML};
use bpcm::journal::{decode_line, encode_set, Journal};
use bpcm::ontology::export_journal;
use bpcm::{apply, diff, invert, parse_bpmn, serialize_bpmn, DiffRequest, FixedClock, Provenance, Timestamp};

const CLOCK: &str = "2024-05-01T10:00:00Z";

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn bpcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpcm")).args(args).env("BPCM_CLOCK", CLOCK).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bpcm(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
    stdout(&out)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn clock() -> FixedClock {
    FixedClock(CLOCK.parse().unwrap())
}

#[test]
fn golden_inputs_are_the_fixture() {
    assert_eq!(fs::read_to_string(golden("fixture_v1.bpmn")).unwrap(), CREATE_QUOTE_XML);
    let mut v2 = create_quote();
    user_task_mut(&mut v2, "ut1").assignee = Some("bob".into());
    assert_eq!(fs::read_to_string(golden("fixture_v2.bpmn")).unwrap(), serialize_bpmn(&v2));
}

#[test]
fn diff_matches_golden_and_library() {
    let (v1, v2) = (golden("fixture_v1.bpmn"), golden("fixture_v2.bpmn"));
    let out = ok(&["diff", p(&v1), p(&v2), "--agent", "alice", "--cause", "reassign"]);
    assert_eq!(out, fs::read_to_string(golden("reassign.set.jsonl")).unwrap());

    let a = parse_bpmn(&fs::read_to_string(&v1).unwrap()).unwrap();
    let b = parse_bpmn(&fs::read_to_string(&v2).unwrap()).unwrap();
    let at = clock();
    let set = diff(&DiffRequest::new(&a, &b, Provenance::new("alice", "reassign", "")).with_clock(&at)).unwrap();
    assert_eq!(set.records.len(), 1);
    assert_eq!(out, format!("{}\n", encode_set(&set)));
}

#[test]
fn diff_of_a_file_with_itself_is_an_empty_set() {
    let v1 = golden("fixture_v1.bpmn");
    let out = ok(&["diff", p(&v1), p(&v1), "--agent", "alice", "--cause", "none"]);
    assert!(decode_line(out.trim_end()).unwrap().set.records.is_empty());
}

#[test]
fn apply_and_invert_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let set_path = golden("reassign.set.jsonl");
    let patched = ok(&["apply", p(&set_path), p(&golden("fixture_v1.bpmn"))]);
    assert_eq!(patched, fs::read_to_string(golden("fixture_v2.bpmn")).unwrap());

    let set = decode_line(fs::read_to_string(&set_path).unwrap().trim_end()).unwrap().set;
    assert_eq!(patched, serialize_bpmn(&apply(&set, &create_quote()).unwrap()));

    let inv = dir.path().join("inv.jsonl");
    assert_eq!(ok(&["invert", p(&set_path), "--out", p(&inv)]), "");
    assert_eq!(fs::read_to_string(&inv).unwrap(), format!("{}\n", encode_set(&invert(&set))));
    let back = ok(&["apply", p(&inv), p(&golden("fixture_v2.bpmn"))]);
    assert_eq!(back, CREATE_QUOTE_XML);
}

#[test]
fn journal_commands_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("j");
    assert_eq!(
        ok(&["journal", "init", p(&j), "--baseline", p(&golden("fixture_v1.bpmn")), "--acl", "alice,bob"]),
        "v0\n"
    );
    assert_eq!(ok(&["journal", "commit", p(&j), p(&golden("reassign.set.jsonl"))]), "v1\n");

    let set = decode_line(fs::read_to_string(golden("reassign.set.jsonl")).unwrap().trim_end()).unwrap().set;
    assert_eq!(
        ok(&["journal", "log", p(&j)]),
        format!(
            "version\ttimestamp\tagent\tcause\tdescription\trecords\tset_id\nv1\t{CLOCK}\talice\treassign\t\t1\t{}\n",
            set.set_id
        )
    );
    let trace = ok(&["journal", "trace", p(&j), "ut1"]);
    assert_eq!(trace.lines().count(), 2);
    assert!(trace
        .lines()
        .nth(1)
        .unwrap()
        .starts_with(&format!("v1\t{}\tTaskLevelChange/UserTask\tsubject", set.records[0].record_id)));
    assert_eq!(ok(&["journal", "trace", p(&j), "nowhere"]).lines().count(), 1);

    assert_eq!(ok(&["journal", "show", p(&j), "--version", "v0"]), CREATE_QUOTE_XML);
    let head = ok(&["journal", "show", p(&j)]);
    assert_eq!(head, fs::read_to_string(golden("fixture_v2.bpmn")).unwrap());

    let export = ok(&["journal", "export", p(&j)]);
    assert_eq!(export, export_journal(&Journal::open(&j).unwrap()).unwrap());
    let out = dir.path().join("j.nt");
    ok(&["journal", "export", p(&j), "--out", p(&out)]);
    assert_eq!(fs::read_to_string(&out).unwrap(), export);

    assert_eq!(ok(&["journal", "verify", p(&j)]), "");
    assert_eq!(ok(&["journal", "revert", p(&j), "--to", "v0", "--agent", "bob", "--cause", "undo"]), "v2\n");
    assert_eq!(ok(&["journal", "show", p(&j)]), CREATE_QUOTE_XML);
    let reverted = Journal::open(&j).unwrap();
    assert_eq!(reverted.entries()[1].set.records[0].timestamp, CLOCK.parse::<Timestamp>().unwrap());
}

#[test]
fn log_escapes_control_characters() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("j");
    ok(&["journal", "init", p(&j), "--baseline", p(&golden("fixture_v1.bpmn"))]);
    let set = dir.path().join("s.jsonl");
    ok(&[
        "diff",
        p(&golden("fixture_v1.bpmn")),
        p(&golden("fixture_v2.bpmn")),
        "--agent",
        "a\tb",
        "--cause",
        "line\none",
        "--desc",
        "back\\slash",
        "--out",
        p(&set),
    ]);
    ok(&["journal", "commit", p(&j), p(&set)]);
    let log = ok(&["journal", "log", p(&j)]);
    let row = log.lines().nth(1).unwrap();
    assert_eq!(row.split('\t').collect::<Vec<_>>()[2..5], ["a\\tb", "line\\none", "back\\\\slash"]);
}

fn code(args: &[&str]) -> (Option<i32>, String) {
    let out = bpcm(args);
    (out.status.code(), stderr(&out))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (v1, v2, set) = (golden("fixture_v1.bpmn"), golden("fixture_v2.bpmn"), golden("reassign.set.jsonl"));
    let missing = dir.path().join("missing.bpmn");
    let junk = dir.path().join("junk.bpmn");
    fs::write(&junk, "<definitions").unwrap();

    assert_eq!(code(&["--help"]).0, Some(0));
    assert_eq!(code(&["--version"]).0, Some(0));
    assert_eq!(code(&[]).0, Some(1));
    let (c, err) = code(&["diff", p(&v1), p(&v2), "--cause", "x"]);
    assert_eq!(c, Some(1));
    assert!(err.contains("--agent"));
    assert_eq!(code(&["diff", p(&v1), p(&v2), "--agent", "", "--cause", "x"]).0, Some(1));
    assert_eq!(code(&["diff", p(&v1), p(&v2), "--agent", "a", "--cause", "x", "--base", "7"]).0, Some(1));
    assert_eq!(code(&["diff", p(&missing), p(&v2), "--agent", "a", "--cause", "x"]).0, Some(2));
    assert_eq!(code(&["diff", p(&junk), p(&v2), "--agent", "a", "--cause", "x"]).0, Some(3));
    assert_eq!(code(&["apply", p(&v1), p(&v1)]).0, Some(3));

    let (c, err) = code(&["apply", p(&set), p(&v2)]);
    assert_eq!(c, Some(4));
    assert!(err.contains("ut1") && err.contains("\"alice\"") && err.contains("\"bob\""), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_bpcm"))
        .args(["diff", p(&v1), p(&v2), "--agent", "a", "--cause", "x"])
        .env("BPCM_CLOCK", "yesterday")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let j = dir.path().join("j");
    assert_eq!(code(&["journal", "log", p(&j)]).0, Some(2));
    ok(&["journal", "init", p(&j), "--baseline", p(&v1), "--acl", "alice"]);
    assert_eq!(code(&["journal", "init", p(&j), "--baseline", p(&v1)]).0, Some(2));
    assert_eq!(code(&["journal", "show", p(&j), "--version", "v9"]).0, Some(1));
    assert_eq!(code(&["journal", "revert", p(&j), "--to", "v0", "--agent", "a", "--cause", "c"]).0, Some(1));
    ok(&["journal", "commit", p(&j), p(&set)]);
    assert_eq!(code(&["journal", "commit", p(&j), p(&set)]).0, Some(4));

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, ok(&["diff", p(&v2), p(&v2), "--agent", "a", "--cause", "x", "--base", "v1"])).unwrap();
    assert_eq!(code(&["journal", "commit", p(&j), p(&empty)]).0, Some(3));
}

#[test]
fn unauthorized_agent_fails_verify_but_still_exports() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("j");
    ok(&["journal", "init", p(&j), "--baseline", p(&golden("fixture_v1.bpmn")), "--acl", "bob"]);
    ok(&["journal", "commit", p(&j), p(&golden("reassign.set.jsonl"))]);
    let out = bpcm(&["journal", "verify", p(&j)]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stdout(&out).contains("alice"), "{}", stdout(&out));
    assert_eq!(code(&["journal", "export", p(&j)]).0, Some(0));

    let entries = j.join("entries.jsonl");
    let text = fs::read_to_string(&entries).unwrap().replace("reassign", "reassigN");
    fs::write(&entries, text).unwrap();
    assert_eq!(code(&["journal", "verify", p(&j)]).0, Some(5));
    assert_eq!(code(&["journal", "export", p(&j)]).0, Some(5));
}

#[test]
fn reference_chapter_lists_every_command() {
    let chapter = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../book/src/cli.md")).unwrap();
    let commands = |help: &str| -> Vec<String> {
        help.split("Commands:")
            .nth(1)
            .unwrap()
            .split("\n\n")
            .next()
            .unwrap()
            .lines()
            .filter_map(|l| l.split_whitespace().next())
            .filter(|c| *c != "help")
            .map(str::to_string)
            .collect()
    };
    let top = commands(&ok(&["--help"]));
    assert_eq!(top, ["diff", "apply", "invert", "journal"]);
    for c in &top[..3] {
        assert!(chapter.contains(&format!("bpcm {c} ")), "{c}");
    }
    let journal = commands(&ok(&["journal", "--help"]));
    assert_eq!(journal.len(), 8);
    for c in journal {
        assert!(chapter.contains(&format!("bpcm journal {c} ")), "journal {c}");
    }
    for code in 0..=5 {
        assert!(chapter.contains(&format!("| {code} |")), "exit code {code}");
    }
}
