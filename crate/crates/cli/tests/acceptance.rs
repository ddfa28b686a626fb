//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bpcm::fixtures::{create_quote, java_task_mut, user_task_mut, CREATE_QUOTE_XML};
use bpcm::journal::{verify, Finding, Journal, ENTRIES_FILE, HEAD_DIGEST_FILE, HEAD_FILE};
use bpcm::model::{CallType, FieldInjection, ValueKind};
use bpcm::ontology::{
    class_of, export_journal, export_record, export_schema, import_records, parse_ntriples, to_ntriples, OntClass,
    Term, RDFS_SUBCLASS_OF, RDF_TYPE,
};
use bpcm::synth::{edit_chain, model_pair, random_model, rng};
use bpcm::taxonomy::{
    ChangeRecord, GenericChange, GenericOp, JavaServiceTaskModification, TaskKind, TaskOp, UserTaskModification,
};
use bpcm::{
    apply, diff, invert, model_equals, serialize_bpmn, ApplyError, ChangeCategory, ChangeSet, ConstructChange,
    DiffRequest, FixedClock, ProcessModel, Provenance, Timestamp, VersionTag,
};

const PAIRS: u64 = 1000;
const CLOCK: &str = "2024-05-01T10:00:00Z";

fn clock() -> FixedClock {
    FixedClock(CLOCK.parse().unwrap())
}

fn diff_at(a: &ProcessModel, b: &ProcessModel, base: VersionTag, at: &FixedClock, who: &Provenance) -> ChangeSet {
    diff(&DiffRequest::new(a, b, who.clone()).with_clock(at).with_base(base)).unwrap()
}

fn generated(a: &ProcessModel, b: &ProcessModel) -> ChangeSet {
    diff_at(a, b, VersionTag(0), &clock(), &Provenance::new("gen", "generated pair", ""))
}

fn round_trip() -> String {
    let start = Instant::now();
    let mut records = 0;
    for seed in 0..PAIRS {
        let (a, b) = model_pair(seed);
        assert!(a.nodes.len() <= 30);
        let set = generated(&a, &b);
        records += set.records.len();
        let got = apply(&set, &a).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(model_equals(&got, &b), "seed {seed}: apply(diff(A, B), A) differs from B");
    }
    let took = start.elapsed();
    assert!(took < Duration::from_secs(60), "took {took:?}");
    format!("{PAIRS}/{PAIRS} pairs, {records} records, {:.2}s", took.as_secs_f64())
}

fn revert() -> String {
    for seed in 0..PAIRS {
        let (m, b) = model_pair(seed);
        let s = generated(&m, &b);
        let mid = apply(&s, &m).unwrap();
        let back = apply(&invert(&s), &mid).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(model_equals(&back, &m), "seed {seed}: apply(invert(S), apply(S, M)) differs from M");
    }
    format!("{PAIRS}/{PAIRS} pairs")
}

fn recovery() -> String {
    let dir = tempfile::tempdir().unwrap();
    let start = random_model(&mut rng(50), 30);
    let mut j = Journal::init(dir.path(), &start, ["gen"]).unwrap();
    for (k, next) in edit_chain(50, &start, 50).iter().enumerate() {
        let at = FixedClock(Timestamp::from_unix(1_700_000_000 + 60 * k as i64));
        let set = diff_at(j.head(), next, j.head_version(), &at, &Provenance::new("gen", "step", ""));
        j.commit(set).unwrap();
    }
    assert_eq!(j.head_version(), VersionTag(50));
    let before = fs::read(dir.path().join(HEAD_FILE)).unwrap();
    assert_eq!(before, serialize_bpmn(j.head()).into_bytes());

    fs::remove_file(dir.path().join(HEAD_FILE)).unwrap();
    fs::remove_file(dir.path().join(HEAD_DIGEST_FILE)).unwrap();
    let reopened = Journal::open(dir.path()).unwrap();
    assert_eq!(serialize_bpmn(reopened.head()).into_bytes(), before);
    assert_eq!(serialize_bpmn(&reopened.version_uncached(VersionTag(50)).unwrap()).into_bytes(), before);
    format!("50 commits, head of {} bytes reproduced", before.len())
}

fn user_variant(m: &UserTaskModification) -> &'static str {
    match m {
        UserTaskModification::AssigneeChange { .. } => "AssigneeChange",
        UserTaskModification::DueDateChange { .. } => "DueDateChange",
        UserTaskModification::DescriptionChange { .. } => "DescriptionChange",
        UserTaskModification::CandidateUsersChange { .. } => "CandidateUsersChange",
        UserTaskModification::CandidateGroupsChange { .. } => "CandidateGroupsChange",
        UserTaskModification::FormKeyChange { .. } => "FormKeyChange",
    }
}

fn java_variant(m: &JavaServiceTaskModification) -> &'static str {
    match m {
        JavaServiceTaskModification::CallTypeChange { .. } => "CallTypeChange",
        JavaServiceTaskModification::FieldInjectionAdded(_) => "FieldInjectionAdded",
        JavaServiceTaskModification::FieldInjectionRemoved(_) => "FieldInjectionRemoved",
        JavaServiceTaskModification::FieldInjectionModified { .. } => "FieldInjectionModified",
        JavaServiceTaskModification::ResultVariableChange { .. } => "ResultVariableChange",
    }
}

/// Exports a single record and imports it back.
fn export_round_trip(r: &ChangeRecord) {
    let triples = export_record(r);
    let types: Vec<_> = triples.iter().filter(|t| t.predicate == RDF_TYPE).collect();
    assert_eq!(types.len(), 1);
    assert_eq!(types[0].object, Term::Iri(class_of(&r.change).iri()));
    let parsed = parse_ntriples(&to_ntriples(&triples)).unwrap();
    assert_eq!(import_records(&parsed).unwrap(), vec![r.clone()]);
}

fn coverage() -> String {
    let mut categories = BTreeSet::new();
    let mut kinds = BTreeSet::new();
    let mut user = BTreeSet::new();
    let mut java = BTreeSet::new();
    for seed in 0..PAIRS {
        let (a, b) = model_pair(seed);
        let set = generated(&a, &b);
        let mid = apply(&set, &a).unwrap();
        assert!(model_equals(&apply(&invert(&set), &mid).unwrap(), &a));
        for r in &set.records {
            categories.insert(r.change.category());
            export_round_trip(r);
            let ConstructChange::TaskLevelChange(t) = &r.change else {
                continue;
            };
            kinds.insert(t.task_kind);
            match &t.op {
                TaskOp::ModifyUserTask(m) => {
                    user.insert(user_variant(m));
                }
                TaskOp::ModifyJavaServiceTask(m) => {
                    java.insert(java_variant(m));
                }
                _ => {}
            }
        }
    }

    let placeholders: Vec<ChangeCategory> = ChangeCategory::ALL.into_iter().filter(|c| c.is_placeholder()).collect();
    for c in ChangeCategory::ALL {
        assert!(categories.contains(&c) || c.is_placeholder(), "{c} never produced by diff");
    }
    assert!(placeholders.len() <= 5);
    assert_eq!(kinds.len(), TaskKind::ALL.len(), "task kinds seen: {kinds:?}");
    assert_eq!(user.len(), 6, "user task modifications seen: {user:?}");
    assert_eq!(java.len(), 5, "java service task modifications seen: {java:?}");

    // Placeholder categories: constructible, invertible and exportable, refused by apply.
    let mut attrs = BTreeMap::new();
    attrs.insert("name".to_string(), "lock".to_string());
    for (i, c) in placeholders.iter().enumerate() {
        let change = ConstructChange::generic(
            *c,
            GenericChange { element_id: format!("x{i}"), op: GenericOp::Added(attrs.clone()) },
        )
        .unwrap();
        assert_eq!(change.category(), *c);
        assert_eq!(change.inverse().inverse(), change);
        let record = ChangeRecord {
            record_id: format!("01HWSSHG80000000000000000{i}"),
            timestamp: CLOCK.parse().unwrap(),
            provenance: Provenance::new("gen", "placeholder", ""),
            change,
        };
        assert!(bpcm::validate_record(&record).is_empty());
        export_round_trip(&record);
        let set = ChangeSet {
            set_id: "s".into(),
            base_version: VersionTag(0),
            result_version: VersionTag(1),
            records: vec![record],
        };
        assert!(matches!(apply(&set, &create_quote()), Err(ApplyError::Placeholder { .. })));
    }
    format!(
        "{} categories by diff plus {} placeholders, {} task kinds, {} user task and {} java service task modifications",
        categories.len(),
        placeholders.len(),
        kinds.len(),
        user.len(),
        java.len()
    )
}

struct Scenario {
    _dir: tempfile::TempDir,
    journal: Journal,
    records: Vec<ChangeRecord>,
}

const AGENTS: [&str; 3] = ["alice", "bob", "carol"];

/// The seven Create Quote commits, one minute apart.
fn scenario() -> Scenario {
    let dir = tempfile::tempdir().unwrap();
    let mut j = Journal::init(dir.path(), &create_quote(), AGENTS).unwrap();
    let mut records = Vec::new();
    let mut step = |j: &mut Journal, k: i64, who: Provenance, targets: &[ProcessModel]| {
        let at = FixedClock(Timestamp::from_unix(1_714_557_600 + 60 * k));
        let mut prev = j.head().clone();
        let mut set: Option<ChangeSet> = None;
        for next in targets {
            let part = diff_at(&prev, next, j.head_version(), &at, &who);
            match &mut set {
                Some(s) => s.records.extend(part.records),
                None => set = Some(part),
            }
            prev = next.clone();
        }
        let set = set.unwrap();
        records.extend(set.records.clone());
        j.commit(set).unwrap();
    };

    let mut m = create_quote();
    user_task_mut(&mut m, "ut1").assignee = Some("bob".into());
    step(
        &mut j,
        1,
        Provenance::new("alice", "assignee replacement", "alice hands quotation entry to bob"),
        &[m.clone()],
    );
    user_task_mut(&mut m, "ut1").description = Some("Enter prices and discounts for the quote".into());
    step(&mut j, 2, Provenance::new("alice", "description change", ""), &[m.clone()]);
    user_task_mut(&mut m, "ut1").due_date = Some("P5D".into());
    step(&mut j, 3, Provenance::new("bob", "due date extension", "customers need five days"), &[m.clone()]);
    {
        let st = java_task_mut(&mut m, "st1");
        st.call_type = CallType::DelegateExpression;
        st.target = "${registerDemand}".into();
    }
    step(&mut j, 4, Provenance::new("carol", "call type change", "class to delegate expression"), &[m.clone()]);
    java_task_mut(&mut m, "st1").target = "${demandRegistry}".into();
    step(&mut j, 5, Provenance::new("carol", "endpoint shift", ""), &[m.clone()]);
    let field = |name: &str, value: &str| FieldInjection {
        field_name: name.into(),
        value_kind: ValueKind::StringValue,
        value: value.into(),
    };
    let mut with_both = m.clone();
    java_task_mut(&mut with_both, "st1").field_injections =
        vec![field("url", "http://crm.example/demand"), field("timeout", "30")];
    java_task_mut(&mut m, "st1").field_injections = vec![field("url", "http://crm.example/demand")];
    step(&mut j, 6, Provenance::new("carol", "field injection add and delete", ""), &[with_both, m.clone()]);
    java_task_mut(&mut m, "st1").result_variable = Some("demandId".into());
    step(&mut j, 7, Provenance::new("bob", "result variable change", ""), &[m.clone()]);

    assert_eq!(j.head_version(), VersionTag(7));
    assert!(model_equals(j.head(), &m));
    Scenario { _dir: dir, journal: j, records }
}

fn create_quote_scenario() -> String {
    let mut s = scenario();
    let j = &mut s.journal;

    let ut1 = j.trace("ut1");
    assert_eq!(ut1.hits.len(), 3, "{:?}", ut1.hits);
    assert_eq!(ut1.versions(), [VersionTag(1), VersionTag(2), VersionTag(3)]);
    assert!(ut1.hits.iter().all(|h| h.task_kind == Some(TaskKind::UserTask)));
    let st1 = j.trace("st1");
    assert_eq!(st1.versions(), [VersionTag(4), VersionTag(5), VersionTag(6), VersionTag(7)]);
    assert!(st1.hits.iter().all(|h| h.task_kind == Some(TaskKind::JavaServiceTask)));

    let reverted = j
        .revert_to(
            VersionTag(0),
            &Provenance::new("alice", "revert to baseline", ""),
            &FixedClock(Timestamp::from_unix(1_714_558_200)),
        )
        .unwrap();
    assert_eq!(reverted, VersionTag(8));
    assert_eq!(serialize_bpmn(j.head()), CREATE_QUOTE_XML);
    assert_eq!(fs::read_to_string(j.dir().join(HEAD_FILE)).unwrap(), CREATE_QUOTE_XML);
    let findings = verify(j.dir()).unwrap();
    assert!(findings.is_empty(), "{findings:?}");
    format!(
        "ut1: {} hits in v1..v3; st1: {} records in {} commits v4..v7; revert to v0 byte-identical; 0 findings",
        ut1.hits.len(),
        st1.hits.len(),
        st1.versions().len()
    )
}

fn bpcm_at(clock: &str, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bpcm")).args(args).env("BPCM_CLOCK", clock).output().unwrap()
}

fn bpcm(args: &[&str]) -> std::process::Output {
    bpcm_at(CLOCK, args)
}

fn audit() -> String {
    let s = scenario();
    let dir = s.journal.dir();

    let clean = fs::read(dir.join(ENTRIES_FILE)).unwrap();
    let (head, next) = (dir.join("head.bpmn"), dir.join("next.bpmn"));
    let mut m = s.journal.head().clone();
    user_task_mut(&mut m, "ut1").assignee = Some("mallory".into());
    fs::write(&next, serialize_bpmn(&m)).unwrap();
    let set = dir.join("set.jsonl");
    let d = dir.to_str().unwrap();
    let run = |args: &[&str]| {
        let o = bpcm_at("2024-05-01T11:00:00Z", args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    fs::write(&head, bpcm(&["journal", "show", d]).stdout).unwrap();
    run(&[
        "diff",
        head.to_str().unwrap(),
        next.to_str().unwrap(),
        "--agent",
        "mallory",
        "--cause",
        "takeover",
        "--base",
        "v7",
        "--out",
        set.to_str().unwrap(),
    ]);
    run(&["journal", "commit", d, set.to_str().unwrap()]);
    let out = bpcm(&["journal", "verify", d]);
    assert_eq!(out.status.code(), Some(5));
    let printed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(printed.lines().count(), 1, "{printed}");
    assert!(printed.contains("UnauthorizedAgent v8") && printed.contains("mallory"), "{printed}");

    fs::write(dir.join(ENTRIES_FILE), clean).unwrap();
    fs::remove_file(dir.join(HEAD_DIGEST_FILE)).unwrap();
    fs::remove_file(dir.join(HEAD_FILE)).unwrap();
    Journal::open(dir).unwrap();
    assert!(verify(dir).unwrap().is_empty());

    let path = dir.join(ENTRIES_FILE);
    let pristine = fs::read(&path).unwrap();
    let mut checked = 0;
    for i in (0..pristine.len()).step_by(13) {
        let mut bytes = pristine.clone();
        bytes[i] ^= 0x20;
        fs::write(&path, &bytes).unwrap();
        let findings = verify(dir).unwrap();
        assert!(
            findings.iter().any(|f| matches!(f, Finding::ReplayMismatch { line: Some(_), .. })),
            "byte {i} edit went unnoticed: {findings:?}"
        );
        checked += 1;
    }
    fs::write(&path, &pristine).unwrap();
    format!("outside agent caught, exit 5; {checked} single-byte edits all raise ReplayMismatch")
}

fn ontology() -> String {
    let s = scenario();
    let text = export_journal(&s.journal).unwrap();
    let mut triples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let parsed = parse_ntriples(&format!("{line}\n")).unwrap_or_else(|e| panic!("line {}: {e}", n + 1));
        assert_eq!(parsed.len(), 1, "line {}", n + 1);
        triples.extend(parsed);
    }

    let schema = export_schema();
    assert_eq!(triples[..schema.len()], schema[..]);
    let mut parent = BTreeMap::new();
    let mut classes = BTreeSet::new();
    for t in &schema {
        if let Term::Iri(o) = &t.object {
            if t.predicate == RDFS_SUBCLASS_OF {
                parent.insert(t.subject.clone(), o.clone());
            } else {
                classes.insert(t.subject.clone());
            }
        }
    }
    let roots: BTreeSet<String> = ["BPMN_Construct_Change", "Provenance_Specs", "Timestamp"]
        .iter()
        .map(|n| OntClass::from_local_name(n).unwrap().iri())
        .collect();
    let individuals = &triples[schema.len()..];
    let mut typed = 0;
    for t in individuals.iter().filter(|t| t.predicate == RDF_TYPE) {
        let Term::Iri(class) = &t.object else { panic!("literal type") };
        assert!(classes.contains(class), "{class} not declared");
        let mut c = class.clone();
        while let Some(p) = parent.get(&c) {
            c = p.clone();
        }
        assert!(roots.contains(&c), "{class} climbs to {c}");
        typed += 1;
    }

    let imported = import_records(individuals).unwrap();
    let all: Vec<ChangeRecord> = s.journal.entries().iter().flat_map(|e| e.set.records.clone()).collect();
    assert_eq!(imported, all);
    assert_eq!(imported[..s.records.len()], s.records[..]);
    format!(
        "{} lines parse, {typed} individuals typed in the hierarchy, {} scenario records reimported",
        text.lines().count(),
        s.records.len()
    )
}

fn determinism() -> String {
    let dir = tempfile::tempdir().unwrap();
    let v1 = dir.path().join("v1.bpmn");
    let v2 = dir.path().join("v2.bpmn");
    fs::write(&v1, CREATE_QUOTE_XML).unwrap();
    let (_, b) = model_pair(8);
    fs::write(&v2, serialize_bpmn(&b)).unwrap();
    let p = |path: &Path| path.to_str().unwrap().to_string();

    let mut runs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        fs::create_dir(&out).unwrap();
        let (set, model, nt, j) = (out.join("set.jsonl"), out.join("model.bpmn"), out.join("j.nt"), out.join("j"));
        let ok = |args: &[String]| {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let o = bpcm(&args);
            assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        };
        ok(&[
            "diff".into(),
            p(&v1),
            p(&v2),
            "--agent".into(),
            "alice".into(),
            "--cause".into(),
            "replace".into(),
            "--out".into(),
            p(&set),
        ]);
        ok(&["apply".into(), p(&set), p(&v1), "--out".into(), p(&model)]);
        ok(&["journal".into(), "init".into(), p(&j), "--baseline".into(), p(&v1), "--acl".into(), "alice".into()]);
        ok(&["journal".into(), "commit".into(), p(&j), p(&set)]);
        ok(&[
            "journal".into(),
            "revert".into(),
            p(&j),
            "--to".into(),
            "v0".into(),
            "--agent".into(),
            "alice".into(),
            "--cause".into(),
            "undo".into(),
        ]);
        ok(&["journal".into(), "export".into(), p(&j), "--out".into(), p(&nt)]);
        runs.push([set, model, nt, j.join(ENTRIES_FILE), j.join(HEAD_FILE)].map(|f| fs::read(f).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0][1], fs::read(&v2).unwrap());
    format!("diff, apply, journal and export outputs identical across two runs ({} files)", runs[0].len())
}

fn main() -> ExitCode {
    type Check = fn() -> String;
    let criteria: [(&str, Check); 8] = [
        ("round trip: apply(diff(A, B), A) = B", round_trip),
        ("revert: apply(invert(S), apply(S, M)) = M", revert),
        ("recovery: replay after cache loss", recovery),
        ("taxonomy coverage", coverage),
        ("Create Quote scenario", create_quote_scenario),
        ("audit: ACL and tamper detection", audit),
        ("ontology export", ontology),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.into_iter().enumerate() {
        match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", n + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {}: FAIL {name}: {msg}", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
