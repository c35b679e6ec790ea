use coop_cli::corpus::Manifest;
use coop_core::VerdictKind;

#[test]
fn manifest_matches_the_oracle() {
    let m = Manifest::bundled().unwrap();
    assert!(m.entries.len() >= 25);
    for row in m.check(8).unwrap() {
        assert!(row.agrees(), "{row:?}");
        assert_ne!(row.oracle, VerdictKind::Unknown);
    }
}

#[test]
fn every_program_is_listed() {
    let m = Manifest::bundled().unwrap();
    let mut on_disk: Vec<String> = std::fs::read_dir(&m.dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".mc"))
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = m.entries.iter().map(|e| e.file.clone()).collect();
    listed.sort();
    assert_eq!(on_disk, listed);
}

#[test]
fn both_verdicts_are_represented() {
    let m = Manifest::bundled().unwrap();
    let t = m.entries.iter().filter(|e| e.expected == VerdictKind::True).count();
    let f = m.entries.iter().filter(|e| e.expected == VerdictKind::False).count();
    assert!(t >= 10 && f >= 5, "{t} true, {f} false");
}

#[test]
fn manifest_round_trips() {
    let m = Manifest::bundled().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let copy = Manifest {
        dir: dir.path().to_path_buf(),
        entries: m.entries.clone(),
    };
    copy.write().unwrap();
    assert_eq!(Manifest::load(dir.path()).unwrap().entries, m.entries);
}
