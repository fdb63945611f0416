use std::path::Path;
use std::process::{Command, Output};

fn mechnet(args: &[&str], env: Option<(&str, &str)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mechnet"));
    cmd.args(args).env_remove("MECHNET_SEED");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_prints_text_blocks() {
    let o = mechnet(&["run", &scenario("vickrey.scn")], None);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("ROUND 1\n"));
    assert!(out.contains("DECISION winner p2\n"));
    assert!(out.contains("SCHEME p2 -> TC : 3\n"));
    assert!(out.contains("TOTAL 3\n"));
    assert!(out.contains("EXCLUDED -\n"));
}

#[test]
fn walker_has_no_collector_line() {
    let out = stdout(&mechnet(&["run", &scenario("walker.scn")], None));
    assert!(out.contains("SCHEME"));
    assert!(!out.contains("-> TC"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("mechnet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.scn");
    std::fs::write(&bad, "mechanism vickrey\nregistry R1\n").unwrap();
    let bad = bad.to_string_lossy().into_owned();
    assert_eq!(mechnet(&["run", &bad], None).status.code(), Some(1));
    assert_eq!(mechnet(&["validate", &bad], None).status.code(), Some(1));
    assert_eq!(mechnet(&["validate", &scenario("interval-auction.scn")], None).status.code(), Some(0));
    let abort = mechnet(&["run", &scenario("public-project-pivotal-crash.scn")], None);
    assert_eq!(abort.status.code(), Some(3));
    assert!(stdout(&abort).contains("ABORTED"));

    let stall = dir.join("stall.scn");
    std::fs::write(&stall, "mechanism vickrey\nmax-steps 50\nregistry R1\nplayer a registry=R1 type=1\n").unwrap();
    assert_eq!(mechnet(&["run", &stall.to_string_lossy()], None).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seed_flag_and_environment_change_only_the_trace() {
    let dir = std::env::temp_dir().join(format!("mechnet-seed-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let t1 = dir.join("a.trace");
    let t2 = dir.join("b.trace");
    let file = scenario("interval-auction.scn");
    let a = mechnet(&["run", &file, "--format", "mr", "--trace", &t1.to_string_lossy()], Some(("MECHNET_SEED", "3")));
    let b = mechnet(&["run", &file, "--format", "mr", "--seed", "4", "--trace", &t2.to_string_lossy()], None);
    assert_eq!(stdout(&a), stdout(&b));
    let (t1, t2) = (std::fs::read_to_string(t1).unwrap(), std::fs::read_to_string(t2).unwrap());
    assert_ne!(t1, t2);
    assert!(t1.contains("\tbarrier\t"));
    assert!(t1.lines().any(|l| l.contains("\tp6\t")), "trace uses process names");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_matches_mechanism_math() {
    let out = stdout(&mechnet(&["oracle", "vickrey", "1 5 2 3 2"], None));
    assert!(out.contains("SCHEME p2 -> TC : 3"), "{out}");

    let out = stdout(&mechnet(
        &[
            "oracle", "buy-path", "sa:2 at:1 st:4", "--edge", "sa:s:a", "--edge", "at:a:t", "--edge", "st:s:t", "--source",
            "s", "--sink", "t",
        ],
        None,
    ));
    assert!(out.contains("TAXES p1=3 p2=2 p3=0"), "{out}");

    let out = stdout(&mechnet(&["oracle", "single-minded", "20[1,2] 50[3] 32[2] 60[2,3] 19[1]", "--items", "3"], None));
    assert!(out.contains("DECISION winners p2 p3 p5"), "{out}");
    assert!(out.contains("SCHEME p2 -> TC : 28\nSCHEME p3 -> TC : 10\n"), "{out}");

    let o = mechnet(&["oracle", "vickrey-redist", "1 2"], None);
    assert_eq!(o.status.code(), Some(1));
}
