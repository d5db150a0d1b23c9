mod common;

use std::path::Path;
use std::process::{Command, Output};

fn mixfloor(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mixfloor"));
    cmd.args(args).env_remove("MIXFLOOR_THREADS");
    if let Some(t) = threads {
        cmd.env("MIXFLOOR_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn aux() -> String {
    common::tiny10_aux().display().to_string()
}

#[test]
fn csv_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["fixed-outline", "--aux", &aux(), "--runs", "2", "--seed", "7", "--no-time", "--max-generations", "40"];
    let a = mixfloor(&args, Some("1"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = mixfloor(&args, Some("1"));
    let c = mixfloor(&args, Some("4"));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "instance,mode,R,gamma,seed,legal,hpwl,area,cost,seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("tiny10,fixed-outline,1,0.15,7,"));
    assert!(lines[2].starts_with("tiny10,fixed-outline,1,0.15,8,"));
    assert!(lines[3].starts_with("tiny10,fixed-outline,1,0.15,summary,"));
    // empty cost and seconds cells
    assert!(lines[1].ends_with(",,"));
}

#[test]
fn same_seed_gives_identical_rows() {
    let one = mixfloor(&["fixed-outline", "--aux", &aux(), "--seed", "3", "--no-time", "--max-generations", "30"], None);
    let two = mixfloor(&["fixed-outline", "--aux", &aux(), "--seed", "3", "--no-time", "--max-generations", "30"], None);
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn missing_blocks_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = dir.path().join("absent.blocks");
    let nets = common::fixtures().join("tiny10/tiny10.nets");
    let pl = common::fixtures().join("tiny10/tiny10.pl");
    let o = mixfloor(
        &[
            "fixed-outline",
            "--blocks",
            blocks.to_str().unwrap(),
            "--nets",
            nets.to_str().unwrap(),
            "--pl",
            pl.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.blocks"), "{}", stderr(&o));
}

#[test]
fn malformed_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = common::fixtures().join("malformed/count_mismatch.blocks");
    let nets = common::fixtures().join("tiny10/tiny10.nets");
    let pl = common::fixtures().join("tiny10/tiny10.pl");
    let _ = dir;
    let o = mixfloor(
        &["fixed-outline", "--blocks", bad.to_str().unwrap(), "--nets", nets.to_str().unwrap(), "--pl", pl.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line"));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        vec!["fixed-outline", "--bogus"],
        vec!["fixed-outline", "--csa.nope", "1"],
        vec!["fixed-outline", "--dea.alpha0", "2"],
        vec!["fixed-outline", "--runs", "0", "--aux", "x.aux"],
        vec!["fixed-outline"],
        vec![],
    ] {
        let o = mixfloor(&args, None);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(mixfloor(&["fixed-outline"], Some("zero")).status.code(), Some(1));
    assert_eq!(mixfloor(&["--help"], None).status.code(), Some(0));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!(
            "aux = [{:?}]\nruns = 3\ngamma = 0.25\nno_time = true\nseed = 11\n\n[ffa]\nmax_generations = 20\n\n[csa]\nq = 0.99\n",
            aux()
        ),
    );
    // file only
    let o = mixfloor(&["fixed-outline", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("tiny10,fixed-outline,1,0.25,11,"));

    // flags beat the file, untouched keys keep the file value
    let o = mixfloor(&["fixed-outline", "--config", &cfg, "--runs", "1", "--ratio", "2", "--csa.q", "0.98"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("tiny10,fixed-outline,2,0.25,11,"));

    // same run spelled entirely as flags
    let flags = mixfloor(
        &[
            "fixed-outline",
            "--aux",
            &aux(),
            "--runs",
            "1",
            "--ratio",
            "2",
            "--gamma",
            "0.25",
            "--seed",
            "11",
            "--no-time",
            "--max-generations",
            "20",
            "--csa.q",
            "0.98",
        ],
        None,
    );
    assert_eq!(flags.stdout, o.stdout);

    let bad = write(dir.path(), "bad.toml", "gamma = \"wide\"\n");
    assert_eq!(mixfloor(&["fixed-outline", "--config", &bad], None).status.code(), Some(1));
    let unknown = write(dir.path(), "unknown.toml", "[csa]\nsteps = 3\n");
    assert_eq!(mixfloor(&["fixed-outline", "--config", &unknown], None).status.code(), Some(1));
}

#[test]
fn artifacts_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plan.svg");
    let pl = dir.path().join("plan.pl");
    let csv = dir.path().join("m.csv");
    let o = mixfloor(
        &[
            "fixed-outline",
            "--aux",
            &aux(),
            "--max-generations",
            "30",
            "--svg",
            svg.to_str().unwrap(),
            "--pl-out",
            pl.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("instance,"));
    let drawn = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(drawn.matches("class=\"module\"").count(), 10);
    assert_eq!(drawn.matches("class=\"outline\"").count(), 1);

    let rendered = mixfloor(&["render", "--aux", &aux(), "--placement", pl.to_str().unwrap()], None);
    assert_eq!(rendered.status.code(), Some(0), "{}", stderr(&rendered));
    let text = stdout(&rendered);
    assert_eq!(text.matches("class=\"module\"").count(), 10);
    assert_eq!(text.matches("class=\"outline\"").count(), 0);
}

#[test]
fn several_runs_get_tagged_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plan.svg");
    let o = mixfloor(
        &["fixed-outline", "--aux", &aux(), "--runs", "2", "--max-generations", "10", "--svg", svg.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("plan.tiny10.R1.0.svg").is_file());
    assert!(dir.path().join("plan.tiny10.R1.1.svg").is_file());
}

#[test]
fn min_area_single_module_costs_one() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "one.blocks",
        "UCSC blocks 1.0\nNumSoftRectangularBlocks : 0\nNumHardRectilinearBlocks : 1\nNumTerminals : 0\nm0 hardrectilinear 4 (0,0) (0,3) (5,3) (5,0)\n",
    );
    write(dir.path(), "one.nets", "UCLA nets 1.0\nNumNets : 0\nNumPins : 0\n");
    write(dir.path(), "one.pl", "UCLA pl 1.0\n");
    let aux = write(dir.path(), "one.aux", "RowBasedPlacement : one.blocks one.nets one.pl\n");
    let o = mixfloor(&["min-area", "--aux", &aux, "--no-time"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "min-area");
    assert_eq!(row[5], "1");
    assert_eq!(row[7], "15");
    assert_eq!(row[8], "1");
    assert!(stderr(&o).contains("trial 0"));
}

#[test]
fn selftest_passes_and_catches_corruption() {
    let ok = mixfloor(&["selftest"], None);
    assert_eq!(ok.status.code(), Some(0), "{}{}", stdout(&ok), stderr(&ok));
    assert_eq!(stdout(&ok).matches("pass").count(), 5, "{}", stdout(&ok));
    let bad = mixfloor(&["selftest", "--corrupt-overlap"], None);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("FAIL"));
}
