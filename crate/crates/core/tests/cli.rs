use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use powchoice::harness::{load_spec, summarize, COMPARISON_FILE, TARGETS_FILE};
use tempfile::TempDir;

const SMALL: &str = r#"
schema_version = 1
name = "small"
rounds = 40
local_steps = 2
seeds = 3
target_loss = 5.0

[task]
kind = "quadratic"
clients = 10
dim = 3
power_law_a = 3.0

[lr]
schedule = "fixed"
eta = 0.002

[[strategies]]
kind = "rand"
m = 2

[[strategies]]
kind = "pow_d"
m = 2
d = 5

[[strategies]]
kind = "rpow_d"
m = 2
d = 5
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_powchoice"));
    c.env_remove("POWCHOICE_OUT_DIR").env("RUST_LOG", "warn");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], spec: &Path, out: &Path) -> Output {
    bin().args(args).arg("--spec").arg(spec).arg("--out").arg(out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn missing_spec_exits_2() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["run"], &tmp.path().join("nope.spec"), tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let head = SMALL.split("[[strategies]]").next().unwrap();
    let empty = head.replace("seeds = 3", "seeds = 3\nstrategies = []");
    let o = run(&["run"], &write(tmp.path(), "empty.spec", &empty), tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("strategy list is empty"), "{}", stderr(&o));

    let typo = SMALL.replace("rounds = 40", "rounds = 40\nround = 3");
    let o = run(&["run"], &write(tmp.path(), "typo.spec", &typo), tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let big_d = SMALL.replace("d = 5", "d = 50");
    let o = run(&["skew"], &write(tmp.path(), "d.spec", &big_d), tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = bin().args(["run", "--spec"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "div.spec", &SMALL.replace("eta = 0.002", "eta = 1e10"));
    let o = run(&["run"], &spec, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "s.spec", &SMALL.replace("name = \"small\"", "name = \"small\"\nout_dir = \"from_spec\""));
    let env_dir = tmp.path().join("from_env");
    let o = bin()
        .args(["run", "--spec"])
        .arg(&spec)
        .env("POWCHOICE_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_dir.join(COMPARISON_FILE).is_file());

    let flag_dir = tmp.path().join("from_flag");
    let o = bin()
        .args(["run", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&flag_dir)
        .env("POWCHOICE_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join(COMPARISON_FILE).is_file());

    let o = bin().args(["run", "--spec"]).arg(&spec).output().unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("from_spec").join(TARGETS_FILE).is_file());
}

#[test]
fn metrics_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "s.spec", SMALL);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let o = bin()
            .args(["--parallelism", threads, "run", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(read_dir_sorted(&out.join("metrics")));
    }
    assert_eq!(outputs[0].len(), 9);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);

    let out = tmp.path().join("other_seed");
    let o = bin().args(["run", "--seed", "7", "--spec"]).arg(&spec).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("base_seed = 7"), "{manifest}");
    assert!(out.join("metrics/rand_seed9.csv").is_file());
}

#[test]
fn summaries_are_a_function_of_the_metrics() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "s.spec", SMALL);
    let out = tmp.path().join("out");
    assert!(run(&["run"], &spec, &out).status.success());
    let before = (fs::read(out.join(COMPARISON_FILE)).unwrap(), fs::read(out.join(TARGETS_FILE)).unwrap());
    let parsed = load_spec(&spec).unwrap();
    summarize(&out, parsed.target()).unwrap();
    let after = (fs::read(out.join(COMPARISON_FILE)).unwrap(), fs::read(out.join(TARGETS_FILE)).unwrap());
    assert_eq!(before, after);
    let header = String::from_utf8(before.0).unwrap();
    assert!(header.starts_with("strategy,round,t,mean_loss,std_loss,runs\n"));
}

fn parse_frequency(path: &Path) -> Vec<(String, usize, usize, f64, f64)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (
                rec[0].to_string(),
                rec[1].parse().unwrap(),
                rec[2].parse().unwrap(),
                rec[3].parse().unwrap(),
                rec[4].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn freq_profiles() {
    let tmp = TempDir::new().unwrap();
    let long = SMALL.replace("rounds = 40", "rounds = 3000").replace("eta = 0.002", "eta = 1e-5");
    let spec = write(tmp.path(), "s.spec", &long);
    let out = tmp.path().join("out");
    assert!(run(&["run"], &spec, &out).status.success());
    let o = bin().args(["freq", "--metrics"]).arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = parse_frequency(&out.join("frequency.csv"));
    let rand: Vec<_> = rows.iter().filter(|r| r.0 == "rand").collect();
    assert_eq!(rand.len(), 10);
    // 18000 draws in total: the ratios follow p_k.
    for r in &rand {
        let se = (r.4 * (1.0 - r.4) / 18_000.0).sqrt();
        assert!((r.3 - r.4).abs() < 5.0 * se, "{r:?}");
    }
    let pow: Vec<_> = rows.iter().filter(|r| r.0 == "pow-d5").collect();
    assert!(pow.windows(2).all(|w| w[0].3 >= w[1].3));
    assert!(pow.iter().map(|r| (r.3 - r.4).abs()).fold(0.0, f64::max) > 0.05);

    let one = write(tmp.path(), "one.spec", &SMALL.replace("rounds = 40", "rounds = 1").replace("seeds = 3", "seeds = 1"));
    let out1 = tmp.path().join("one");
    assert!(run(&["run"], &one, &out1).status.success());
    assert!(bin().args(["freq", "--metrics"]).arg(&out1).output().unwrap().status.success());
    let rows = parse_frequency(&out1.join("frequency.csv"));
    let total: f64 = rows.iter().filter(|r| r.0 == "pow-d5").map(|r| r.3).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(rows.iter().filter(|r| r.0 == "pow-d5" && r.3 > 0.0).count() <= 2);

    let o = bin().args(["freq", "--metrics"]).arg(tmp.path().join("absent")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn skew_for_a_single_client_is_one() {
    let tmp = TempDir::new().unwrap();
    let k1 = SMALL
        .replace("clients = 10", "clients = 1")
        .replace("m = 2", "m = 1")
        .replace("d = 5", "d = 1")
        + "\n[skew]\nsamples_per_role = 30\ndraws = 200\n";
    let k1 = k1.replace("[[strategies]]\nkind = \"rpow_d\"\nm = 1\nd = 1\n", "");
    let spec = write(tmp.path(), "k1.spec", &k1);
    let out = tmp.path().join("out");
    let o = run(&["skew"], &spec, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("skew_table.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["strategy", "d", "rho_bar", "rho_tilde", "ratio", "gamma"]);
    let rows: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(&row[2], "1");
        assert_eq!(&row[3], "1");
    }
    assert!(out.join("skew_report.toml").is_file());
}

const BOUND: &str = r#"
schema_version = 1
horizons = [1000, 2000, 100000, 200000]
eta = 0.01

[inputs]
gamma_gap = 0.5
rho_bar = 1.2
rho_tilde = 1.2
init_dist_sq = 1.0
init_excess = 1.0

[inputs.theory]
l = 2.0
mu = 1.0
g = 1.0
sigma = 0.5
tau = 2
m = 3
"#;

#[test]
fn bound_tables() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "b.toml", BOUND);
    let out = tmp.path().join("out");
    let o = run(&["bound"], &spec, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("bounds.csv")).unwrap();
    let rows: Vec<(String, u64, f64, f64)> = r
        .records()
        .map(|x| {
            let x = x.unwrap();
            (x[0].to_string(), x[1].parse().unwrap(), x[2].parse().unwrap(), x[3].parse().unwrap())
        })
        .collect();
    let decaying: Vec<_> = rows.iter().filter(|r| r.0 == "decaying").collect();
    assert_eq!(decaying.len(), 4);
    assert!(decaying.iter().all(|r| r.3 == 0.0));
    let ratio = decaying[2].2 / decaying[3].2;
    assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
    assert_eq!(rows.iter().filter(|r| r.0 == "fixed").count(), 4);

    let o = run(&["bound"], &write(tmp.path(), "cap.toml", &BOUND.replace("eta = 0.01", "eta = 1.0")), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cap"));

    let bad = BOUND.replace("rho_tilde = 1.2", "rho_tilde = 1.0");
    let o = run(&["bound"], &write(tmp.path(), "bad.toml", &bad), &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bundled_specs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    for name in ["quadratic_k30.spec", "synthetic11.spec"] {
        let spec = load_spec(&dir.join(name)).unwrap();
        spec.build_task(&dir).unwrap();
    }
    let q = load_spec(&dir.join("quadratic_k30.spec")).unwrap();
    assert_eq!((q.rounds, q.local_steps, q.seeds), (500, 2, 10));
    let text = fs::read_to_string(dir.join("bound_quadratic.toml")).unwrap();
    powchoice::harness::BoundFile::from_toml(&text).unwrap();
}
