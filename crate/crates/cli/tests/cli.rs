use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
interferers = 2
k_range = [2, 12]
k_step = 2
t_sim = 10
samples = 3
seeds = [0]
training_seeds = [100, 101]
schemes = ["reactive_zf"]

[training]
epochs = 3
hidden = 16
latent_dim = 4
batch_size = 16
"#;

struct Work {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Work {
    fn new(config: &str) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        fs::write(root.join("exp.toml"), config).unwrap();
        Work { _tmp: tmp, root }
    }

    fn run(&self, args: &[&str]) -> Output {
        if args.contains(&"-c") {
            return self.raw(args);
        }
        self.raw(&[&["-c", "exp.toml"], args].concat())
    }

    fn raw(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_xltwin"))
            .current_dir(&self.root)
            .arg("-q")
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let o = self.run(args);
        assert!(
            o.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        String::from_utf8(o.stdout).unwrap()
    }

    fn path(&self, p: &str) -> PathBuf {
        self.root.join(p)
    }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn train_model(w: &Work) {
    w.ok(&["dataset"]);
    w.ok(&["train"]);
}

#[test]
fn simulate_and_evaluate_are_byte_identical_across_runs() {
    let w = Work::new(SMALL);
    train_model(&w);
    let schemes = "reactive_zf,reactive_hybrid,dt_deterministic,genai_regime_aware_proposed,oracle";
    for out in ["a", "b"] {
        w.ok(&["simulate", "--schemes", schemes, "-o", out, "--seeds", "0,1"]);
        w.ok(&["evaluate", "-o", out]);
    }
    w.ok(&["evaluate", "--input", "a", "-o", "a2"]);
    let a = tree(&w.path("a"));
    assert_eq!(a.keys().filter(|k| k.contains("trace_")).count(), 10);
    assert_eq!(a, tree(&w.path("b")));
    let a2 = tree(&w.path("a2"));
    for (k, v) in &a2 {
        assert_eq!(Some(v), a.get(k), "{k}");
    }
    let seq = {
        w.ok(&["simulate", "--schemes", schemes, "-o", "c", "--seeds", "0,1", "--sequential"]);
        tree(&w.path("c"))
    };
    for (k, v) in &seq {
        assert_eq!(Some(v), a.get(k), "{k}");
    }
}

#[test]
fn every_csv_carries_hash_and_seed() {
    let w = Work::new(SMALL);
    w.ok(&["simulate", "-v", "--seeds", "4", "--schemes", "reactive_zf,dt_deterministic"]);
    w.ok(&["evaluate"]);
    let files = tree(&w.path("out"));
    assert!(!files.is_empty());
    for (name, bytes) in files.iter().filter(|(k, _)| k.ends_with(".csv")) {
        let first = String::from_utf8_lossy(bytes).lines().next().unwrap().to_string();
        assert!(first.starts_with("# config_hash="), "{name}: {first}");
        assert!(first.contains("seed=4") || first.contains("seeds=4"), "{name}: {first}");
    }
    assert!(files.keys().any(|k| k.contains("optimizer_dt_deterministic_k2_s4.csv")));
}

#[test]
fn single_scheme_single_seed_gives_six_figure_tables() {
    let w = Work::new(SMALL);
    w.ok(&["simulate", "-o", "x"]);
    w.ok(&["evaluate", "-o", "x"]);
    let figures: Vec<String> = fs::read_dir(w.path("x"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(figures.len(), 6, "{figures:?}");
    for f in xltwin::harness::output::FIGURE_FILES {
        assert!(figures.iter().any(|n| n == f), "{f}");
    }
}

#[test]
fn sweep_emits_one_trace_per_k_scheme_seed() {
    let w = Work::new(SMALL);
    w.ok(&["sweep", "--schemes", "reactive_zf,dt_deterministic", "--seeds", "0,1"]);
    let traces = fs::read_dir(w.path("out/traces"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("trace_"))
        .count();
    assert_eq!(traces, 6 * 2 * 2);
    let t = xltwin::harness::output::Table::read(&w.path("out/interference_vs_k.csv")).unwrap();
    let s = t.column("scheme").unwrap();
    let k = t.column("interferers").unwrap();
    let mut keys: Vec<(String, String)> = t.rows.iter().map(|r| (r[s].clone(), r[k].clone())).collect();
    let n = keys.len();
    keys.sort();
    keys.dedup();
    assert_eq!(n, 12);
    assert_eq!(keys.len(), 12);
}

#[test]
fn dataset_manifest_is_stable() {
    let w = Work::new(SMALL);
    w.ok(&["dataset", "-o", "d1"]);
    w.ok(&["dataset", "-o", "d2"]);
    let (a, b) = (tree(&w.path("d1")), tree(&w.path("d2")));
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
    let m = String::from_utf8(a["dataset_k2.toml"].clone()).unwrap();
    assert!(m.contains("config_hash"));
}

#[test]
fn training_is_deterministic_and_resume_continues() {
    let w = Work::new(SMALL);
    w.ok(&["dataset"]);
    w.ok(&["train", "--epochs", "5", "--models", "full"]);
    let full_model = fs::read(w.path("full/model_k2.bin")).unwrap();
    let full_curve = fs::read_to_string(w.path("out/loss_curve_k2.csv")).unwrap();

    w.ok(&["train", "--epochs", "5", "--models", "again"]);
    assert_eq!(full_model, fs::read(w.path("again/model_k2.bin")).unwrap());

    w.ok(&["train", "--models", "split"]);
    w.ok(&["train", "--resume", "--epochs", "2", "--models", "split"]);
    let full = xltwin::predictor::artifact::load(&w.path("full/model_k2.bin")).unwrap();
    let mut split = xltwin::predictor::artifact::load(&w.path("split/model_k2.bin")).unwrap();
    assert_eq!(split.config.epochs, 2);
    split.config.epochs = full.config.epochs;
    assert_eq!(split, full);
    let split_curve = fs::read_to_string(w.path("out/loss_curve_k2.csv")).unwrap();
    let rows = |s: &str| s.lines().skip(2).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(rows(&split_curve), rows(&full_curve));
    let epochs: Vec<String> = rows(&split_curve)
        .iter()
        .map(|r| r.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(epochs, ["1", "2", "3", "4", "5"]);
}

#[test]
fn missing_model_is_reported() {
    let w = Work::new(SMALL);
    let o = w.run(&["simulate", "--schemes", "genai_regime_aware_proposed"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_json(&o)["error"]["code"], "missing_artifact");
}

#[test]
fn usage_and_config_errors_are_machine_readable() {
    let w = Work::new(SMALL);
    let o = w.run(&["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["code"], "usage");

    let o = w.run(&["-c", "absent.toml", "simulate"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"]["code"], "config");

    fs::write(w.path("bad.toml"), "dt = -1.0\n").unwrap();
    let o = w.run(&["-c", "bad.toml", "simulate"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(error_json(&o)["error"]["message"].is_string());

    let o = w.run(&["simulate", "--seeds", "x"]);
    assert_eq!(o.status.code(), Some(3));

    let o = w.run(&["evaluate", "--input", "nowhere"]);
    assert_eq!(o.status.code(), Some(4));

    let o = w.run(&["train"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn evaluation_refuses_mixed_hashes() {
    let w = Work::new(SMALL);
    w.ok(&["simulate", "-o", "m"]);
    fs::write(w.path("other.toml"), SMALL.replace("t_sim = 10", "t_sim = 11")).unwrap();
    w.ok(&["-c", "other.toml", "simulate", "-o", "m", "--seeds", "9"]);
    let o = w.run(&["evaluate", "-o", "m"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(error_json(&o)["error"]["code"], "hash_mismatch");
}

#[test]
fn dataset_from_other_config_is_rejected() {
    let w = Work::new(SMALL);
    w.ok(&["dataset"]);
    fs::write(w.path("other.toml"), SMALL.replace("samples = 3", "samples = 4")).unwrap();
    let o = w.run(&["-c", "other.toml", "train"]);
    assert_eq!(o.status.code(), Some(5));
}
