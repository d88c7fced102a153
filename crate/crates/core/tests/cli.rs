use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use labelprop::config::PipelineConfig;
use labelprop::imagecore::{load_label_png, save_fmap, save_label_png, ClassTable, FloatMap, LabelMap};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_labelprop"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn labelprop")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, seed: u64, variant: &str, noise: &str) {
    let o = run(&[
        "synth", "--out", s(dir), "--seed", &seed.to_string(), "--variant", variant, "--width", "64", "--height",
        "64", "--noise", noise,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

fn diffuse_args(dir: &Path, out: &Path) -> Vec<String> {
    let mut args: Vec<String> = ["diffuse", "--image", s(&dir.join("image.png")), "--mask", s(&dir.join("mask.fmap"))]
        .iter()
        .map(|a| a.to_string())
        .collect();
    for c in [1, 2] {
        args.push("--act".into());
        args.push(format!("{c}:{}", dir.join(format!("act_{c}.fmap")).display()));
    }
    args.extend(["--classes".into(), s(&dir.join("classes.txt")).into(), "--out".into(), s(out).into()]);
    args
}

fn run_owned(args: &[String]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn inspect_prints_dims_and_stats() {
    let dir = TempDir::new().unwrap();
    let half = dir.path().join("half.fmap");
    save_fmap(&FloatMap::new(1, 1, vec![0.5]).unwrap(), &half).unwrap();
    let o = run(&["inspect", s(&half)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "1 1 0.500000 0.500000 0.500000\n");

    let ones = dir.path().join("ones.fmap");
    save_fmap(&FloatMap::filled(4, 4, 1.0).unwrap(), &ones).unwrap();
    let o = run(&["inspect", s(&ones)]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "4 4 1.000000 1.000000 1.000000\n");

    let bytes = std::fs::read(&ones).unwrap();
    let cut = dir.path().join("cut.fmap");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    let o = run(&["inspect", s(&cut)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn diffuse_writes_label_map() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 1, "two-blob", "0.3");
    let out = dir.path().join("pred.png");
    let o = run_owned(&diffuse_args(dir.path(), &out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = labelprop::imagecore::load_class_table(dir.path().join("classes.txt")).unwrap();
    let pred = load_label_png(&out, &table).unwrap();
    assert_eq!(pred.dims(), (64, 64));
    assert!(pred.data().contains(&1) && pred.data().contains(&2));
}

#[test]
fn missing_activation_fails_without_output() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 2, "two-blob", "0.3");
    std::fs::remove_file(dir.path().join("act_2.fmap")).unwrap();
    let out = dir.path().join("pred.png");
    let o = run_owned(&diffuse_args(dir.path(), &out));
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn all_zero_activation_exits_three() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 3, "two-blob", "0.3");
    save_fmap(&FloatMap::filled(64, 64, 0.0).unwrap(), dir.path().join("act_1.fmap")).unwrap();
    let out = dir.path().join("pred.png");
    let o = run_owned(&diffuse_args(dir.path(), &out));
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn iteration_cap_exits_four_but_keeps_map() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 4, "two-blob", "0.3");
    let cfg = dir.path().join("tight.cfg");
    std::fs::write(&cfg, "solver_max_iters = 1\nsolver_tol = 1e-14\n").unwrap();
    let out = dir.path().join("pred.png");
    let mut args = diffuse_args(dir.path(), &out);
    args.extend(["--config".into(), s(&cfg).into()]);
    let o = run_owned(&args);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
}

#[test]
fn dump_config_round_trips() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), 5, "checker", "0.0");
    let cfg = dir.path().join("in.cfg");
    std::fs::write(&cfg, "# custom\nsigma = 0.2\nslic_k = 200\naffinity_norm = squared\n").unwrap();
    let dump = dir.path().join("dump.cfg");
    let mut args = diffuse_args(dir.path(), &dir.path().join("pred.png"));
    args.extend(["--config".into(), s(&cfg).into(), "--dump-config".into(), s(&dump).into()]);
    assert_eq!(run_owned(&args).status.code(), Some(0));
    let loaded = PipelineConfig::load(&dump).unwrap();
    assert_eq!(loaded, PipelineConfig::load(&cfg).unwrap());
    assert_eq!(loaded.sigma, 0.2);
}

fn label_dir(root: &Path, name: &str, maps: &[(&str, Vec<u8>)], table: &ClassTable) -> PathBuf {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir).unwrap();
    for (file, data) in maps {
        save_label_png(&LabelMap::new(4, 2, data.clone(), table.clone()).unwrap(), dir.join(file)).unwrap();
    }
    dir
}

#[test]
fn eval_reports() {
    let root = TempDir::new().unwrap();
    let table = ClassTable::new(vec!["background".into(), "thing".into()]).unwrap();
    let classes = root.path().join("classes.txt");
    labelprop::imagecore::save_class_table(&table, &classes).unwrap();
    let gt_data = vec![0, 0, 0, 0, 1, 1, 0, 0];
    let gt = label_dir(root.path(), "gt", &[("a.png", gt_data.clone())], &table);
    let same = label_dir(root.path(), "same", &[("a.png", gt_data)], &table);
    let third = label_dir(root.path(), "third", &[("a.png", vec![0, 0, 0, 0, 1, 0, 1, 0])], &table);
    let other = label_dir(root.path(), "other", &[("b.png", vec![0; 8])], &table);

    let o = run(&["eval", "--gt", s(&gt), "--pred", s(&same), "--classes", s(&classes)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("mIoU\t1.0000\n"));

    let o = run(&["eval", "--gt", s(&gt), "--pred", s(&third), "--classes", s(&classes)]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("1\t0.3333\n"));

    let o = run(&["eval", "--gt", s(&gt), "--pred", s(&other), "--classes", s(&classes)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_is_byte_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    synth(a.path(), 42, "two-blob", "0.3");
    synth(b.path(), 42, "two-blob", "0.3");
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap());
    }
}

#[test]
fn gradient_variant_end_to_end() {
    let root = TempDir::new().unwrap();
    let data = root.path().join("data");
    synth(&data, 8, "gradient", "0.0");
    let (gt, pred) = (root.path().join("gt"), root.path().join("pred"));
    std::fs::create_dir_all(&gt).unwrap();
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::copy(data.join("gt.png"), gt.join("x.png")).unwrap();
    // the gradient fixture has a single object class
    let mut args: Vec<String> = ["diffuse", "--image", s(&data.join("image.png")), "--mask", s(&data.join("mask.fmap"))]
        .iter()
        .map(|a| a.to_string())
        .collect();
    for entry in std::fs::read_dir(&data).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if let Some(c) = name.strip_prefix("act_").and_then(|r| r.strip_suffix(".fmap")) {
            args.push("--act".into());
            args.push(format!("{c}:{}", data.join(&name).display()));
        }
    }
    args.extend(["--classes".into(), s(&data.join("classes.txt")).into(), "--out".into(), s(&pred.join("x.png")).into()]);
    assert_eq!(run_owned(&args).status.code(), Some(0));
    let o = run(&["eval", "--gt", s(&gt), "--pred", s(&pred), "--classes", s(&data.join("classes.txt"))]);
    let report = String::from_utf8(o.stdout).unwrap();
    let miou: f64 = report.lines().last().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(miou >= 0.98, "{report}");
}

#[test]
fn batch_runs_every_line() {
    let root = TempDir::new().unwrap();
    for (i, seed) in [11u64, 12].iter().enumerate() {
        synth(&root.path().join(format!("img{i}")), *seed, "two-blob", "0.3");
    }
    let manifest = root.path().join("jobs.tsv");
    let mut text = String::from("# image\tmask\tout\tactivations\n");
    for i in 0..2 {
        text.push_str(&format!(
            "img{i}/image.png\timg{i}/mask.fmap\tout{i}.png\t1:img{i}/act_1.fmap\t2:img{i}/act_2.fmap\n"
        ));
    }
    std::fs::write(&manifest, text).unwrap();
    let o = run(&["batch", "--manifest", s(&manifest), "--classes", s(&root.path().join("img0/classes.txt"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(root.path().join("out0.png").exists() && root.path().join("out1.png").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["diffuse"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
