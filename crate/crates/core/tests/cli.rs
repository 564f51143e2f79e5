use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use opcalc::campaign::{bundle_for_trial, CampaignConfig, CheckId, ReproBundle};
use opcalc::gen::{gen_contraction, gen_unitary};
use opcalc::linalg::CMat;
use opcalc::shift::ShiftFunction;

fn opcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcalc")).args(args).env_remove("OPCALC_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = r#"{
        "master_seed": 7,
        "trials": 3,
        "dims": [1, 2],
        "function_ids": ["z^1", "z^-3", "abs_im_z_j16"],
        "dilation_degree": 4,
        "shift_degree": 8,
        "blowup": {"deltas": [0.5, 0.05], "trials": 2, "dim": 2}
    }"#;
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = opcalc(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["series.csv", "ratio.csv", "blowup.csv", "blowup_p2.dat", "summary.json", "eta_re.dat", "eta_im.dat"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["exit_code"], 0);
    assert_eq!(fs::read_to_string(out.join("eta_re.dat")).unwrap().lines().count(), 1024);
    let header = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(header.starts_with("instance_id,p,f_id,lhs,rhs,constant_used,slack,pass\n"));
}

#[test]
fn flags_override_config_and_env_sets_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = |out: &Path, threads: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_opcalc"));
        cmd.args(["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        cmd.args(["--check", "series", "--check", "defect", "--seed", "11", "--trials", "2"]);
        match threads {
            Some(t) => cmd.env("OPCALC_THREADS", t),
            None => cmd.env_remove("OPCALC_THREADS"),
        };
        cmd.output().unwrap()
    };
    assert!(run(&a, Some("3")).status.success());
    assert!(run(&b, None).status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["defect.csv", "series.csv", "summary.json"]);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap());
    }
    let series = fs::read_to_string(a.join("series.csv")).unwrap();
    assert!(series.lines().nth(1).unwrap().starts_with("series-000000000000000b-00000,"));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"trials": 0}"#).unwrap();
    let o = opcalc(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = opcalc(&["verify", "--check", "nonsense", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_reproduces_and_flags_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CampaignConfig { dims: vec![2, 3], function_ids: vec!["rand_poly_0".into(), "z^2".into()], ..Default::default() };
    let bundle = bundle_for_trial(&cfg, CheckId::StrictPair, 4).unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, bundle.to_json()).unwrap();
    let o = opcalc(&["replay", good.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("reproduced"));

    let mut bad: ReproBundle = bundle.clone();
    bad.rows[0].lhs *= 1.0 + 1e-9;
    let badp = dir.path().join("bad.json");
    fs::write(&badp, bad.to_json()).unwrap();
    let o = opcalc(&["replay", badp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("MISMATCH"));
}

#[test]
fn shift_emits_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = gen_contraction(1, 2, 0.5).unwrap().into_mat();
    let t1 = gen_contraction(2, 2, 0.8).unwrap().into_mat();
    let (p0, p1) = (dir.path().join("t0.json"), dir.path().join("t1.json"));
    fs::write(&p0, t0.to_json()).unwrap();
    fs::write(&p1, t1.to_json()).unwrap();
    let out = dir.path().join("eta");
    for extra in [&[][..], &["--dilation"][..]] {
        let mut args = vec!["shift", "--t0", p0.to_str().unwrap(), "--t1", p1.to_str().unwrap(), "--degree", "6"];
        args.extend(["--out", out.to_str().unwrap()]);
        args.extend(extra);
        let o = opcalc(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let eta = ShiftFunction::from_json(&fs::read_to_string(out.join("eta.json")).unwrap()).unwrap();
    assert_eq!(eta.degree(), 6);
    let re = fs::read_to_string(out.join("eta_re.dat")).unwrap();
    assert_eq!(re.lines().count(), 1024);
    assert!(re.lines().all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn dilate_validates_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    fs::write(&t, gen_contraction(3, 3, 0.9).unwrap().into_mat().to_json()).unwrap();
    let u = dir.path().join("u.json");
    let o = opcalc(&["dilate", "--matrix", t.to_str().unwrap(), "--degree", "4", "--out", u.to_str().unwrap()]);
    assert!(o.status.success());
    let m = CMat::from_json(&fs::read_to_string(&u).unwrap()).unwrap();
    assert_eq!(m.rows(), 15);
    assert!(m.unitarity_residual() <= 1e-10);

    fs::write(&t, CMat::identity(2).scale_re(1.5).to_json()).unwrap();
    let o = opcalc(&["dilate", "--matrix", t.to_str().unwrap(), "--degree", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn doi_applies_divided_difference() {
    let dir = tempfile::tempdir().unwrap();
    let (pu, pv) = (dir.path().join("u.json"), dir.path().join("v.json"));
    fs::write(&pu, gen_unitary(4, 3).to_json()).unwrap();
    fs::write(&pv, gen_unitary(5, 3).to_json()).unwrap();
    let out = dir.path().join("d.json");
    let o = opcalc(&["doi", "--u", pu.to_str().unwrap(), "--v", pv.to_str().unwrap(), "--function", "z^3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = CMat::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let (u, v) = (gen_unitary(4, 3), gen_unitary(5, 3));
    assert!((&d - &(&u.pow(3) - &v.pow(3))).frobenius() <= 1e-10);

    let f = dir.path().join("f.json");
    fs::write(&f, r#"{"degree": 1, "coeffs": {"1": [0.5, 0.0], "-1": [0.5, 0.0]}, "zoo_name": null}"#).unwrap();
    let o = opcalc(&["doi", "--u", pu.to_str().unwrap(), "--v", pv.to_str().unwrap(), "--function-file", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(CMat::from_json(stdout(&o).lines().last().unwrap()).is_ok());
}
