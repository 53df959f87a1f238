mod common;

use std::fs;

use common::{path, plurality, rows, run, stderr, stdout, write_dataset};
use plurality_core::knn::clean_distribution;
use plurality_core::synthetic::BlobConfig;

#[test]
fn analytic_flip_single_point() {
    let o = run(&["analytic", "--l", "2", "--k", "3", "--noise", "flip", "--gamma", "0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# command=analytic\n# config="));
    assert!(text.lines().any(|l| l == "0.2,0.896"), "{text}");
}

#[test]
fn analytic_zero_noise_is_one() {
    let o = run(&["analytic", "--l", "10", "--k", "51", "--noise", "uniform", "--gamma-range", "0:0.2:0.1"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    assert_eq!(r[0], vec![0.0, 1.0]);
}

#[test]
fn analytic_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, "0.5,0.5\n0.7,0.7\n").unwrap();
    let o = run(&["analytic", "--l", "2", "--k", "3", "--noise", "matrix", "--matrix", path(&m), "--gamma", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));

    let o = run(&["analytic", "--l", "2", "--k", "3", "--noise", "uniform", "--gamma", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analytic", "--l", "3", "--k", "3", "--noise", "flip", "--flip-map", "0,2,1", "--gamma", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analytic", "--l", "3", "--k", "3", "--noise", "flip", "--flip-map", "0,2,1", "--allow-fixed-points", "--gamma", "0.1"]);
    assert!(o.status.success());
    let o = run(&["analytic", "--l", "3", "--noise", "uniform", "--gamma", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

fn blob_files(dir: &std::path::Path) -> [String; 4] {
    let cfg = BlobConfig::new(3, 4, 20.0, 1.0);
    let (tr, trl) = write_dataset(dir, "train", &cfg.sample(40, 1).unwrap().0);
    let (te, tel) = write_dataset(dir, "test", &cfg.sample(10, 2).unwrap().0);
    [tr, trl, te, tel].map(|p| path(&p).to_string())
}

fn data_args(f: &[String; 4]) -> Vec<&str> {
    vec![
        "--train", &f[0], "--train-labels", &f[1], "--test", &f[2], "--test-labels", &f[3],
    ]
}

#[test]
fn knn_eval_requires_seed_and_valid_k() {
    let dir = tempfile::tempdir().unwrap();
    let f = blob_files(dir.path());
    let mut args = vec!["knn-eval", "--k", "5", "--noise", "uniform", "--gamma", "0.1"];
    args.extend(data_args(&f));
    assert_eq!(run(&args).status.code(), Some(2));

    let mut args = vec!["knn-eval", "--k", "500", "--noise", "uniform", "--gamma", "0.1", "--seed", "1"];
    args.extend(data_args(&f));
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn knn_eval_single_repeat_has_zero_std() {
    let dir = tempfile::tempdir().unwrap();
    let f = blob_files(dir.path());
    let mut args = vec![
        "knn-eval", "--k", "5", "--noise", "uniform", "--gamma", "0,0.3", "--seed", "9", "--repeats", "1",
    ];
    args.extend(data_args(&f));
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# seed=9\n"));
    assert!(text.contains("gamma,accuracy,std\n"));
    let r = rows(&text);
    assert_eq!(r[0], vec![0.0, 1.0, 0.0]);
    assert_eq!(r[1][2], 0.0);
}

#[test]
fn knn_eval_auto_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let f = blob_files(dir.path());
    let mut args = vec!["knn-eval", "--k", "5", "--noise", "flip", "--gamma", "0.2", "--seed", "auto"];
    args.extend(data_args(&f));
    let text = stdout(&run(&args));
    let seed = text.lines().find_map(|l| l.strip_prefix("# seed=")).unwrap();
    assert!(seed.parse::<u64>().is_ok());
}

#[test]
fn inject_is_deterministic_and_identity_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = blob_files(dir.path());
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let inject = |gamma: &str, seed: &str, o: &str, r: &str| {
        run(&[
            "inject", "--labels", &f[1], "--noise", "uniform", "--gamma", gamma, "--seed", seed, "--out", o,
            "--report", r,
        ])
    };
    assert!(inject("0.4", "5", &out("a.lnl"), &out("a.json")).status.success());
    assert!(inject("0.4", "5", &out("b.lnl"), &out("b.json")).status.success());
    assert_eq!(fs::read(out("a.lnl")).unwrap(), fs::read(out("b.lnl")).unwrap());
    assert_eq!(fs::read(out("a.json")).unwrap(), fs::read(out("b.json")).unwrap());
    assert_ne!(fs::read(out("a.lnl")).unwrap(), fs::read(&f[1]).unwrap());

    assert!(inject("0", "5", &out("z.lnl"), &out("z.json")).status.success());
    assert_eq!(fs::read(out("z.lnl")).unwrap(), fs::read(&f[1]).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out("z.json")).unwrap()).unwrap();
    assert_eq!(report["realized_noise_fraction"], 0.0);
    assert_eq!(report["seed"], 5);
}

#[test]
fn inject_concentrated_relabels_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BlobConfig::new(3, 4, 25.0, 0.5).with_sub_blobs(vec![1, 1]);
    let (feat, lab) = write_dataset(dir.path(), "d", &cfg.sample(50, 3).unwrap().0);
    let o = dir.path().join("n.lnl");
    let r = dir.path().join("n.json");
    let res = run(&[
        "inject", "--labels", path(&lab), "--features", path(&feat), "--noise", "concentrated", "--clusters", "2",
        "--seed", "3", "--out", path(&o), "--report", path(&r),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&r).unwrap()).unwrap();
    let realized = report["realized_noise_fraction"].as_f64().unwrap();
    assert!((realized - 0.5).abs() < 1e-12);
    assert_eq!(report["corrupted_indices"].as_array().unwrap().len(), 75);
}

#[test]
fn validate_pass_fail_and_vacuous() {
    let o = run(&["validate", "--max-k", "5", "--max-l", "3", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("result=pass"));

    let o = run(&["validate", "--max-k", "5", "--max-l", "3", "--trials", "10", "--corrupt-analytic"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text.contains("result=fail"));
    assert!(text.contains("FAIL K="));

    let o = run(&["validate", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("instances=0"));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn softmax_compare_recovers_generating_k() {
    let dir = tempfile::tempdir().unwrap();
    // overlapping blobs so neighbor histograms vary with K
    let cfg = BlobConfig::new(3, 2, 1.0, 1.0);
    let train = cfg.sample(200, 4).unwrap().0;
    let test = cfg.sample(5, 5).unwrap().0;
    let (tr, trl) = write_dataset(dir.path(), "train", &train);
    let (te, tel) = write_dataset(dir.path(), "test", &test);
    let softmax: String = (0..test.len())
        .map(|i| {
            let h = clean_distribution(&train, test.row(i), 10).unwrap();
            let cells: Vec<String> = h.probs().iter().map(|p| format!("{p:.17e}")).collect();
            cells.join(",") + "\n"
        })
        .collect();
    let sm = dir.path().join("softmax.csv");
    fs::write(&sm, softmax).unwrap();
    let o = run(&[
        "softmax-compare", "--train", path(&tr), "--train-labels", path(&trl), "--test", path(&te),
        "--test-labels", path(&tel), "--softmax", path(&sm),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("\"k_range\":\"10:300:10\""));
    assert!(text.contains("sample,preferred_k,chi_square,median_chi_square\n"));
    let r = rows(&text);
    assert_eq!(r.len(), test.len());
    for (i, row) in r.iter().enumerate() {
        assert_eq!(row[0], i as f64);
        assert_eq!(row[1], 10.0);
        assert!(row[2] < 1e-12);
        assert_eq!(row[3], r[0][3]);
    }
}

#[test]
fn threads_env_and_flag_give_same_bytes() {
    let args = ["analytic", "--l", "5", "--k", "41", "--noise", "uniform", "--gamma-range", "0:1:0.25"];
    let a = plurality().args(args).env("PLURALITY_THREADS", "1").output().unwrap();
    let b = plurality().args(["--threads", "3"]).args(args).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}
