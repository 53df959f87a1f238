//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p plurality-cli --test acceptance`.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use plurality_core::curves::{
    analytic_curve, clean_samples_from_knn, concentrated_curve, empirical_curve, learnable_curve,
    CleanSample,
};
use plurality_core::noise::cyclic_shift;
use plurality_core::oracle::validate_against_oracle;
use plurality_core::plurality::{flip_accuracy_simplified, noisy_distribution, plurality_accuracy};
use plurality_core::synthetic::BlobConfig;
use plurality_core::{
    CorruptionMatrix, FeatureDataset, LabelDistribution, NeighborhoodSpec, NoiseRegime, NoiseSpec,
};

use common::{path, plurality, write_dataset};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn grid(step: f64, stop: f64) -> Vec<f64> {
    let n = (stop / step).round() as usize;
    (0..=n).map(|i| ((i as f64 * step) * 1e12).round() / 1e12).collect()
}

fn oracle_equivalence() -> Verdict {
    let (report, t) = timed(|| {
        pool(1).install(|| validate_against_oracle(8, 4, 100, 0, 1e-10, plurality_accuracy).unwrap())
    });
    verdict(
        report.passed() && t < Duration::from_secs(60),
        format!(
            "{} instances, max deviation {:e}, {} failures, {:.2}s on 1 thread (limits 1e-10, 60s)",
            report.instances,
            report.max_deviation,
            report.failures.len(),
            t.as_secs_f64()
        ),
    )
}

fn flip_identity() -> Verdict {
    let clean = LabelDistribution::point_mass(2, 0).unwrap();
    let flip = CorruptionMatrix::permutation(&[1, 0]).unwrap();
    let mut worst: f64 = 0.0;
    let mut worst_half: f64 = 0.0;
    for k in (1..=101).step_by(2) {
        let spec = NeighborhoodSpec::new(k, 2, 0).unwrap();
        for g in grid(0.05, 1.0) {
            let q = noisy_distribution(&clean, g, &flip).unwrap();
            let general = plurality_accuracy(&spec, &q).unwrap();
            worst = worst.max((general - flip_accuracy_simplified(k, g).unwrap()).abs());
            if g == 0.5 {
                worst_half = worst_half.max((general - 0.5).abs());
            }
        }
    }
    verdict(
        worst <= 1e-12 && worst_half <= 1e-12,
        format!("max |general - closed form| {worst:e}, max |Q(0.5) - 0.5| {worst_half:e} (limit 1e-12)"),
    )
}

fn completeness() -> Verdict {
    let report = validate_against_oracle(8, 4, 100, 1, 1e-10, plurality_accuracy).unwrap();
    // odd K with two labels has no ties, so the two accuracies must sum to one
    let mut worst_large: f64 = 0.0;
    for k in [51usize, 101, 201, 301] {
        for g in grid(0.05, 1.0) {
            let q = LabelDistribution::new(vec![1.0 - g, g]).unwrap();
            let spec = NeighborhoodSpec::new(k, 2, 0).unwrap();
            let a = plurality_accuracy(&spec, &q).unwrap();
            let b = plurality_accuracy(&spec.with_correct_label(1).unwrap(), &q).unwrap();
            worst_large = worst_large.max((a + b - 1.0).abs());
        }
    }
    verdict(
        report.max_completeness_error <= 1e-9 && worst_large <= 1e-9,
        format!(
            "max |sum Q_c + ties - 1| {:e} (K<=8, L<=4), {worst_large:e} (L=2, K up to 301) (limit 1e-9)",
            report.max_completeness_error
        ),
    )
}

fn performance() -> Verdict {
    let l = 10;
    let k = 300;
    let spec = NeighborhoodSpec::new(k, l, 0).unwrap();
    let uniform = CorruptionMatrix::uniform(l).unwrap();
    let q = noisy_distribution(&LabelDistribution::point_mass(l, 0).unwrap(), 0.9, &uniform).unwrap();
    let (_, one) = timed(|| pool(1).install(|| plurality_accuracy(&spec, &q).unwrap()));
    let eight = pool(8);
    let (_, many) = timed(|| eight.install(|| plurality_accuracy(&spec, &q).unwrap()));
    let (curve, full) = timed(|| eight.install(|| learnable_curve(l, k, &uniform, &grid(0.05, 1.0)).unwrap()));
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        one < Duration::from_secs(10) && many < Duration::from_secs(2) && full < Duration::from_secs(60),
        format!(
            "K=300 L=10: {:.3}s on 1 thread (limit 10s), {:.3}s on 8 threads (limit 2s), {}-point curve {:.2}s on 8 threads (limit 60s); {cores} core(s) available",
            one.as_secs_f64(),
            many.as_secs_f64(),
            curve.points().len(),
            full.as_secs_f64()
        ),
    )
}

struct BlobFixture {
    train: FeatureDataset,
    test: FeatureDataset,
    samples: Vec<CleanSample>,
}

const FIXTURE_K: usize = 51;

fn blob_fixture() -> BlobFixture {
    let cfg = BlobConfig::new(10, 16, 12.0, 1.0);
    let train = cfg.sample(2000, 101).unwrap().0;
    let test = cfg.sample(200, 102).unwrap().0;
    let samples = clean_samples_from_knn(&train, &test, FIXTURE_K).unwrap();
    BlobFixture { train, test, samples }
}

fn empirical_vs_analytic(f: &BlobFixture) -> Verdict {
    let gammas = grid(0.1, 0.9);
    let matrix = CorruptionMatrix::uniform(10).unwrap();
    let spec = NoiseSpec::new(NoiseRegime::Uniform, 10, 0.0, 0).unwrap();
    let emp = empirical_curve(&f.train, &f.test, FIXTURE_K, &spec, &gammas, 5, 2024).unwrap();
    let ana = analytic_curve(&f.samples, FIXTURE_K, &matrix, &gammas).unwrap();
    let diffs: Vec<(f64, f64)> = emp
        .points()
        .iter()
        .zip(ana.points())
        .map(|(e, a)| (e.gamma, (e.accuracy - a.accuracy).abs()))
        .collect();
    let worst_of = |pts: &mut dyn Iterator<Item = &(f64, f64)>| {
        pts.fold((0.0, 0.0), |acc: (f64, f64), &x| if x.1 > acc.1 { x } else { acc })
    };
    let (worst_gamma, worst) = worst_of(&mut diffs.iter());
    let (_, worst_low) = worst_of(&mut diffs.iter().filter(|d| d.0 <= 0.8 + 1e-9));
    verdict(
        worst <= 0.02,
        format!(
            "max |empirical - analytic| {worst:.4} at gamma={worst_gamma} over 10 levels, 5 repeats (limit 0.02); {worst_low:.4} for gamma <= 0.8"
        ),
    )
}

fn noise_thresholds(f: &BlobFixture) -> Verdict {
    let flip = CorruptionMatrix::permutation(&cyclic_shift(10)).unwrap();
    let uniform = CorruptionMatrix::uniform(10).unwrap();
    let flip_curve = analytic_curve(&f.samples, FIXTURE_K, &flip, &[0.45, 0.55]).unwrap();
    let uni = analytic_curve(&f.samples, FIXTURE_K, &uniform, &[0.8]).unwrap();
    let (f45, f55) = (flip_curve.points()[0].accuracy, flip_curve.points()[1].accuracy);
    let u80 = uni.points()[0].accuracy;
    let checks = [f45 >= 0.9, f55 <= 0.1, u80 >= 0.9];
    let mark = |ok: bool| if ok { "ok" } else { "miss" };
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "flip Q(0.45)={f45:.4} needs >=0.9 [{}], flip Q(0.55)={f55:.4} needs <=0.1 [{}], uniform Q(0.8)={u80:.4} needs >=0.9 [{}]",
            mark(checks[0]),
            mark(checks[1]),
            mark(checks[2])
        ),
    )
}

fn concentrated() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (target, clusters) in [(0.1, 10usize), (0.25, 4), (0.5, 2)] {
        let cfg = BlobConfig::new(4, 8, 10.0, 0.5).with_sub_blobs(vec![1; clusters]);
        let train = cfg.sample(50 * clusters, 201).unwrap().0;
        let test = cfg.sample(20 * clusters, 202).unwrap().0;
        let c = concentrated_curve(&train, &test, 11, &[clusters], &cyclic_shift(4), 7).unwrap();
        let run = &c.runs[0];
        let dev = (run.accuracy - (1.0 - run.realized_gamma)).abs();
        ok &= dev <= 0.05 && (run.realized_gamma - target).abs() <= 0.01;
        parts.push(format!(
            "gamma {target}: realized {:.4}, accuracy {:.4}, |dev| {dev:.4}",
            run.realized_gamma, run.accuracy
        ));
    }
    verdict(ok, format!("{} (limit 0.05)", parts.join("; ")))
}

fn run_twice(args: &[String], outputs: &[PathBuf]) -> Result<bool, String> {
    let mut captured = Vec::new();
    for threads in ["1", "8"] {
        let o = plurality().arg("--threads").arg(threads).args(args).output().unwrap();
        if !o.status.success() {
            return Err(format!("{} exited {:?}", args[0], o.status.code()));
        }
        let mut bytes = o.stdout;
        for p in outputs {
            bytes.extend(fs::read(p).unwrap());
        }
        captured.push(bytes);
    }
    Ok(captured[0] == captured[1])
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = BlobConfig::new(3, 4, 6.0, 1.5).with_sub_blobs(vec![1, 1]);
    let (tr, trl) = write_dataset(d, "train", &cfg.sample(100, 1).unwrap().0);
    let test = cfg.sample(20, 2).unwrap().0;
    let (te, tel) = write_dataset(d, "test", &test);
    let softmax: String = (0..test.len())
        .map(|i| {
            let p0 = 0.5 - (i % 3) as f64 * 0.1;
            format!("{p0},{},{}\n", (1.0 - p0) / 2.0, (1.0 - p0) / 2.0)
        })
        .collect();
    let sm = d.join("softmax.csv");
    fs::write(&sm, softmax).unwrap();
    let out = d.join("out.csv");
    let noisy = d.join("noisy.lnl");
    let report = d.join("report.json");

    let s = |p: &Path| path(p).to_string();
    let data = format!(
        "--train {} --train-labels {} --test {} --test-labels {}",
        s(&tr),
        s(&trl),
        s(&te),
        s(&tel)
    );
    let to_out = format!("--out {}", s(&out));
    let to_inject = format!("--out {} --report {}", s(&noisy), s(&report));
    let cases = [
        (format!("analytic --l 10 --k 101 --noise uniform --gamma-range 0:1:0.1 {to_out}"), vec![out.clone()]),
        (
            format!("analytic --k 15 --noise flip --clean knn-histogram --gamma-range 0:1:0.1 {data} {to_out}"),
            vec![out.clone()],
        ),
        (
            format!(
                "analytic --k 15 --noise uniform --clean softmax-file --gamma 0.3 --softmax {} --test-labels {} {to_out}",
                s(&sm),
                s(&tel)
            ),
            vec![out.clone()],
        ),
        (format!("knn-eval --k 9 --noise uniform --gamma-range 0:0.8:0.2 --seed 11 {data}"), vec![]),
        (format!("knn-eval --k 9 --noise concentrated --clusters 2,4 --seed 11 {data}"), vec![]),
        (
            format!("inject --noise flip --gamma 0.3 --seed 5 --labels {} {to_inject}", s(&trl)),
            vec![noisy.clone(), report.clone()],
        ),
        (
            format!(
                "inject --noise concentrated --clusters 2 --seed 5 --labels {} --features {} {to_inject}",
                s(&trl),
                s(&tr)
            ),
            vec![noisy.clone(), report.clone()],
        ),
        (format!("validate --max-k 6 --max-l 3 --trials 20 {to_out}"), vec![out.clone()]),
        (
            format!("softmax-compare --k-range 10:100:10 --softmax {} {data} {to_out}", s(&sm)),
            vec![out.clone()],
        ),
    ];
    let mut differing = Vec::new();
    for (line, outputs) in &cases {
        let args: Vec<String> = line.split_whitespace().map(String::from).collect();
        match run_twice(&args, outputs) {
            Ok(true) => {}
            Ok(false) => differing.push(args[..2].join(" ")),
            Err(e) => differing.push(e),
        }
    }
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} command configurations byte-identical at 1 and 8 threads", cases.len())
        } else {
            format!("differences: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n} ({name}): {}", v.detail);
        if !v.passed {
            failed += 1;
        }
    };
    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "flip closed form", flip_identity());
    report(3, "completeness", completeness());
    report(4, "performance", performance());
    let fixture = blob_fixture();
    report(5, "empirical vs analytic", empirical_vs_analytic(&fixture));
    report(6, "noise thresholds", noise_thresholds(&fixture));
    report(7, "concentrated noise", concentrated());
    report(8, "determinism", determinism());
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
