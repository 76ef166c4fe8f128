//! End-to-end runs of the `qus` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qus_cli::format::{read_table, GridFile, Provenance, FREQ, DEPTH, MAP_KIND, RF_KIND};
use qus_core::model::{forward_log_ratio, FreqDepthMap, ParamColumn, SpectralGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROV: Provenance<'static> = Provenance {
    command: "test",
    config_hash: "0",
};

fn qus(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qus"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("qus runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_map(p: &Path) -> GridFile {
    GridFile::read(p, MAP_KIND).unwrap()
}

/// Every file below `root`, relative, sorted.
fn files(root: &Path) -> Vec<PathBuf> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

fn body(p: &Path) -> String {
    let text = std::fs::read_to_string(p).unwrap();
    text.split_once('\n').unwrap().1.to_string()
}

const LAYERED: &str = "\
[synth]
freqs = 3, 10, 12
depths = 0.5, 4, 20
laterals = 0, 2, 3
phantom = layered
layer = 0.5, 2, 0.6035, 2.9966e-6, 3.4281
layer = 2, 4, 0.8, 1.2e-5, 3.0
";

#[test]
fn synth_is_deterministic_and_its_manifest_reproduces_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &format!("{LAYERED}sigma0 = 0.05\nslope_fz = 0.01\nseed = 9\nframes = 2\nspectra = true\nspecular = 4\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "a", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "b", "synth"]));
    let listing = files(&d.join("a"));
    assert_eq!(listing, files(&d.join("b")));
    assert!(listing.len() > 10);
    for f in &listing {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap(), "{f:?}");
    }

    ok(qus(d, &["--config", "a/manifest.cfg", "--out", "c", "synth"]));
    assert_eq!(files(&d.join("c")), listing);
    for f in &listing {
        assert_eq!(body(&d.join("a").join(f)), body(&d.join("c").join(f)), "{f:?}");
    }

    let header = std::fs::read_to_string(d.join("a/x/f001_c0002.csv")).unwrap();
    assert!(header.starts_with("# qus-map v1, rows=depth(cm), cols=freq(MHz), command=synth, config="));

    ok(qus(d, &["--config", "run.cfg", "--seed", "10", "--out", "s", "synth"]));
    assert_ne!(body(&d.join("a/x/f000_c0000.csv")), body(&d.join("s/x/f000_c0000.csv")));
}

#[test]
fn zero_noise_log_ratio_equals_forward_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", LAYERED);
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    let truth: Vec<GridFile> = ["a", "b", "n"].iter().map(|p| read_map(&d.join(format!("syn/truth_{p}.csv")))).collect();
    for c in 0..3 {
        let x = read_map(&d.join(format!("syn/x/f000_c{c:04}.csv")));
        let col = |g: &GridFile| (0..g.n_rows()).map(|i| g.get(i, c)).collect::<Vec<_>>();
        let params = ParamColumn::new(col(&truth[0]), col(&truth[1]), col(&truth[2])).unwrap();
        let grid = SpectralGrid::new(x.cols.clone(), x.rows.clone()).unwrap();
        let expected = forward_log_ratio(&params, &grid).unwrap();
        assert_eq!(x.data, expected.values());
    }
}

fn estimate_cfg(extra: &str) -> String {
    format!("{LAYERED}\n[estimate]\nmanifest = syn/manifest.cfg\n{extra}")
}

fn max_scaled_err(est: &GridFile, truth: &GridFile) -> f64 {
    est.data
        .iter()
        .zip(&truth.data)
        .map(|(e, t)| (e - t).abs() / t.abs().max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn noiseless_estimates_recover_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &estimate_cfg("methods = lsq, l2l2, admm_l1l2\ndata_mode = normal_equations\neps_abs = 1e-12\neps_rel = 1e-12\nmax_iter = 20000\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "est", "--strict", "estimate"]));
    for p in ["a", "b", "n", "alpha"] {
        let truth = read_map(&d.join(format!("syn/truth_{p}.csv")));
        let lsq = read_map(&d.join(format!("est/lsq/{p}_f000.csv")));
        assert_eq!((&lsq.rows, &lsq.cols), (&truth.rows, &truth.cols));
        let err = max_scaled_err(&lsq, &truth);
        assert!(err <= 1e-6, "{p}: {err:e}");

        // at λ = 0 the regularized solvers reproduce the least-squares maps
        let l2 = read_map(&d.join(format!("est/l2l2/{p}_f000.csv")));
        let admm = read_map(&d.join(format!("est/admm_l1l2/{p}_f000.csv")));
        let norm = l2.data.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let diff = l2.data.iter().zip(&admm.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-5, "{p}: {:e}", diff / norm);
    }
    let (cols, rows) = read_table(&d.join("est/admm_l1l2/report.csv"), "qus-report v1").unwrap();
    assert_eq!(cols[3], "status");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[3] == "ok"));
}

#[test]
fn bsc_map_is_recovered_relative_to_its_scale() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &estimate_cfg("methods = lsq\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "est", "estimate"]));
    let truth = read_map(&d.join("syn/truth_bsc.csv"));
    let est = read_map(&d.join("est/lsq/bsc_f000.csv"));
    for (e, t) in est.data.iter().zip(&truth.data) {
        assert!((e - t).abs() <= 1e-6 * t.abs(), "{e:e} vs {t:e}");
    }
}

#[test]
fn frames_can_be_averaged_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &format!("{LAYERED}sigma0 = 0.1\nframes = 3\n\n[estimate]\nmanifest = syn/manifest.cfg\nmethods = lsq\nframes = average\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "est", "estimate"]));
    assert!(d.join("est/lsq/a_f000.csv").exists());
    assert!(!d.join("est/lsq/a_f001.csv").exists());
}

#[test]
fn missing_inputs_are_named_with_exit_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = GridFile::from_freq_depth(&FreqDepthMap::filled(SpectralGrid::linspace((3.0, 10.0), 4, (0.5, 2.0), 3).unwrap(), 1.0));
    s.write(&d.join("s.csv"), MAP_KIND, PROV).unwrap();
    write(d, "run.cfg", "[estimate]\nsample = s.csv\nreference = nowhere/ref.csv\n");
    let o = qus(d, &["--config", "run.cfg", "estimate"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nowhere/ref.csv"), "{}", stderr(&o));

    let o = qus(d, &["--config", "absent.cfg", "estimate"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("absent.cfg"));
}

#[test]
fn malformed_files_report_line_and_column_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "x.csv", "# qus-map v1, rows=depth(cm), cols=freq(MHz)\ndepth(cm),3,5\n0.5,0.1,0.2\n1.0,0.3,x\n");
    write(d, "run.cfg", "[estimate]\nlog_ratio = x.csv\nmethods = lsq\n");
    let o = qus(d, &["--config", "run.cfg", "estimate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("x.csv:4:3"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "typo.cfg", "[synth]\nfreqs = 3, 10, 8\nsigma = 0.1\n");
    let o = qus(d, &["--config", "typo.cfg", "synth"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("typo.cfg:3") && stderr(&o).contains("sigma"), "{}", stderr(&o));

    write(d, "rho.cfg", "[estimate]\nrho = -1\nlog_ratio = none.csv\n");
    assert_eq!(code(&qus(d, &["--config", "rho.cfg", "estimate"])), 1);

    write(d, "method.cfg", "[estimate]\nmethods = lsq, magic\n");
    let o = qus(d, &["--config", "method.cfg", "estimate"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("method.cfg:2"));

    assert_eq!(code(&qus(d, &["frobnicate"])), 1);
    assert_eq!(code(&qus(d, &[])), 1);
    assert_eq!(code(&qus(d, &["--help"])), 0);
}

#[test]
fn strict_turns_nonconvergence_into_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &estimate_cfg("methods = admm_l1\nlambda = 1\nmax_iter = 2\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    let o = qus(d, &["--config", "run.cfg", "--out", "est", "--strict", "estimate"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    // outputs are still written for inspection
    let (_, rows) = read_table(&d.join("est/admm_l1/report.csv"), "qus-report v1").unwrap();
    assert!(rows.iter().all(|r| r[3] == "unconverged" && r[4] == "2"));
    ok(qus(d, &["--config", "run.cfg", "--out", "est", "estimate"]));
}

fn spectra_file(d: &Path, name: &str, f: impl Fn(usize, usize) -> f64) -> String {
    let grid = SpectralGrid::linspace((3.0, 10.0), 9, (0.5, 3.0), 6).unwrap();
    let m = FreqDepthMap::from_fn(grid, f);
    GridFile::from_freq_depth(&m).write(&d.join(name), MAP_KIND, PROV).unwrap();
    name.to_string()
}

fn weights_cfg(extra: &str) -> String {
    format!("[weights]\nsample = s.csv\nreference = r.csv\n{extra}")
}

#[test]
fn weights_of_identical_spectra_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bump = |l: usize, i: usize| 10.0 + 5.0 * (-((l as f64 - 4.0).powi(2)) / 4.0).exp() - 0.3 * i as f64;
    spectra_file(d, "s.csv", bump);
    spectra_file(d, "r.csv", bump);
    write(d, "run.cfg", &weights_cfg(""));
    ok(qus(d, &["--config", "run.cfg", "--out", "w", "weights"]));
    assert_eq!(body(&d.join("w/w_s_c0000.csv")), body(&d.join("w/w_r_c0000.csv")));
    let (cols, rows) = read_table(&d.join("w/bands.csv"), "qus-bands v1").unwrap();
    assert_eq!(cols[0], "column");
    assert_eq!(rows.len(), 12);
}

#[test]
fn reference_only_weights_copy_the_reference_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    spectra_file(d, "s.csv", |l, i| 20.0 + (l * i) as f64);
    spectra_file(d, "r.csv", |l, i| 30.0 - l as f64 + 0.5 * i as f64);
    write(d, "run.cfg", &weights_cfg("combine_mode = reference_only\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "w", "weights"]));
    assert_eq!(body(&d.join("w/w_d_raw_c0000.csv")), body(&d.join("w/w_r_c0000.csv")));
    assert_ne!(body(&d.join("w/w_s_c0000.csv")), body(&d.join("w/w_r_c0000.csv")));
}

#[test]
fn constant_spectra_give_unit_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    spectra_file(d, "s.csv", |_, _| 7.0);
    spectra_file(d, "r.csv", |_, _| 7.0);
    write(d, "run.cfg", &weights_cfg(""));
    ok(qus(d, &["--config", "run.cfg", "--out", "w", "weights"]));
    assert!(read_map(&d.join("w/w_d_c0000.csv")).data.iter().all(|&w| w == 1.0));
    let (_, rows) = read_table(&d.join("w/summary.csv"), "qus-weights v1").unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn weights_require_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &format!("{LAYERED}\n[weights]\nmanifest = syn/manifest.cfg\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    let o = qus(d, &["--config", "run.cfg", "weights"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("spectra"));
}

#[test]
fn weighted_estimation_from_synth_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &estimate_cfg("methods = lsq\nweighting = spectra\nfloor = 0.2\n").replace("layer = 2, 4", "spectra = true\nlayer = 2, 4"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "est", "estimate"]));
    let truth = read_map(&d.join("syn/truth_a.csv"));
    let est = read_map(&d.join("est/lsq/a_f000.csv"));
    assert!(max_scaled_err(&est, &truth) < 1e-6);
}

/// Estimates equal to the truth, copied under two method names.
fn truth_as_estimates(d: &Path, methods: &[&str]) {
    for m in methods {
        std::fs::create_dir_all(d.join(format!("est/{m}"))).unwrap();
        for (src, dst) in [("truth_alpha", "alpha"), ("truth_bsc", "bsc")] {
            std::fs::copy(d.join(format!("syn/{src}.csv")), d.join(format!("est/{m}/{dst}_f000.csv"))).unwrap();
        }
    }
}

const EVAL: &str = "
[evaluate]
manifest = syn/manifest.cfg
estimates = est
methods = lsq, admm_l1l2
roi = shallow_left, 0.5, 1.5, 0, 1
roi = shallow_right, 0.5, 1.5, 1, 2
roi = deep_left, 2.5, 4, 0, 1
roi = deep_right, 2.5, 4, 1, 2
";

#[test]
fn evaluating_the_truth_gives_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &format!("{LAYERED}{EVAL}"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    truth_as_estimates(d, &["lsq", "admm_l1l2"]);
    ok(qus(d, &["--config", "run.cfg", "--out", "ev", "evaluate"]));
    let (cols, rows) = read_table(&d.join("ev/metrics.csv"), "qus-metrics v1").unwrap();
    assert_eq!(cols, ["method", "roi", "parameter", "metric", "value"]);
    assert_eq!(rows.len(), 32);
    assert!(rows.iter().all(|r| r[4] == "0e0"), "{rows:?}");
    assert_eq!(rows[0][..4], ["lsq", "shallow_left", "alpha", "bias"]);
    assert_eq!(rows[31][..4], ["admm_l1l2", "deep_right", "bsc_db", "variance"]);

    ok(qus(d, &["--config", "run.cfg", "--out", "ev2", "evaluate"]));
    assert_eq!(std::fs::read(d.join("ev/metrics.csv")).unwrap(), std::fs::read(d.join("ev2/metrics.csv")).unwrap());
}

#[test]
fn evaluate_rejects_mismatched_maps_and_empty_rois() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &format!("{LAYERED}{EVAL}"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    truth_as_estimates(d, &["lsq", "admm_l1l2"]);
    let small = GridFile::new(DEPTH, "lateral(cm)", vec![0.5, 1.0], vec![0.0], vec![1.0, 1.0]);
    small.write(&d.join("est/lsq/alpha_f000.csv"), MAP_KIND, PROV).unwrap();
    assert_eq!(code(&qus(d, &["--config", "run.cfg", "--out", "ev", "evaluate"])), 2);

    write(d, "roi.cfg", &format!("{LAYERED}{EVAL}roi = outside, 9, 10, 0, 1\n"));
    let o = qus(d, &["--config", "roi.cfg", "--out", "ev", "evaluate"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("outside"));
}

fn sweep_csv(d: &Path) -> Vec<Vec<String>> {
    read_table(&d.join("sw/sweep.csv"), "qus-sweep v1").unwrap().1
}

#[test]
fn sweep_anchors_on_lsq_and_flattens_at_the_top_of_the_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let smooth = "[synth]\nfreqs = 3, 10, 12\ndepths = 0.5, 4, 20\nlaterals = 0, 1, 2\nphantom = layered\n\
                  layer = 0.5, 2, 0.5, 4e-6, 3.3\nlayer = 2, 4, 0.7, 5e-6, 3.5\nsigma0 = 0.05\nseed = 2\n";
    write(d, "run.cfg", &format!("{smooth}\n[sweep]\nmanifest = syn/manifest.cfg\ndata_mode = normal_equations\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "sw", "sweep"]));
    let rows = sweep_csv(d);
    assert_eq!(rows.len(), 10);
    assert_eq!((rows[0][0].as_str(), rows[0][1].as_str()), ("0e0", "lsq_anchor"));
    assert_eq!((rows[9][0].as_str(), rows[9][1].as_str()), ("1e8", "too_large"));
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn sweep_verdict_is_stable_at_a_good_weight() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", &format!("{LAYERED}sigma0 = 0.05\nseed = 4\n\n[sweep]\nmanifest = syn/manifest.cfg\nladder = 10\ndata_mode = normal_equations\n"));
    ok(qus(d, &["--config", "run.cfg", "--out", "syn", "synth"]));
    ok(qus(d, &["--config", "run.cfg", "--out", "sw", "sweep"]));
    assert_eq!(sweep_csv(d)[1][1], "ok");
    let (_, v) = read_table(&d.join("sw/verdict.csv"), "qus-verdict v1").unwrap();
    assert_eq!(v[0][0], "1e1");
    assert_eq!(v[0][3], "stable", "{v:?}");
}

#[test]
fn sweep_ladder_must_increase() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.cfg", "[sweep]\nladder = 1, 10, 5\nlog_ratio = x.csv\n");
    assert_eq!(code(&qus(d, &["--config", "run.cfg", "sweep"])), 1);
}

/// Speckle-like RF: Gaussian samples scaled by a depth-decaying envelope.
fn rf_file(d: &Path, name: &str, lines: usize, decay: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = 512;
    let data: Vec<f64> = (0..ns * lines)
        .map(|k| {
            let s = (k / lines) as f64;
            (rng.gen::<f64>() - 0.5) * (-decay * s).exp()
        })
        .collect();
    GridFile::new(
        "sample",
        "line",
        (0..ns).map(|s| s as f64).collect(),
        (0..lines).map(|l| l as f64).collect(),
        data,
    )
    .write(&d.join(name), RF_KIND, PROV)
    .unwrap();
}

#[test]
fn rf_frames_feed_estimation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    rf_file(d, "s.csv", 8, 2e-3, 1);
    rf_file(d, "r.csv", 8, 1e-3, 2);
    write(
        d,
        "run.cfg",
        "[estimate]\nrf_sample = s.csv\nrf_reference = r.csv\nsampling_rate = 40\nwindow_len = 64\n\
         lines_per_column = 4\nfreqs = 3, 10, 8\nmethods = lsq\n",
    );
    ok(qus(d, &["--config", "run.cfg", "--out", "est", "estimate"]));
    let a = read_map(&d.join("est/lsq/a_f000.csv"));
    assert_eq!(a.n_cols(), 2);
    assert_eq!(a.n_rows(), 15);
    assert!(a.data.iter().all(|v| v.is_finite()));
}

#[test]
fn spectra_and_log_ratio_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    spectra_file(d, "s.csv", |l, i| 5.0 + l as f64 * 0.5 + i as f64);
    spectra_file(d, "r.csv", |l, _| 4.0 + l as f64);
    let s = read_map(&d.join("s.csv")).to_freq_depth(Path::new("s")).unwrap();
    let r = read_map(&d.join("r.csv")).to_freq_depth(Path::new("r")).unwrap();
    let x = qus_core::spectra::rpm_log_ratio(&s, &r).unwrap();
    GridFile::from_freq_depth(&x).write(&d.join("x.csv"), MAP_KIND, PROV).unwrap();
    write(d, "a.cfg", "[estimate]\nsample = s.csv\nreference = r.csv\nmethods = lsq\n");
    write(d, "b.cfg", "[estimate]\nlog_ratio = x.csv\nmethods = lsq\n");
    ok(qus(d, &["--config", "a.cfg", "--out", "ea", "estimate"]));
    ok(qus(d, &["--config", "b.cfg", "--out", "eb", "estimate"]));
    for p in ["a", "b", "n"] {
        assert_eq!(
            body(&d.join(format!("ea/lsq/{p}_f000.csv"))),
            body(&d.join(format!("eb/lsq/{p}_f000.csv")))
        );
    }
    assert_eq!(read_map(&d.join("x.csv")).col_label, FREQ);

    write(d, "both.cfg", "[estimate]\nsample = s.csv\nreference = r.csv\nlog_ratio = x.csv\n");
    assert_eq!(code(&qus(d, &["--config", "both.cfg", "estimate"])), 1);
}
