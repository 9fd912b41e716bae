//! Acceptance suite. Every criterion prints one `ACCEPTANCE Cn PASS|FAIL`
//! line, followed by indented detail lines, and then asserts.
//!
//! Run with `cargo test -p freezenet --test acceptance -- --nocapture
//! --test-threads=1` to see the lines in order.

use std::path::PathBuf;
use std::time::Instant;

use freezenet::data::{
    decode_trialset, encode_checkpoint, encode_trialset, export_csv_trials, generate_synthetic, import_csv_trials,
    load_checkpoint, load_trialset, save_trialset, SynthConfig,
};
use freezenet::experiment::{
    build_model, emit_report, emit_sweep, median_window, prepare_data, run_with_data, smooth_curve, threshold_sweep,
    CheckpointPolicy, ExperimentConfig, MetricsReport, RunOptions, RunOutcome, DEFAULT_THRESHOLDS,
};
use freezenet::layers::{
    activation_backward, activation_forward, conv1d_backward, conv1d_forward, dense_backward, dense_forward,
    make_mask, ActivationKind, Batch, ClassifierMode, ClassifierSpec, Conv1d, Dense, FrozenDense, LayerSpec,
    MaskMode, Model, mean_pool_backward, mean_pool_forward,
};
use freezenet::loss::{softmax_cross_entropy_with, Reduction};
use freezenet::optim::Optimizer;
use freezenet::preprocess::{
    default_class_names, design_bandpass_fir, epoch, mean_covariance, normalize_set, Cue, Trial, TrialSet,
};
use freezenet::tensor::{Matrix, Rng};
use serde_json::json;

const H: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-6;
const INSTANCES: usize = 20;

struct Verdict {
    id: &'static str,
    title: &'static str,
    checks: Vec<(bool, String)>,
    started: Instant,
    budget_s: f64,
}

impl Verdict {
    fn new(id: &'static str, title: &'static str, budget_s: f64) -> Self {
        Self { id, title, checks: Vec::new(), started: Instant::now(), budget_s }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        self.checks.push((ok, detail.into()));
    }

    fn finish(mut self) {
        let secs = self.started.elapsed().as_secs_f64();
        self.check(secs < self.budget_s, format!("runtime {secs:.1} s (budget {} s)", self.budget_s));
        let ok = self.checks.iter().all(|(ok, _)| *ok);
        println!("ACCEPTANCE {} {} {}", self.id, if ok { "PASS" } else { "FAIL" }, self.title);
        for (ok, d) in &self.checks {
            println!("    [{}] {d}", if *ok { "ok" } else { "FAILED" });
        }
        let failed: Vec<&str> = self.checks.iter().filter(|(ok, _)| !ok).map(|(_, d)| d.as_str()).collect();
        assert!(failed.is_empty(), "{} failed: {failed:?}", self.id);
    }
}

fn config(v: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&v.to_string()).expect("valid config")
}

/// Parameter bits in layer order; names are left out because a masked
/// classifier is named differently from a plain one.
fn params_bits(model: &Model) -> Vec<Vec<u64>> {
    model.params().into_iter().map(|(_, m)| m.as_slice().iter().map(|v| v.to_bits()).collect()).collect()
}

fn curve_bits(report: &MetricsReport) -> Vec<(u64, u64)> {
    report.per_epoch.iter().map(|e| (e.train_loss.to_bits(), e.test_accuracy.to_bits())).collect()
}

// ---------------------------------------------------------------------------
// C1: finite-difference gradient oracles

/// Largest absolute deviation relative to the larger of the two gradients'
/// magnitudes.
fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff = analytic.iter().zip(numeric).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` with respect to every entry of `values`.
fn central_diff(values: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut v = values.to_vec();
    (0..v.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + H;
            let plus = f(&v);
            v[i] = orig - H;
            let minus = f(&v);
            v[i] = orig;
            (plus - minus) / (2.0 * H)
        })
        .collect()
}

fn like(m: &Matrix, vals: &[f64]) -> Matrix {
    Matrix::from_vec(m.rows(), m.cols(), vals.to_vec()).unwrap()
}

fn uniform(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    rng.uniform_matrix(rows, cols).map(|u| lo + (hi - lo) * u)
}

fn between(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    lo + rng.next_below((hi - lo + 1) as u64) as usize
}

fn dot(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

fn dot_seq(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn flatten(ms: &[Matrix]) -> Vec<f64> {
    ms.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
}

fn unflatten(shape_of: &[Matrix], vals: &[f64]) -> Vec<Matrix> {
    let mut off = 0;
    shape_of
        .iter()
        .map(|m| {
            let out = like(m, &vals[off..off + m.len()]);
            off += m.len();
            out
        })
        .collect()
}

fn masked(v: &[f64], keep: &Matrix) -> Vec<f64> {
    v.iter().zip(keep.as_slice()).map(|(g, k)| if *k == 0.0 { 0.0 } else { *g }).collect()
}

fn check_dense(rng: &mut Rng) -> f64 {
    let (n, i, o) = (between(rng, 1, 4), between(rng, 2, 7), between(rng, 2, 5));
    let x = uniform(rng, n, i, -1.0, 1.0);
    let w = uniform(rng, o, i, -1.0, 1.0);
    let b: Vec<f64> = (0..o).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let g = uniform(rng, n, o, -1.0, 1.0);
    let a = dense_backward(&g, &x, &w).unwrap();
    let fw = central_diff(w.as_slice(), |v| dot(&g, &dense_forward(&x, &like(&w, v), &b).unwrap()));
    let fb = central_diff(&b, |v| dot(&g, &dense_forward(&x, &w, v).unwrap()));
    let fx = central_diff(x.as_slice(), |v| dot(&g, &dense_forward(&like(&x, v), &w, &b).unwrap()));
    rel_err(a.grad_w.as_slice(), &fw).max(rel_err(&a.grad_b, &fb)).max(rel_err(a.grad_x.as_slice(), &fx))
}

fn check_frozen_dense(rng: &mut Rng, mode: MaskMode) -> f64 {
    let (n, i, o) = (between(rng, 1, 4), between(rng, 2, 7), between(rng, 2, 5));
    let t = rng.uniform_range(0.2, 0.8);
    let x = uniform(rng, n, i, -1.0, 1.0);
    let dense = Dense::new(uniform(rng, o, i, -1.0, 1.0), (0..o).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
    let mask = make_mask(o, i, t, mode, rng.next_u64()).unwrap();
    let mut layer = FrozenDense::new(dense, mask).unwrap();
    let g = uniform(rng, n, o, -1.0, 1.0);
    layer.forward(x.clone(), true).unwrap();
    let gx = layer.backward(&g).unwrap();
    let (w, b) = (layer.dense.weight.clone(), layer.dense.bias.clone());
    let keep = layer.mask.keep.clone();
    let fw = central_diff(w.as_slice(), |v| dot(&g, &dense_forward(&x, &like(&w, v), b.as_slice()).unwrap()));
    let fb = central_diff(b.as_slice(), |v| dot(&g, &dense_forward(&x, &w, v).unwrap()));
    let fx = central_diff(x.as_slice(), |v| dot(&g, &dense_forward(&like(&x, v), &w, b.as_slice()).unwrap()));
    rel_err(layer.dense.grad_weight.as_slice(), &masked(&fw, &keep))
        .max(rel_err(layer.dense.grad_bias.as_slice(), &fb))
        .max(rel_err(gx.as_slice(), &fx))
}

fn check_conv(rng: &mut Rng, pointwise: bool) -> f64 {
    let (cin, cout) = (between(rng, 1, 3), between(rng, 1, 3));
    let (k, s) = if pointwise { (1, 1) } else { (between(rng, 1, 5), between(rng, 1, 3)) };
    let len = k + s * between(rng, 2, 6);
    let batch = between(rng, 1, 2);
    let kernels = uniform(rng, cout, cin * k, -1.0, 1.0);
    let bias: Vec<f64> = (0..cout).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let layer = Conv1d::new(kernels.clone(), k, s, bias.clone()).unwrap();
    let x: Vec<Matrix> = (0..batch).map(|_| uniform(rng, cin, len, -1.0, 1.0)).collect();
    let out_len = (len - k) / s + 1;
    let g: Vec<Matrix> = (0..batch).map(|_| uniform(rng, cout, out_len, -1.0, 1.0)).collect();
    let a = conv1d_backward(&g, &x, &layer, true).unwrap();
    let obj = |kern: &Matrix, b: &[f64], xs: &[Matrix]| {
        let l = Conv1d::new(kern.clone(), k, s, b.to_vec()).unwrap();
        dot_seq(&g, &conv1d_forward(xs, &l).unwrap())
    };
    let fk = central_diff(kernels.as_slice(), |v| obj(&like(&kernels, v), &bias, &x));
    let fb = central_diff(&bias, |v| obj(&kernels, v, &x));
    let fx = central_diff(&flatten(&x), |v| obj(&kernels, &bias, &unflatten(&x, v)));
    rel_err(a.grad_kernels.as_slice(), &fk)
        .max(rel_err(&a.grad_bias, &fb))
        .max(rel_err(&flatten(&a.grad_x.unwrap()), &fx))
}

fn check_activation(rng: &mut Rng, kind: ActivationKind) -> f64 {
    let (r, c) = (between(rng, 1, 4), between(rng, 2, 8));
    let x = match kind {
        ActivationKind::Log => uniform(rng, r, c, 0.05, 2.0),
        // keep central differences off the kinks at 0
        _ => uniform(rng, r, c, -2.0, 2.0).map(|v| if v.abs() < 1e-3 { 0.5 } else { v }),
    };
    let g = uniform(rng, r, c, -1.0, 1.0);
    let a = activation_backward(&g, &x, kind).unwrap();
    let fx = central_diff(x.as_slice(), |v| dot(&g, &activation_forward(&like(&x, v), kind)));
    rel_err(a.as_slice(), &fx)
}

fn check_mean_pool(rng: &mut Rng) -> f64 {
    let (c, k, s) = (between(rng, 1, 3), between(rng, 1, 5), between(rng, 1, 3));
    let len = k + s * between(rng, 1, 6);
    let x = uniform(rng, c, len, -1.0, 1.0);
    let out_len = (len - k) / s + 1;
    let g = uniform(rng, c, out_len, -1.0, 1.0);
    let a = mean_pool_backward(&g, len, k, s).unwrap();
    let fx = central_diff(x.as_slice(), |v| dot(&g, &mean_pool_forward(&like(&x, v), k, s).unwrap()));
    rel_err(a.as_slice(), &fx)
}

fn check_loss(rng: &mut Rng, reduction: Reduction) -> f64 {
    let (n, c) = (between(rng, 1, 5), between(rng, 2, 6));
    let logits = uniform(rng, n, c, -3.0, 3.0);
    let targets: Vec<usize> = (0..n).map(|_| rng.next_below(c as u64) as usize).collect();
    let a = softmax_cross_entropy_with(&logits, &targets, reduction).unwrap();
    let f = central_diff(logits.as_slice(), |v| softmax_cross_entropy_with(&like(&logits, v), &targets, reduction).unwrap().loss);
    rel_err(a.grad_logits.as_slice(), &f)
}

/// Whole-network check; it is the one that exercises dropout and flatten
/// backward passes, through the gradients of the layers below them. Only
/// smooth activations follow the dense layer, and inputs have enough
/// amplitude to keep the log away from tiny pooled powers; otherwise
/// central differences straddle curvature kinks.
fn check_network(rng: &mut Rng) -> f64 {
    let specs = vec![
        LayerSpec::Conv1d { out_channels: 2, kernel_len: 3, stride: between(rng, 1, 2) },
        LayerSpec::ChannelMix { out_channels: 2 },
        LayerSpec::Activation { function: ActivationKind::Square },
        LayerSpec::MeanPool { kernel: 3, stride: 2 },
        LayerSpec::Activation { function: ActivationKind::Log },
        LayerSpec::Dropout { p: 0.5 },
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 3 },
        LayerSpec::Activation { function: ActivationKind::Square },
    ];
    let len = between(rng, 12, 18);
    let cls = ClassifierSpec { mode: ClassifierMode::Frozen, threshold_t: 0.3 };
    let base = Model::build(&specs, &cls, 2, len, 3, rng.next_u64()).unwrap();
    let xs: Vec<Matrix> = (0..3).map(|_| uniform(rng, 2, len, -4.0, 4.0)).collect();
    let targets: Vec<usize> = (0..3).map(|_| rng.next_below(3) as usize).collect();
    let loss_of = |m: &mut Model| {
        let logits = m.forward(Batch::Seq(xs.clone()), true).unwrap();
        softmax_cross_entropy_with(&logits, &targets, Reduction::Mean).unwrap()
    };
    let mut m = base.clone();
    let r = loss_of(&mut m);
    m.backward(&r.grad_logits).unwrap();
    let grads: Vec<(Vec<f64>, Option<Matrix>)> =
        m.params_mut().iter().map(|p| (p.grad.as_slice().to_vec(), p.keep.cloned())).collect();
    let values: Vec<Vec<f64>> = base.params().iter().map(|(_, v)| v.as_slice().to_vec()).collect();
    let mut worst = 0.0f64;
    for (pi, (analytic, keep)) in grads.iter().enumerate() {
        let numeric = central_diff(&values[pi], |v| {
            let mut m2 = base.clone();
            m2.params_mut()[pi].value.as_mut_slice().copy_from_slice(v);
            loss_of(&mut m2).loss
        });
        let numeric = match keep {
            Some(k) => masked(&numeric, k),
            None => numeric,
        };
        worst = worst.max(rel_err(analytic, &numeric));
    }
    worst
}

#[test]
fn c1_gradient_oracles() {
    let mut v = Verdict::new("C1", "finite-difference gradient oracles (h=1e-5, rel err < 1e-6)", 30.0);
    let mut rng = Rng::new(0xC1);
    type Case = (&'static str, fn(&mut Rng) -> f64);
    let cases: [Case; 14] = [
        ("dense", check_dense),
        ("frozen_dense/frozen", |r| check_frozen_dense(r, MaskMode::Frozen)),
        ("frozen_dense/sparse", |r| check_frozen_dense(r, MaskMode::Sparse)),
        ("conv1d", |r| check_conv(r, false)),
        ("channel_mix", |r| check_conv(r, true)),
        ("activation/relu", |r| check_activation(r, ActivationKind::Relu)),
        ("activation/elu", |r| check_activation(r, ActivationKind::Elu)),
        ("activation/square", |r| check_activation(r, ActivationKind::Square)),
        ("activation/log", |r| check_activation(r, ActivationKind::Log)),
        ("mean_pool", check_mean_pool),
        ("network (dropout, flatten, all layers)", check_network),
        ("loss/sum", |r| check_loss(r, Reduction::Sum)),
        ("loss/mean", |r| check_loss(r, Reduction::Mean)),
        ("loss/mean (second draw)", |r| check_loss(r, Reduction::Mean)),
    ];
    for (name, f) in cases {
        let worst = (0..INSTANCES).map(|_| f(&mut rng)).fold(0.0f64, f64::max);
        v.check(worst < GRAD_TOL, format!("{name}: {INSTANCES} instances, worst rel err {worst:.2e}"));
    }
    v.finish();
}

// ---------------------------------------------------------------------------
// C2: mask semantics over 200 optimizer steps

fn masked_training(mode: ClassifierMode, v: &mut Verdict) {
    let t = 0.5;
    let cfg = config(json!({"classifier": {"mode": mode, "threshold_t": t}}));
    let (train, _) = prepare_data(&cfg, None).unwrap();
    let mut model = build_model(&cfg, &train).unwrap();
    let w0 = model.classifier_weight().clone();
    let keep = model.classifier_mask().unwrap().keep.clone();
    let mut opt = Optimizer::new(&cfg.optimizer, &model.params_mut());
    let mut shuffle = Rng::substream(cfg.seed, "shuffle");
    let (mut steps, mut violations) = (0usize, 0usize);
    while steps < 200 {
        let mut order: Vec<usize> = (0..train.len()).collect();
        shuffle.shuffle(&mut order);
        for idx in order.chunks(cfg.batch_size) {
            if steps == 200 {
                break;
            }
            let x = Batch::Seq(idx.iter().map(|&i| train.trials[i].data.clone()).collect());
            let targets: Vec<usize> = idx.iter().map(|&i| train.trials[i].label).collect();
            let logits = model.forward(x, true).unwrap();
            let r = softmax_cross_entropy_with(&logits, &targets, cfg.loss_reduction).unwrap();
            model.backward(&r.grad_logits).unwrap();
            opt.step(&mut model.params_mut()).unwrap();
            steps += 1;
            let w = model.classifier_weight();
            for (j, &k) in keep.as_slice().iter().enumerate() {
                if k != 0.0 {
                    continue;
                }
                let ok = match mode {
                    ClassifierMode::Sparse => w.as_slice()[j] == 0.0,
                    _ => w.as_slice()[j].to_bits() == w0.as_slice()[j].to_bits(),
                };
                violations += usize::from(!ok);
            }
        }
    }
    let w = model.classifier_weight();
    let n = keep.len();
    let frozen = keep.as_slice().iter().filter(|&&k| k == 0.0).count();
    let trainable_changed = keep
        .as_slice()
        .iter()
        .zip(w.as_slice().iter().zip(w0.as_slice()))
        .filter(|(k, (a, b))| **k != 0.0 && a.to_bits() != b.to_bits())
        .count();
    let fraction = frozen as f64 / n as f64;
    let sigma = (t * (1.0 - t) / n as f64).sqrt();
    let name = format!("{mode:?}").to_lowercase();
    let pinned = if mode == ClassifierMode::Sparse { "exactly 0" } else { "bit-identical to snapshot" };
    v.check(steps == 200 && violations == 0, format!("{name}: {frozen} masked entries {pinned} after each of {steps} steps"));
    v.check(
        trainable_changed == n - frozen,
        format!("{name}: {trainable_changed} of {} trainable entries changed", n - frozen),
    );
    v.check(
        (fraction - t).abs() <= 5.0 * sigma,
        format!("{name}: frozen fraction {fraction:.4} vs t={t}, 5 sigma = {:.4} (n={n})", 5.0 * sigma),
    );
}

#[test]
fn c2_mask_semantics() {
    let mut v = Verdict::new("C2", "frozen/sparse mask semantics over 200 steps at t=0.5", 60.0);
    masked_training(ClassifierMode::Frozen, &mut v);
    masked_training(ClassifierMode::Sparse, &mut v);
    v.finish();
}

// ---------------------------------------------------------------------------
// C3: t = 0 equivalence

fn run(cfg: &ExperimentConfig, train: &TrialSet, test: &TrialSet) -> RunOutcome {
    run_with_data(cfg, train, test, &RunOptions::default()).unwrap()
}

/// Report fields that describe the trajectory rather than the run's
/// identity (hash, wall clock) or its mask bookkeeping.
fn trajectory(r: &MetricsReport) -> serde_json::Value {
    let mut v = serde_json::to_value(r.without_run_identity()).unwrap();
    v.as_object_mut().unwrap().remove("mask");
    v
}

#[test]
fn c3_zero_threshold_equivalence() {
    let mut v = Verdict::new("C3", "t=0 masked runs reproduce the plain dense baseline", 120.0);
    let base = json!({"epochs": 40, "metrics": {"median_window": [21, 40], "smooth_width": 10}});
    let plain = config(base.clone());
    let (train, test) = prepare_data(&plain, None).unwrap();
    let reference = run(&plain, &train, &test);
    let rref = reference.report.as_ref().unwrap();
    for mode in [ClassifierMode::Frozen, ClassifierMode::Sparse] {
        let mut c = plain.clone();
        c.classifier = ClassifierSpec { mode, threshold_t: 0.0 };
        let out = run(&c, &train, &test);
        let r = out.report.as_ref().unwrap();
        let name = format!("{mode:?}").to_lowercase();
        v.check(curve_bits(r) == curve_bits(rref), format!("{name}: per-epoch loss and accuracy bit-identical ({} epochs)", r.per_epoch.len()));
        v.check(
            serde_json::to_vec(&trajectory(r)).unwrap() == serde_json::to_vec(&trajectory(rref)).unwrap(),
            format!("{name}: report bytes identical outside hash, runtime and mask fields"),
        );
        v.check(r.mask.as_ref().is_some_and(|m| m.frozen_count == 0), format!("{name}: mask freezes 0 entries"));
        v.check(params_bits(&out.model) == params_bits(&reference.model), format!("{name}: final weights bit-identical"));
    }
    v.finish();
}

// ---------------------------------------------------------------------------
// C4: t = 1 degenerate case

#[test]
fn c4_all_frozen_classifier() {
    let mut v = Verdict::new("C4", "t=1 classifier-only model", 60.0);
    let base = json!({
        "epochs": 800,
        "model": {"preset": "linear"},
        "classifier": {"mode": "frozen", "threshold_t": 1.0},
        "data": {"kind": "synthetic", "n_channels": 8},
        "metrics": {"median_window": [400, 800], "smooth_width": 20}
    });
    let cfg = config(base.clone());
    let (train, test) = prepare_data(&cfg, None).unwrap();
    let n_classes = test.n_classes();
    let balanced = test.class_counts().iter().all(|&c| c * n_classes == test.len());
    v.check(balanced, format!("test split balanced: {:?}", test.class_counts()));

    let initial = build_model(&cfg, &train).unwrap();
    v.check(initial.classifier_bias().max_abs() == 0.0, "bias zero-initialized");
    let out = run(&cfg, &train, &test);
    let report = out.report.as_ref().unwrap();
    let w_same = out.model.classifier_weight().as_slice().iter().zip(initial.classifier_weight().as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    v.check(
        report.per_epoch.len() == 800 && w_same,
        "frozen: W bit-identical to initialization after 800 epochs (checked after every step by the runner)",
    );
    v.check(out.model.classifier_bias().max_abs() > 0.0, "frozen: bias learned");
    let chance = 1.0 / n_classes as f64;
    let acc1 = report.per_epoch[0].test_accuracy;
    v.check(acc1 == chance, format!("frozen: epoch-1 test accuracy {acc1} == 1/C = {chance}"));

    // with W pinned at zero all logits equal the bias, so every trial gets
    // the same class
    let mut sparse = cfg.clone();
    sparse.classifier.mode = ClassifierMode::Sparse;
    sparse.epochs = 5;
    sparse.metrics.median_window = None;
    sparse.metrics.smooth_width = 1;
    let out = run(&sparse, &train, &test);
    let acc1 = out.per_epoch[0].test_accuracy;
    v.check(
        out.model.classifier_weight().max_abs() == 0.0 && acc1 == chance,
        format!("supplementary, sparse: W stays 0 and epoch-1 test accuracy {acc1} == 1/C"),
    );
    v.finish();
}

// ---------------------------------------------------------------------------
// C5: preprocessing fidelity

#[test]
fn c5_preprocessing() {
    let mut v = Verdict::new("C5", "preprocessing fidelity", 30.0);
    let f = design_bandpass_fir(200, 4.0, 38.0, 250.0).unwrap();
    let center = f.gain_at((4.0f64 * 38.0).sqrt());
    v.check((0.99..=1.01).contains(&center), format!("FIR [4,38] Hz at 250 Hz: band-center gain {center:.6}"));
    for freq in [0.5, 120.0] {
        let g = f.gain_at(freq);
        v.check(g < 0.05, format!("gain at {freq} Hz: {g:.2e}"));
    }

    let (train, test) = generate_synthetic(&SynthConfig::default()).unwrap();
    let normalized = normalize_set(&train).unwrap();
    let peaks_exact = normalized.trials.iter().all(|t| t.data.max_abs() == 1.0);
    v.check(peaks_exact, format!("{} normalized trials have max-abs exactly 1", normalized.len()));

    let cfg = ExperimentConfig::default();
    let (aligned, _) = prepare_data(&cfg, None).unwrap();
    let refs: Vec<&Trial> = aligned.trials.iter().collect();
    let dev = mean_covariance(&refs).unwrap().sub(&Matrix::identity(aligned.channel_count)).unwrap().frobenius_norm();
    v.check(dev < 1e-6, format!("aligned training set: ||mean covariance - I||_F = {dev:.2e}"));
    drop(test);

    let fs = 250.0;
    let continuous = Matrix::zeros(2, 4000);
    let cues = [Cue { sample: 500, label: 0 }, Cue { sample: 2000, label: 1 }];
    for (window, want) in [([2.0, 6.0], 1000), ([2.0, 5.0], 750), ([1.5, 6.0], 1125)] {
        let set = epoch(&continuous, &cues, window, fs, default_class_names(2)).unwrap();
        v.check(set.samples() == want, format!("epoch window {window:?} s at 250 Hz: {} samples", set.samples()));
    }
    v.finish();
}

// ---------------------------------------------------------------------------
// C6: desk-scale directional check

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const DESK_EPOCHS: usize = 150;

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

#[test]
fn c6_desk_scale_direction() {
    let mut v = Verdict::new("C6", "Weight-Freezing does not hurt on the synthetic task; sweep produced", 1200.0);
    let wf_ts = [0.2, 0.3, 0.4];
    let mut baseline = Vec::new();
    let mut wf: Vec<Vec<f64>> = vec![Vec::new(); wf_ts.len()];
    for seed in SEEDS {
        let cfg = config(json!({
            "epochs": DESK_EPOCHS,
            "seed": seed,
            "data": {"kind": "synthetic", "seed": seed, "snr_db": -6.0, "trials_per_class_train": 72},
            "metrics": {"median_window": [DESK_EPOCHS / 2 + 1, DESK_EPOCHS], "smooth_width": 10}
        }));
        let (train, test) = prepare_data(&cfg, None).unwrap();
        let b = run(&cfg, &train, &test).report.unwrap().max_test_accuracy;
        baseline.push(b);
        let ts: Vec<f64> = if seed == SEEDS[0] { DEFAULT_THRESHOLDS.to_vec() } else { wf_ts.to_vec() };
        let table = threshold_sweep(&cfg, &train, &test, &ts, 1).unwrap();
        for (k, t) in wf_ts.iter().enumerate() {
            let row = table.rows.iter().find(|r| r.threshold_t == *t).unwrap();
            wf[k].push(row.max_test_accuracy.expect("cell ran"));
        }
        let cells: Vec<String> =
            table.rows.iter().map(|r| format!("t={}:{:.4}", r.threshold_t, r.max_test_accuracy.unwrap_or(f64::NAN))).collect();
        println!("    seed {seed}: baseline {b:.4}, {}", cells.join(" "));
        if seed == SEEDS[0] {
            let dir = out_dir("sweep");
            let files = emit_sweep(&table, &dir).unwrap();
            let complete = table.rows.len() == DEFAULT_THRESHOLDS.len() && table.rows.iter().all(|r| r.error.is_none());
            let svg = std::fs::read_to_string(dir.join("sweep.svg")).unwrap();
            v.check(
                complete && files.len() == 3 && svg.contains("<polyline"),
                format!("sweep over {:?} written to {}", DEFAULT_THRESHOLDS, dir.display()),
            );
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let base_mean = mean(&baseline);
    let (best_t, best_mean) =
        wf_ts.iter().zip(&wf).map(|(t, xs)| (*t, mean(xs))).fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    v.check(
        best_mean >= base_mean - 0.01,
        format!(
            "mean max test accuracy over {} seeds: baseline {base_mean:.4}, best WF t={best_t} {best_mean:.4} (need >= baseline - 0.01)",
            SEEDS.len()
        ),
    );
    v.finish();
}

// ---------------------------------------------------------------------------
// C7: determinism and persistence

fn small_config() -> ExperimentConfig {
    config(json!({
        "epochs": 20,
        "classifier": {"mode": "frozen", "threshold_t": 0.3},
        "data": {"kind": "synthetic", "n_channels": 6, "trials_per_class_train": 16, "trials_per_class_test": 8},
        "metrics": {"median_window": [11, 20], "smooth_width": 5}
    }))
}

#[test]
fn c7_determinism_and_persistence() {
    let mut v = Verdict::new("C7", "determinism, checkpoint resume, file round trips", 300.0);
    let cfg = small_config();
    let (train, test) = prepare_data(&cfg, None).unwrap();

    let a = run(&cfg, &train, &test);
    let b = run(&cfg, &train, &test);
    let (da, db) = (out_dir("determinism/a"), out_dir("determinism/b"));
    emit_report(a.report.as_ref().unwrap(), &da).unwrap();
    emit_report(b.report.as_ref().unwrap(), &db).unwrap();
    let read = |d: &PathBuf, f: &str| std::fs::read(d.join(f)).unwrap();
    let strip = |bytes: Vec<u8>| {
        let mut j: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        j.as_object_mut().unwrap().remove("runtime_seconds");
        j
    };
    v.check(
        read(&da, "metrics.csv") == read(&db, "metrics.csv") && read(&da, "accuracy.svg") == read(&db, "accuracy.svg"),
        "repeated run: metrics.csv and accuracy.svg byte-identical",
    );
    v.check(strip(read(&da, "summary.json")) == strip(read(&db, "summary.json")), "repeated run: summary.json identical except runtime_seconds");
    v.check(encode_checkpoint(&a.checkpoint) == encode_checkpoint(&b.checkpoint), "repeated run: final state byte-identical");

    let ckpt_path = out_dir("resume").join("half.frzckp");
    std::fs::create_dir_all(ckpt_path.parent().unwrap()).unwrap();
    let first = RunOptions {
        checkpoint: Some(CheckpointPolicy { path: ckpt_path.clone(), every: 5 }),
        stop_after: Some(10),
        ..RunOptions::default()
    };
    let half = run_with_data(&cfg, &train, &test, &first).unwrap();
    let resumed = run_with_data(&cfg, &train, &test, &RunOptions::resume_from(&ckpt_path).unwrap()).unwrap();
    let rr = resumed.report.as_ref().unwrap();
    v.check(half.report.is_none() && load_checkpoint(&ckpt_path).unwrap().epoch == 10, "interrupted after epoch 10 with checkpoint");
    v.check(
        curve_bits(rr) == curve_bits(a.report.as_ref().unwrap())
            && params_bits(&resumed.model) == params_bits(&a.model)
            && encode_checkpoint(&resumed.checkpoint) == encode_checkpoint(&a.checkpoint),
        "resume 10 -> 20: curves, weights, optimizer and RNG state bit-identical to uninterrupted run",
    );

    let (raw, _) = generate_synthetic(&SynthConfig { n_channels: 3, trials_per_class_train: 5, ..SynthConfig::default() }).unwrap();
    let bytes = encode_trialset(&raw).unwrap();
    let back = decode_trialset(&bytes).unwrap();
    let frz = out_dir("roundtrip").join("set.frz");
    std::fs::create_dir_all(frz.parent().unwrap()).unwrap();
    save_trialset(&raw, &frz).unwrap();
    v.check(
        back == raw && encode_trialset(&back).unwrap() == bytes && load_trialset(&frz).unwrap() == raw,
        format!("trial file round trip byte-exact ({} bytes)", bytes.len()),
    );

    let dir = out_dir("roundtrip");
    let (d1, l1, d2, l2) = (dir.join("a.csv"), dir.join("a_labels.csv"), dir.join("b.csv"), dir.join("b_labels.csv"));
    export_csv_trials(&raw, &d1, &l1).unwrap();
    let imported = import_csv_trials(&d1, &l1, raw.channel_count, raw.fs).unwrap();
    export_csv_trials(&imported, &d2, &l2).unwrap();
    let same_values = imported.trials.iter().zip(&raw.trials).all(|(x, y)| {
        x.label == y.label && x.data.as_slice().iter().zip(y.data.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits())
    });
    v.check(
        same_values && std::fs::read(&d1).unwrap() == std::fs::read(&d2).unwrap() && std::fs::read(&l1).unwrap() == std::fs::read(&l2).unwrap(),
        "CSV export -> import -> export byte-exact, values bit-identical",
    );
    v.finish();
}

// ---------------------------------------------------------------------------
// C8: metrics arithmetic

#[test]
fn c8_metrics_arithmetic() {
    let mut v = Verdict::new("C8", "smooth_curve and median_window against brute-force oracles", 5.0);
    let mut rng = Rng::new(0xC8);
    let (mut worst_smooth, mut worst_median) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let len = between(&mut rng, 2, 300);
        let series: Vec<f64> = (0..len).map(|_| rng.next_uniform()).collect();
        let width = between(&mut rng, 1, len);
        let got = smooth_curve(&series, width).unwrap();
        assert_eq!(got.len(), len - width + 1);
        for (i, g) in got.iter().enumerate() {
            let want = series[i..i + width].iter().sum::<f64>() / width as f64;
            worst_smooth = worst_smooth.max((g - want).abs());
        }
        let lo = between(&mut rng, 1, len - 1);
        let hi = between(&mut rng, lo + 1, len);
        let mut w = series[lo - 1..hi].to_vec();
        w.sort_by(f64::total_cmp);
        let m = w.len();
        let want = if m % 2 == 1 { w[m / 2] } else { (w[m / 2 - 1] + w[m / 2]) / 2.0 };
        worst_median = worst_median.max((median_window(&series, lo, hi).unwrap() - want).abs());
    }
    v.check(worst_smooth < 1e-12, format!("smooth_curve on 100 random series: max abs err {worst_smooth:.2e}"));
    v.check(worst_median < 1e-12, format!("median_window on 100 random series: max abs err {worst_median:.2e}"));
    v.finish();
}
