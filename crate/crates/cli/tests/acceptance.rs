//! Acceptance suite. Every numeric kernel is checked against an
//! independent reference implemented here (brute-force scans, pair
//! enumeration, subgradient-plus-grid minimization), and the binary is
//! driven end to end on a synthetic corpus whose reports must separate
//! the classes and reproduce byte for byte.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use renoscan_core::cnn::{conv2d, ConvKernel, Layer, Network, NetworkSpec, Shape, Tensor};
use renoscan_core::cnn::random_archive;
use renoscan_core::eval::{auc, cross_validate, CvConfig, Dataset, Sample, Side};
use renoscan_core::featuremaps::{squared_distance_map, EdgeMap};
use renoscan_core::imaging::BinaryMask;
use renoscan_core::normalize::fit_ellipse;
use renoscan_core::seeding::rng_for;
use renoscan_core::svm::{train, Scaling, TrainConfig, TrainingSet};

fn check_budget(started: Instant, budget: Duration, what: &str) {
    let took = started.elapsed();
    assert!(took < budget, "{what} took {took:?}, budget {budget:?}");
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn distance_transform_matches_brute_force_scan() {
    let started = Instant::now();
    for case in 0..100u64 {
        let mut rng = rng_for(11, "dt-oracle", &[case]);
        // Mostly sparse-to-medium maps; a few near-dense ones.
        let count = if case < 92 {
            rng.gen_range(1..=400)
        } else {
            rng.gen_range(1500..=2500)
        };
        let points: Vec<(u32, u32)> = (0..count)
            .map(|_| (rng.gen_range(0..64), rng.gen_range(0..64)))
            .collect();
        let edges = EdgeMap::from_points(64, 64, &points).unwrap();
        let sq = squared_distance_map(&edges);
        for y in 0..64u32 {
            for x in 0..64u32 {
                let mut best = i64::MAX;
                for &(ex, ey) in &points {
                    let dx = i64::from(x) - i64::from(ex);
                    let dy = i64::from(y) - i64::from(ey);
                    best = best.min(dx * dx + dy * dy);
                }
                assert_eq!(
                    sq.get(x, y),
                    best as f64,
                    "map {case}, pixel ({x}, {y})"
                );
            }
        }
    }
    check_budget(started, Duration::from_secs(5), "distance-transform oracle");
}

/// Hinge-loss primal objective, written out from the definition.
fn primal(rows: &[Vec<f64>], labels: &[f64], w: &[f64], c: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(labels)
        .map(|(f, &y)| (1.0 - y * dot(w, f)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

fn subgradient_best(rows: &[Vec<f64>], labels: &[f64], c: f64, iters: usize) -> Vec<f64> {
    let d = rows[0].len();
    let mut w = vec![0.0f64; d];
    let mut best = w.clone();
    let mut best_val = primal(rows, labels, &w, c);
    for t in 0..iters {
        let mut g = w.clone();
        for (f, &y) in rows.iter().zip(labels) {
            if y * dot(&w, f) < 1.0 {
                for j in 0..d {
                    g[j] -= c * y * f[j];
                }
            }
        }
        let norm = dot(&g, &g).sqrt();
        let step = 1.0 / ((1.0 + t as f64).sqrt() * (1.0 + norm));
        for j in 0..d {
            w[j] -= step * g[j];
        }
        let val = primal(rows, labels, &w, c);
        if val < best_val {
            best_val = val;
            best = w.clone();
        }
    }
    best
}

/// Full-grid window refinement around `start`: every round scans a
/// (2*STEPS+1)^d lattice, recenters on the best point, and shrinks the
/// window, so kinks of the hinge cannot trap a single coordinate.
fn grid_refine(
    rows: &[Vec<f64>],
    labels: &[f64],
    c: f64,
    start: &[f64],
    mut half: f64,
    rounds: usize,
) -> (Vec<f64>, f64) {
    const STEPS: i64 = 6;
    let d = start.len();
    let mut center = start.to_vec();
    let mut best = center.clone();
    let mut best_val = primal(rows, labels, &center, c);
    for _ in 0..rounds {
        let mut idx = vec![-STEPS; d];
        loop {
            let w: Vec<f64> = (0..d)
                .map(|j| center[j] + idx[j] as f64 / STEPS as f64 * half)
                .collect();
            let val = primal(rows, labels, &w, c);
            if val < best_val {
                best_val = val;
                best = w;
            }
            let mut k = 0;
            loop {
                if k == d {
                    break;
                }
                idx[k] += 1;
                if idx[k] <= STEPS {
                    break;
                }
                idx[k] = -STEPS;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        center = best.clone();
        half *= 0.66;
    }
    (best, best_val)
}

#[test]
fn svm_primal_matches_subgradient_grid_reference() {
    let started = Instant::now();
    for case in 0..24u64 {
        let mut rng = rng_for(17, "svm-oracle", &[case]);
        let l = rng.gen_range(6..=50usize);
        let d = rng.gen_range(1..=3usize);
        let c = [0.1, 1.0, 5.0][case as usize % 3];
        // Even cases carry a real class shift; odd ones are label noise.
        let shift = if case % 2 == 0 { 1.2 } else { 0.0 };
        let mut rows = Vec::with_capacity(l);
        let mut labels = Vec::with_capacity(l);
        for i in 0..l {
            let y: i32 = if i < 2 {
                if i == 0 { 1 } else { -1 }
            } else if rng.gen_bool(0.5) {
                1
            } else {
                -1
            };
            let row: Vec<f64> = (0..d)
                .map(|j| {
                    let base = rng.gen_range(-2.0..2.0);
                    base + f64::from(y) * shift * if j == 0 { 1.0 } else { 0.6 }
                })
                .collect();
            rows.push(row);
            labels.push(y);
        }
        let labels_f: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();

        let data = TrainingSet::new(&rows, &labels).unwrap();
        let cfg = TrainConfig {
            c,
            eps: 1e-8,
            max_iter: 200_000,
            seed: case,
            scaling: Scaling::None,
        };
        let (model, diag) = train(&data, &cfg, Vec::new()).unwrap();
        assert!(diag.converged, "toy {case} hit the epoch cap");

        // Dual feasibility: multipliers inside the box, and the weight
        // vector is their label-signed feature combination.
        assert_eq!(diag.alphas.len(), l);
        let mut w_alpha = vec![0.0f64; d];
        for (i, &a) in diag.alphas.iter().enumerate() {
            assert!(
                (-1e-6..=c + 1e-6).contains(&a),
                "toy {case}: alpha[{i}] = {a} outside [0, {c}]"
            );
            for j in 0..d {
                w_alpha[j] += a * labels_f[i] * rows[i][j];
            }
        }
        for (j, (&wa, &wm)) in w_alpha.iter().zip(&model.w).enumerate() {
            assert!(
                (wa - wm).abs() <= 1e-6,
                "toy {case}: w[{j}] = {wm} but sum alpha y f = {wa}"
            );
        }

        let p_solver = primal(&rows, &labels_f, &model.w, c);
        let dual = diag.alphas.iter().sum::<f64>() - 0.5 * dot(&w_alpha, &w_alpha);
        let gap = (p_solver - dual) / p_solver.max(1e-12);
        assert!(gap >= -1e-9, "toy {case}: weak duality violated, gap {gap}");
        assert!(gap <= 1e-3, "toy {case}: duality gap {gap}");

        let coarse = subgradient_best(&rows, &labels_f, c, 20_000);
        let h0 = coarse
            .iter()
            .fold(1.0f64, |m, v| m.max(2.0 * v.abs()))
            .max((2.0 * c * l as f64).sqrt());
        let (mid, _) = grid_refine(&rows, &labels_f, c, &coarse, h0, 40);
        let (_, p_ref) = grid_refine(&rows, &labels_f, c, &mid, 1.0, 40);
        assert!(dual <= p_ref + 1e-9, "toy {case}: reference below the dual");
        let rel = (p_solver - p_ref).abs() / p_ref.max(1e-12);
        assert!(
            rel <= 1e-3,
            "toy {case}: solver primal {p_solver}, reference {p_ref}, rel {rel}"
        );
    }
    check_budget(started, Duration::from_secs(10), "svm oracle");
}

/// Direct convolution from the definition, indexing the raw kernel
/// buffer laid out [kh, kw, in-per-group, out] with out fastest.
#[allow(clippy::too_many_arguments)]
fn naive_conv(
    input: &Tensor,
    k: usize,
    cpg: usize,
    cout: usize,
    kdata: &[f32],
    bias: &[f32],
    stride: usize,
    pad: usize,
    groups: usize,
) -> Tensor {
    let out_h = (input.height() + 2 * pad - k) / stride + 1;
    let out_w = (input.width() + 2 * pad - k) / stride + 1;
    let opg = cout / groups;
    let mut data = vec![0.0f32; out_h * out_w * cout];
    for oy in 0..out_h {
        for ox in 0..out_w {
            for o in 0..cout {
                let group = o / opg;
                let mut acc = bias[o];
                for i in 0..k {
                    for j in 0..k {
                        let y = (oy * stride + i) as isize - pad as isize;
                        let x = (ox * stride + j) as isize - pad as isize;
                        for c in 0..cpg {
                            let kv = kdata[((i * k + j) * cpg + c) * cout + o];
                            acc += input.get_padded(y, x, group * cpg + c) * kv;
                        }
                    }
                }
                data[(oy * out_w + ox) * cout + o] = acc;
            }
        }
    }
    Tensor::from_vec(out_h, out_w, cout, data).unwrap()
}

fn naive_relu(t: &Tensor) -> Tensor {
    let (h, w, c) = t.shape();
    let data = t.as_slice().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Tensor::from_vec(h, w, c, data).unwrap()
}

fn naive_max_pool(t: &Tensor, window: usize, stride: usize) -> Tensor {
    let (h, w, c) = t.shape();
    let out_h = (h - window) / stride + 1;
    let out_w = (w - window) / stride + 1;
    let mut data = vec![0.0f32; out_h * out_w * c];
    for oy in 0..out_h {
        for ox in 0..out_w {
            for ch in 0..c {
                let mut best = f32::NEG_INFINITY;
                for i in 0..window {
                    for j in 0..window {
                        best = best.max(t.get(oy * stride + i, ox * stride + j, ch));
                    }
                }
                data[(oy * out_w + ox) * c + ch] = best;
            }
        }
    }
    Tensor::from_vec(out_h, out_w, c, data).unwrap()
}

fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    assert_eq!(a.len(), b.len(), "length mismatch {} vs {}", a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

#[test]
fn convolution_matches_naive_reference_and_alexnet_shapes() {
    let started = Instant::now();

    // Single layers over strides, padding, and grouped channels.
    for case in 0..10u64 {
        let mut rng = rng_for(23, "conv-oracle", &[case]);
        let h = rng.gen_range(5..=16usize);
        let w = rng.gen_range(5..=16usize);
        let groups = [1, 1, 1, 2][case as usize % 4];
        let cpg = rng.gen_range(1..=3usize);
        let cin = cpg * groups;
        let cout = rng.gen_range(1..=4usize) * groups;
        let k = [1, 3, 5][rng.gen_range(0..3usize)];
        let stride = rng.gen_range(1..=2usize);
        let pad = rng.gen_range(0..=2usize);

        let input_data: Vec<f32> = (0..h * w * cin).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let input = Tensor::from_vec(h, w, cin, input_data).unwrap();
        let kdata: Vec<f32> = (0..k * k * cpg * cout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias: Vec<f32> = (0..cout).map(|_| rng.gen_range(-0.5..0.5)).collect();

        let kernel = ConvKernel::from_parts(&[k, k, cpg, cout], &kdata).unwrap();
        let fast = conv2d(&input, &kernel, &bias, stride, pad, groups).unwrap();
        let naive = naive_conv(&input, k, cpg, cout, &kdata, &bias, stride, pad, groups);
        let diff = max_abs_diff(fast.as_slice(), naive.as_slice());
        assert!(diff <= 1e-4, "conv case {case}: max abs diff {diff}");
    }

    // Short random networks, replayed layer by layer from the archive.
    let conv = |name: &str, k, ic, oc, stride, pad, groups| Layer::Conv {
        name: name.into(),
        kernel: [k, k],
        in_channels: ic,
        out_channels: oc,
        stride,
        pad,
        groups,
    };
    let nets = vec![
        vec![conv("c1", 3, 3, 4, 1, 1, 1)],
        vec![conv("c1", 3, 3, 4, 2, 0, 1), Layer::Relu { name: "r1".into() }],
        vec![
            conv("c1", 5, 3, 6, 1, 2, 1),
            Layer::Relu { name: "r1".into() },
            Layer::MaxPool { name: "p1".into(), window: 2, stride: 2 },
        ],
        vec![
            conv("c1", 3, 3, 6, 1, 1, 3),
            Layer::MaxPool { name: "p1".into(), window: 3, stride: 3 },
            Layer::Relu { name: "r1".into() },
        ],
    ];
    for (n, layers) in nets.into_iter().enumerate() {
        let tap = layers.last().unwrap().name().to_string();
        let spec = NetworkSpec {
            input: (12, 12, 3),
            channel_means: vec![0.0, 0.0, 0.0],
            layers,
        };
        let archive = random_archive(&spec, 100 + n as u64).unwrap();
        let net = Network::new(spec.clone(), archive.clone()).unwrap();

        let mut rng = rng_for(29, "net-oracle", &[n as u64]);
        let input_data: Vec<f32> = (0..12 * 12 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = net
            .forward_tensor(Tensor::from_vec(12, 12, 3, input_data.clone()).unwrap(), &tap)
            .unwrap();

        let mut t = Tensor::from_vec(12, 12, 3, input_data).unwrap();
        for layer in &spec.layers {
            t = match layer {
                Layer::Conv { name, kernel, in_channels, out_channels, stride, pad, groups } => {
                    let (kshape, kdata) = archive.get(&format!("{name}.kernel")).unwrap();
                    assert_eq!(kshape, &[kernel[0], kernel[1], in_channels / groups, *out_channels]);
                    let (_, bias) = archive.get(&format!("{name}.bias")).unwrap();
                    naive_conv(
                        &t,
                        kernel[0],
                        in_channels / groups,
                        *out_channels,
                        kdata,
                        bias,
                        *stride,
                        *pad,
                        *groups,
                    )
                }
                Layer::Relu { .. } => naive_relu(&t),
                Layer::MaxPool { window, stride, .. } => naive_max_pool(&t, *window, *stride),
                other => panic!("unexpected layer {}", other.name()),
            };
        }
        let diff = max_abs_diff(&got, t.as_slice());
        assert!(diff <= 1e-4, "net {n}: max abs diff {diff}");
    }

    // The stock topology's shape chain, statically inferred.
    let spec = NetworkSpec::caffe_alex();
    let shapes = spec.infer_shapes().unwrap();
    let expect = [
        ("conv1", Shape::Spatial(55, 55, 96)),
        ("pool1", Shape::Spatial(27, 27, 96)),
        ("conv2", Shape::Spatial(27, 27, 256)),
        ("pool2", Shape::Spatial(13, 13, 256)),
        ("conv3", Shape::Spatial(13, 13, 384)),
        ("conv4", Shape::Spatial(13, 13, 384)),
        ("conv5", Shape::Spatial(13, 13, 256)),
        ("pool5", Shape::Spatial(6, 6, 256)),
        ("fc6", Shape::Vector(4096)),
        ("fc7", Shape::Vector(4096)),
        ("fc8", Shape::Vector(1000)),
    ];
    for (name, shape) in expect {
        let (i, _) = spec.layer(name).unwrap_or_else(|| panic!("missing layer {name}"));
        assert_eq!(shapes[i], shape, "layer {name}");
    }
    check_budget(started, Duration::from_secs(10), "convolution oracle");
}

fn angle_diff_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

#[test]
fn ellipse_fit_recovers_rasterized_parameters() {
    let started = Instant::now();
    for case in 0..50u64 {
        let mut rng = rng_for(31, "ellipse-oracle", &[case]);
        let a = rng.gen_range(20.0..=60.0f64);
        // Keep the axes apart so the orientation stays identifiable at
        // raster resolution.
        let b = rng.gen_range(10.0..=0.9 * a);
        let theta = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
        let side = (2.0 * a + 8.0).ceil() as u32;
        let cx = f64::from(side) / 2.0 + rng.gen_range(-0.4..0.4);
        let cy = f64::from(side) / 2.0 + rng.gen_range(-0.4..0.4);
        let (sin, cos) = theta.sin_cos();
        let mask = BinaryMask::from_fn(side, side, |x, y| {
            let dx = f64::from(x) - cx;
            let dy = f64::from(y) - cy;
            let u = (dx * cos + dy * sin) / a;
            let v = (-dx * sin + dy * cos) / b;
            u * u + v * v <= 1.0
        })
        .unwrap();

        let fit = fit_ellipse(&mask).unwrap();

        // Brute-force central moments over the raster.
        let (mut sx, mut sy, mut n) = (0.0f64, 0.0f64, 0.0f64);
        for y in 0..side {
            for x in 0..side {
                if mask.inside(x, y) {
                    sx += f64::from(x);
                    sy += f64::from(y);
                    n += 1.0;
                }
            }
        }
        let (ocx, ocy) = (sx / n, sy / n);
        let (mut mu20, mut mu02, mut mu11) = (0.0f64, 0.0f64, 0.0f64);
        for y in 0..side {
            for x in 0..side {
                if mask.inside(x, y) {
                    let dx = f64::from(x) - ocx;
                    let dy = f64::from(y) - ocy;
                    mu20 += dx * dx;
                    mu02 += dy * dy;
                    mu11 += dx * dy;
                }
            }
        }
        mu20 /= n;
        mu02 /= n;
        mu11 /= n;
        let trace = mu20 + mu02;
        let root = ((mu20 - mu02).powi(2) + (2.0 * mu11).powi(2)).sqrt();
        assert!(root > 0.05 * trace, "case {case} drifted near circular");
        let o_major = 4.0 * (0.5 * (trace + root)).sqrt();
        let o_minor = 4.0 * (0.5 * (trace - root)).sqrt();
        let o_theta = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);

        assert!((fit.center_x - ocx).abs() < 1e-9, "case {case}");
        assert!((fit.center_y - ocy).abs() < 1e-9, "case {case}");
        assert!((fit.major_axis - o_major).abs() < 1e-9, "case {case}");
        assert!((fit.minor_axis - o_minor).abs() < 1e-9, "case {case}");
        assert!(angle_diff_mod_pi(fit.theta, o_theta) < 1e-9, "case {case}");

        let err_theta = angle_diff_mod_pi(fit.theta, theta);
        assert!(
            err_theta <= 0.02,
            "case {case}: theta {theta} recovered {} (err {err_theta})",
            fit.theta
        );
        let err_major = (fit.major_axis - 2.0 * a).abs() / (2.0 * a);
        let err_minor = (fit.minor_axis - 2.0 * b).abs() / (2.0 * b);
        assert!(err_major <= 0.03, "case {case}: major err {err_major}");
        assert!(err_minor <= 0.03, "case {case}: minor err {err_minor}");
    }
    check_budget(started, Duration::from_secs(5), "ellipse oracle");
}

#[test]
fn auc_equals_exhaustive_pair_enumeration() {
    let started = Instant::now();
    for case in 0..1000u64 {
        let mut rng = rng_for(41, "auc-oracle", &[case]);
        let n = rng.gen_range(2..=80usize);
        let mut decisions: Vec<(f64, i32)> = (0..n)
            .map(|i| {
                let label = if i == 0 {
                    1
                } else if i == 1 {
                    -1
                } else if rng.gen_bool(0.5) {
                    1
                } else {
                    -1
                };
                let score = match case % 3 {
                    // Coarse grids force ties, including cross-class ones.
                    0 => f64::from(rng.gen_range(0..5i32)) * 0.25,
                    1 => rng.gen_range(-1.0..1.0),
                    _ => f64::from(rng.gen_range(-2..=2i32)),
                };
                (score, label)
            })
            .collect();
        if case % 7 == 0 {
            decisions.iter_mut().for_each(|d| d.0 = 0.0);
        }

        // Count pairs in half units so the tally stays integral.
        let mut twice_u: u64 = 0;
        let mut n_pos: u64 = 0;
        for &(sp, yp) in &decisions {
            if yp != 1 {
                continue;
            }
            n_pos += 1;
            for &(sn, yn) in &decisions {
                if yn == 1 {
                    continue;
                }
                if sp > sn {
                    twice_u += 2;
                } else if sp == sn {
                    twice_u += 1;
                }
            }
        }
        let n_neg = decisions.len() as u64 - n_pos;
        let expected = (twice_u as f64 / 2.0) / (n_pos as f64 * n_neg as f64);
        let got = auc(&decisions).unwrap();
        assert!(
            got == expected,
            "case {case}: auc {got} != pair enumeration {expected}"
        );
    }
    check_budget(started, Duration::from_secs(5), "auc oracle");
}

const SET_ORDER: [&str; 7] = [
    "cnn",
    "hog",
    "geome",
    "cnn+hog",
    "cnn+geome",
    "hog+geome",
    "cnn+hog+geome",
];

struct Experiment {
    phantom_rows: usize,
    report: serde_json::Value,
    bytes_a: Vec<u8>,
    bytes_b: Vec<u8>,
    grid_csv: String,
    elapsed: Duration,
}

static EXPERIMENT: OnceLock<Experiment> = OnceLock::new();

/// Generates the corpus once and runs the comparison twice with the same
/// seed; later tests only read the captured outputs.
fn experiment() -> &'static Experiment {
    EXPERIMENT.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_renoscan"))
                .args(args)
                .env_remove("RENOSCAN_THREADS")
                .output()
                .expect("binary spawns");
            assert!(
                out.status.success(),
                "renoscan {args:?} failed:\n{}",
                String::from_utf8_lossy(&out.stderr)
            );
        };
        let path = |p: &Path| p.to_str().expect("utf-8 path").to_string();
        let corpus = dir.path().join("corpus");
        let manifest = path(&corpus.join("manifest.csv"));
        let out_a = path(&dir.path().join("run-a"));
        let out_b = path(&dir.path().join("run-b"));

        let started = Instant::now();
        run(&["phantom-gen", "--out-dir", &path(&corpus), "--count", "100", "--seed", "7"]);
        let compare = |out: &str| {
            run(&[
                "compare", "--manifest", &manifest, "--out-dir", out, "--threads", "1",
                "--k", "10", "--repeats", "10", "--seed", "7",
            ]);
        };
        compare(&out_a);
        let elapsed = started.elapsed();
        compare(&out_b);

        let manifest_text = std::fs::read_to_string(&manifest).unwrap();
        let bytes_a = std::fs::read(Path::new(&out_a).join("compare.json")).unwrap();
        let bytes_b = std::fs::read(Path::new(&out_b).join("compare.json")).unwrap();
        Experiment {
            phantom_rows: manifest_text.lines().count() - 1,
            report: serde_json::from_slice(&bytes_a).unwrap(),
            grid_csv: std::fs::read_to_string(Path::new(&out_a).join("compare.csv")).unwrap(),
            bytes_a,
            bytes_b,
            elapsed,
        }
    })
}

fn cells(report: &serde_json::Value) -> Vec<(String, String, &serde_json::Map<String, serde_json::Value>)> {
    report["sides"]
        .as_array()
        .expect("sides array")
        .iter()
        .flat_map(|block| {
            let side = block["side"].as_str().expect("side name").to_string();
            block["cells"].as_array().expect("cells array").iter().map(move |cell| {
                (
                    side.clone(),
                    cell["feature_set"].as_str().expect("set name").to_string(),
                    cell.as_object().expect("cell object"),
                )
            })
        })
        .collect()
}

#[test]
fn phantom_experiment_separates_classes() {
    let exp = experiment();
    assert_eq!(exp.phantom_rows, 100);
    assert!(
        exp.elapsed < Duration::from_secs(300),
        "generation plus comparison took {:?}",
        exp.elapsed
    );
    for (side, set, cell) in cells(&exp.report) {
        let auc_mean = cell["auc_mean"].as_f64().expect("auc_mean");
        if set.contains("geome") {
            assert!(
                auc_mean >= 0.95,
                "side {side} set {set}: auc {auc_mean}"
            );
        }
        if set == "cnn+hog+geome" {
            assert!(
                (0.9..=1.0).contains(&auc_mean),
                "side {side} set {set}: auc {auc_mean}"
            );
        }
    }
}

#[test]
fn comparison_grid_shape_and_fold_hygiene() {
    let exp = experiment();

    let sets: Vec<&str> = exp.report["feature_sets"]
        .as_array()
        .expect("feature_sets")
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(sets, SET_ORDER);

    let blocks = exp.report["sides"].as_array().expect("sides");
    let sides: Vec<&str> = blocks.iter().map(|b| b["side"].as_str().unwrap()).collect();
    assert_eq!(sides, ["left", "right", "both"]);
    for block in blocks {
        let side = block["side"].as_str().unwrap();
        let expect_samples = if side == "both" { 100 } else { 50 };
        let cell_sets: Vec<&str> = block["cells"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["feature_set"].as_str().unwrap())
            .collect();
        assert_eq!(cell_sets, SET_ORDER, "side {side}");
        for cell in block["cells"].as_array().unwrap() {
            assert_eq!(cell["samples"].as_u64(), Some(expect_samples), "side {side}");
            for key in ["accuracy_mean", "auc_mean"] {
                let v = cell[key].as_f64().unwrap();
                assert!((0.0..=1.0).contains(&v), "side {side} {key} {v}");
            }
            for key in ["accuracy_std", "auc_std"] {
                assert!(cell[key].as_f64().unwrap() >= 0.0, "side {side} {key}");
            }
        }
    }

    // Flat table: one comment, one header, then (metric x side) rows with
    // a mean-and-spread cell for all seven sets.
    let lines: Vec<&str> = exp.grid_csv.lines().collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[1], format!("metric,side,{}", SET_ORDER.join(",")));
    let mut expect_rows = Vec::new();
    for side in ["left", "right", "both"] {
        for metric in ["accuracy", "auc"] {
            expect_rows.push(format!("{metric},{side},"));
        }
    }
    for (line, prefix) in lines[2..].iter().zip(&expect_rows) {
        assert!(line.starts_with(prefix.as_str()), "row {line}");
        assert_eq!(line.matches(" ± ").count(), 7, "row {line}");
    }

    // A label-equal feature must win legitimately; the same signal
    // confined to one fold's rows reaches no training set, so with zeros
    // everywhere else every model stays at w = 0 and every pooled
    // decision ties at exactly 0.
    let cfg = CvConfig {
        k: 5,
        repeats: 1,
        seed: 31,
        c: 1.0,
        eps: 1e-4,
        max_iter: 5000,
        scaling: Scaling::None,
    };
    let n = 60;
    let labels: Vec<i32> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let sample = |i: usize, features: Vec<f64>| Sample {
        sample_id: format!("s{i}"),
        subject_id: format!("s{i}"),
        side: Side::Left,
        label: labels[i],
        features,
    };
    let legit: Vec<Sample> = (0..n).map(|i| sample(i, vec![f64::from(labels[i])])).collect();
    let legit_report = cross_validate(&Dataset::new(legit).unwrap(), &cfg).unwrap();
    assert!(legit_report.auc_mean >= 0.999, "{}", legit_report.auc_mean);

    // Fold assignment is a function of labels, k, and seed alone, so a
    // zero-feature probe reveals the split the poisoned run will use.
    let zeros: Vec<Sample> = (0..n).map(|i| sample(i, vec![0.0])).collect();
    let probe = cross_validate(&Dataset::new(zeros).unwrap(), &cfg).unwrap();
    let folds = probe.fold_assignments[0].clone();

    let poisoned: Vec<Sample> = (0..n)
        .map(|i| {
            let v = if folds[i] == 0 { f64::from(labels[i]) } else { 0.0 };
            sample(i, vec![v])
        })
        .collect();
    let poisoned_report = cross_validate(&Dataset::new(poisoned).unwrap(), &cfg).unwrap();
    assert!(
        (0.45..=0.55).contains(&poisoned_report.auc_mean),
        "leaked signal lifted auc to {}",
        poisoned_report.auc_mean
    );
}

#[test]
fn reports_are_byte_identical_across_reruns() {
    let exp = experiment();
    assert!(!exp.bytes_a.is_empty());
    assert_eq!(exp.bytes_a, exp.bytes_b, "same seed produced different reports");
}
