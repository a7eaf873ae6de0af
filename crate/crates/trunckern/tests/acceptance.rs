//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trunckern::suites::{self, default_params};
use trunckern_core::evolution::solve_elliptic_detailed;
use trunckern_core::{
    apply_linear, apply_pucci, make_truncated_fractional_kernel, solve_cauchy, DtPolicy, EvolutionConfig, Extension,
    Forcing, GridFunction, GridSpec, KernelFn, OperatorConfig, OperatorKind,
};

type Outcome = Result<(bool, String), String>;

fn from_checks(suite: &str) -> Outcome {
    let checks = suites::run_suite(suite).map_err(|e| e.to_string())?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    let detail = if failed.is_empty() {
        checks.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join("; ")
    } else {
        failed.join("; ")
    };
    Ok((failed.is_empty(), detail))
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
        Csv {
            header: split(lines.next().unwrap_or_default()),
            rows: lines.map(split).collect(),
        }
    }

    fn column(&self, name: &str) -> Vec<Option<f64>> {
        let i = self.header.iter().position(|h| h == name).expect("column");
        self.rows.iter().map(|r| r[i].parse().ok()).collect()
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.cfg"))
}

const CONFIGS: [&str; 3] = ["harnack_rough", "holder_rough", "truncation_box"];

fn run_config(name: &str, out: &Path) -> Result<Csv, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_trunckern"))
        .arg("run")
        .arg(config_path(name))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{name}: {}", String::from_utf8_lossy(&o.stderr).trim()));
    }
    let text = fs::read_to_string(out.join("metrics.csv")).map_err(|e| e.to_string())?;
    Ok(Csv::parse(&text))
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn harnack_robustness(csv: &Csv) -> Outcome {
    let rho: Vec<f64> = csv.column("rho").into_iter().flatten().collect();
    if rho != [0.0625, 0.015625, 0.0] {
        return Err(format!("unexpected cutoffs {rho:?}"));
    }
    let c: Vec<f64> = csv
        .column("harnack_c")
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    let positive = c.iter().all(|v| *v > 0.0);
    let ratio = 1.0 / spread(&c);
    Ok((
        positive && ratio >= 0.5,
        format!("empirical_c {c:.4?} for rho = 1/16, 1/64, 0; min/max {ratio:.4} (limit 0.5)"),
    ))
}

fn holder_uniformity(csv: &Csv) -> Outcome {
    let semi: Vec<f64> = csv
        .column("seminorm")
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    let alpha = csv.column("alpha")[0].unwrap_or(f64::NAN);
    let fitted = csv.column("alpha_hat").last().copied().flatten();
    let ratio = spread(&semi);
    Ok((
        ratio <= 3.0,
        format!(
            "seminorms {semi:.4?} at alpha = {alpha} (fit on rho = 0: {fitted:?}, capped below 2s); max/min {ratio:.4} (limit 3)"
        ),
    ))
}

fn truncation_errors(csv: &Csv) -> Outcome {
    let rho: Vec<f64> = csv.column("rho").into_iter().flatten().collect();
    let err: Vec<f64> = csv
        .column("sup_error")
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    let n = rho.iter().filter(|r| **r > 0.0).count();
    if n != 6
        || rho[..6]
            .iter()
            .enumerate()
            .any(|(k, r)| *r != (-(k as f64 + 1.0)).exp2())
    {
        return Err(format!("unexpected cutoffs {rho:?}"));
    }
    let e = &err[..6];
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = e.iter().map(|v| format!("{v:.3e}")).collect();
    Ok((
        decreasing && e[5] <= 1e-2,
        format!(
            "sup errors [{}]; strictly decreasing: {decreasing}; final {:.3e} (limit 1e-2)",
            shown.join(", "),
            e[5]
        ),
    ))
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let mut same = Vec::new();
    for name in CONFIGS {
        run_config(name, &second.join(name))?;
        let a = fs::read(first.join(name).join("metrics.csv")).map_err(|e| e.to_string())?;
        let b = fs::read(second.join(name).join("metrics.csv")).map_err(|e| e.to_string())?;
        same.push((name, a == b, a.len()));
    }
    let ok = same.iter().all(|s| s.1);
    let detail = same
        .iter()
        .map(|(n, eq, len)| format!("{n}: {} ({len} bytes)", if *eq { "identical" } else { "DIFFERENT" }));
    Ok((ok, detail.collect::<Vec<_>>().join(", ")))
}

fn grid(dim: usize, n: usize, ext: f64) -> GridSpec {
    GridSpec::new(dim, 1.0, n, Extension::Constant(ext)).unwrap()
}

fn kernel(dim: usize, s: f64, rho: f64, scale: f64) -> KernelFn {
    make_truncated_fractional_kernel(default_params(dim, s, rho).unwrap(), scale).unwrap()
}

fn pucci(dim: usize, s: f64, rho: f64, plus: bool) -> OperatorConfig {
    let kind = if plus {
        OperatorKind::PucciPlus
    } else {
        OperatorKind::PucciMinus
    };
    OperatorConfig::new(default_params(dim, s, rho).unwrap(), kind)
}

fn random_fn(g: &GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    GridFunction::new(g.clone(), (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn evolution(g: &GridSpec, op: OperatorConfig, u: GridFunction, t: f64) -> EvolutionConfig {
    EvolutionConfig {
        grid: g.clone(),
        operator: op,
        forcing: Forcing::Zero,
        initial: u,
        horizon: t,
        dt_policy: DtPolicy::Auto { cfl_fraction: 0.9 },
        snapshot_stride: 1,
    }
}

fn invariants() -> Outcome {
    let e = |x: trunckern_core::Error| x.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut notes = Vec::new();
    let mut ok = true;
    let cases = [(1, 33), (2, 9)];
    let orders = [0.25, 0.5, 0.75];

    // constants, antisymmetry, sandwich, sub- and superadditivity
    let (mut nonzero, mut antisym, mut sandwich, mut additivity) = (0usize, 0usize, 0.0f64, 0.0f64);
    for (dim, n) in cases {
        for s in orders {
            for rho in [0.0, 0.125] {
                let c = GridFunction::constant(grid(dim, n, 0.3), 0.3).map_err(e)?;
                for op in [pucci(dim, s, rho, true), pucci(dim, s, rho, false)] {
                    nonzero += apply_pucci(&c, &op)
                        .map_err(e)?
                        .values()
                        .iter()
                        .filter(|v| **v != 0.0)
                        .count();
                }
                let lin = OperatorConfig::linear(kernel(dim, s, rho, 1.5));
                nonzero += apply_linear(&c, &lin)
                    .map_err(e)?
                    .values()
                    .iter()
                    .filter(|v| **v != 0.0)
                    .count();

                let g = grid(dim, n, rng.random_range(-1.0..1.0));
                let u = random_fn(&g, &mut rng);
                let v = random_fn(&g, &mut rng);
                let plus = |w: &GridFunction| apply_pucci(w, &pucci(dim, s, rho, true));
                let minus = |w: &GridFunction| apply_pucci(w, &pucci(dim, s, rho, false));
                let (pu, mu) = (plus(&u).map_err(e)?, minus(&u).map_err(e)?);
                let pneg = plus(&u.negated()).map_err(e)?;
                antisym += pneg
                    .values()
                    .iter()
                    .zip(mu.values())
                    .filter(|(a, b)| **a != -**b)
                    .count();
                for scale in [1.0, 1.37, 2.0] {
                    let l = apply_linear(&u, &OperatorConfig::linear(kernel(dim, s, rho, scale))).map_err(e)?;
                    for i in 0..g.len() {
                        sandwich = sandwich
                            .max(mu.values()[i] - l.values()[i])
                            .max(l.values()[i] - pu.values()[i]);
                    }
                }
                let w = u.combine(1.0, &v, 1.0).map_err(e)?;
                let (pw, mw) = (plus(&w).map_err(e)?, minus(&w).map_err(e)?);
                let (pv, mv) = (plus(&v).map_err(e)?, minus(&v).map_err(e)?);
                for i in 0..g.len() {
                    additivity = additivity
                        .max(pw.values()[i] - pu.values()[i] - pv.values()[i])
                        .max(mu.values()[i] + mv.values()[i] - mw.values()[i]);
                }
            }
        }
    }
    ok &= nonzero == 0 && antisym == 0 && sandwich <= 1e-10 && additivity <= 1e-10;
    notes.push(format!("constants {nonzero} nonzero, antisymmetry {antisym} mismatches, sandwich excess {sandwich:.1e}, additivity excess {additivity:.1e}"));

    // comparison principle
    let mut violations = 0;
    for trial in 0..100 {
        let s = orders[trial % 3];
        let g = grid(1, 33, rng.random_range(-1.0..1.0));
        let u = random_fn(&g, &mut rng);
        let bumps: Vec<f64> = (0..g.len())
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect();
        let v = GridFunction::new(g.clone(), u.values().iter().zip(&bumps).map(|(a, b)| a + b).collect()).unwrap();
        let op = OperatorConfig::linear(kernel(1, s, [0.0, 0.125][trial % 2], 1.0));
        let mut a = evolution(&g, op, u, 0.05);
        a.forcing = Forcing::Constant(0.3);
        let mut b = a.clone();
        b.initial = v;
        let (fa, fb) = (solve_cauchy(&a).map_err(e)?, solve_cauchy(&b).map_err(e)?);
        for ((_, x), (_, y)) in fa.snapshots.iter().zip(&fb.snapshots) {
            violations += x.values().iter().zip(y.values()).filter(|(p, q)| p > q).count();
        }
    }
    ok &= violations == 0;
    notes.push(format!("comparison {violations} violations on 100 pairs"));

    // constants are fixed points of the evolution
    let mut moved = 0;
    for (dim, n) in cases {
        for s in orders {
            let g = grid(dim, n, 0.7);
            let c = GridFunction::constant(g.clone(), 0.7).map_err(e)?;
            for op in [
                OperatorConfig::linear(kernel(dim, s, 0.1, 1.0)),
                pucci(dim, s, 0.0, true),
                pucci(dim, s, 0.0, false),
            ] {
                let field = solve_cauchy(&evolution(&g, op, c.clone(), 0.1)).map_err(e)?;
                moved += field.snapshots.iter().filter(|(_, v)| v.values() != c.values()).count();
            }
        }
    }
    ok &= moved == 0;
    notes.push(format!("constant solutions: {moved} snapshots moved"));

    // fixed-point elliptic solve against a dense direct solve
    let g = grid(1, 257, 0.3);
    let cfg = OperatorConfig::linear(kernel(1, 0.25, 0.5, 1.0));
    let f = GridFunction::from_fn(g.clone(), |x| (3.0 * x[0]).sin() - 0.5).map_err(e)?;
    let ext = GridFunction::constant(g.clone(), 0.3).map_err(e)?;
    let sol = solve_elliptic_detailed(&g, &cfg, &f, &ext).map_err(e)?;
    let zero = g.with_extension(Extension::Constant(0.0)).map_err(e)?;
    let mut a = DMatrix::zeros(g.len(), g.len());
    for j in 0..g.len() {
        let mut unit = vec![0.0; g.len()];
        unit[j] = 1.0;
        let col = apply_linear(&GridFunction::new(zero.clone(), unit).map_err(e)?, &cfg).map_err(e)?;
        for i in 0..g.len() {
            a[(i, j)] = col.values()[i];
        }
    }
    let offset = apply_linear(&GridFunction::constant(g.clone(), 0.0).map_err(e)?, &cfg).map_err(e)?;
    let rhs = DVector::from_iterator(g.len(), f.values().iter().zip(offset.values()).map(|(f, b)| f - b));
    let direct = a.lu().solve(&rhs).ok_or("singular dense system")?;
    let diff = sol
        .u
        .values()
        .iter()
        .zip(direct.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    ok &= diff <= 1e-6;
    notes.push(format!("elliptic vs dense LU on {} unknowns {diff:.1e}", g.len()));

    Ok((ok, notes.join("; ")))
}

fn main() {
    let out = tempfile::tempdir().expect("temporary directory");
    let first = out.path().join("first");
    let second = out.path().join("second");
    let run = |name: &str| run_config(name, &first.join(name));

    let mut failures = 0;
    let mut report = |k: usize, title: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let (verdict, detail) = match outcome {
            Ok((true, d)) => ("PASS", d),
            Ok((false, d)) => ("FAIL", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!("{verdict} criterion {k} ({title}, {secs:.1} s): {detail}");
    };

    let t = Instant::now();
    report(1, "half-Laplacian example", t, from_checks("half_laplacian"));
    let t = Instant::now();
    report(2, "closed-form constants", t, from_checks("lemma_a1"));
    let t = Instant::now();
    report(3, "bump scaling", t, from_checks("bump"));
    let t = Instant::now();
    report(4, "Hölder exponents", t, from_checks("holder"));
    let t = Instant::now();
    report(5, "Harnack constant field", t, from_checks("harnack_constant"));
    let t = Instant::now();
    report(
        6,
        "Harnack robustness in rho",
        t,
        run("harnack_rough").and_then(|c| harnack_robustness(&c)),
    );
    let t = Instant::now();
    report(
        7,
        "Hölder uniformity in rho",
        t,
        run("holder_rough").and_then(|c| holder_uniformity(&c)),
    );
    let t = Instant::now();
    report(
        8,
        "truncation errors",
        t,
        run("truncation_box").and_then(|c| truncation_errors(&c)),
    );
    let t = Instant::now();
    report(9, "structural invariants", t, invariants());
    let t = Instant::now();
    report(10, "determinism", t, determinism(&first, &second));

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
