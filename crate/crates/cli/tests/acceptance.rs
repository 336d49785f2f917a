//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! and prints one PASS/FAIL line per criterion; any failure makes the process
//! exit nonzero so `cargo test` reports it.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use catch_cli::commands::{cmd_norms, cmd_table, load_measure, Table};
use catch_cli::RunConfig;
use catch_core::catch::OrthoFactorization;
use catch_core::pointsets::halton;
use catch_core::polyspace::{chebyshev_values, exponent_list};
use catch_core::solvers::{nnls, simplex_lp, LpStatus};
use catch_core::{
    apply_rule, compress_with_basis, orthonormal_basis, stability_factors, BoundingBox,
    CompressOptions, CompressedRule, DiscreteMeasure, PointSet, PolynomialSpace, SolverKind,
};
use oracles::{lp_vertex_optimum, nnls_optimal_residual, random_lp, random_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference figures for the four-disk sample at degrees 3, 6, ..., 18.
const REF_DIM_2N: [usize; 6] = [28, 91, 190, 325, 496, 703];
const REF_C_RATIO: [f64; 6] = [200.0, 62.0, 29.0, 17.0, 11.0, 8.0];
/// RMSE per degree for `[f1, f2]` and `[LS, NNLS-CATCHLS, LP-CATCHLS]`.
const REF_RMSE: [[[f64; 6]; 3]; 2] = [
    [
        [3.6e-2, 4.8e-3, 2.3e-4, 3.1e-6, 2.0e-7, 2.2e-9],
        [4.1e-2, 4.9e-3, 2.3e-4, 3.2e-6, 2.0e-7, 2.2e-9],
        [5.0e-2, 6.1e-3, 2.7e-4, 3.5e-6, 2.0e-7, 2.3e-9],
    ],
    [
        [2.8e-1, 2.4e-3, 1.5e-4, 2.6e-5, 6.7e-6, 2.2e-6],
        [3.1e-1, 2.4e-3, 1.6e-4, 2.7e-5, 6.8e-6, 2.2e-6],
        [3.9e-1, 3.0e-3, 1.8e-4, 3.0e-5, 6.7e-6, 2.2e-6],
    ],
];

type Outcome = Result<String, String>;

/// `r + g·t` with `g` a unit vector.
type AffineFactor = (f64, Vec<f64>);

fn config(args: &[&str]) -> RunConfig {
    let mut full = vec!["catch"];
    full.extend_from_slice(args);
    RunConfig::from_args(full).expect("valid test configuration")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The full comparison table with both solvers, computed once.
fn full_table() -> &'static Result<(Table, Duration), String> {
    static TABLE: OnceLock<Result<(Table, Duration), String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let start = Instant::now();
        let table = cmd_table(&config(&["table"])).map_err(|e| format!("table failed: {e:#}"))?;
        Ok((table, start.elapsed()))
    })
}

fn table() -> Result<&'static (Table, Duration), String> {
    full_table().as_ref().map_err(Clone::clone)
}

fn run_binary(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_catch"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run catch: {e}"))?;
    ensure(out.status.success(), || {
        format!(
            "catch {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Polynomial families used by the property checks. Both are evaluated
/// directly at the points in box-reference coordinates, independently of the
/// orthonormal bases the crate computes, and scaled to maximum modulus one.
#[derive(Clone, Copy)]
enum Family<'a> {
    /// Uniform random coefficients on the given product Chebyshev generators of the box.
    Chebyshev(&'a [Vec<usize>]),
    /// Combination of products of random affine factors, of the given total degree.
    AffineProducts(usize),
}

fn random_polynomial(
    rng: &mut impl Rng,
    family: Family,
    points: &PointSet,
    bbox: &BoundingBox,
) -> Vec<f64> {
    let d = points.dim();
    let reference =
        |p: &[f64]| -> Vec<f64> { (0..d).map(|j| bbox.to_reference(j, p[j])).collect() };
    let mut values: Vec<f64> = match family {
        Family::Chebyshev(exps) => {
            let degree = exps
                .iter()
                .map(|e| e.iter().sum::<usize>())
                .max()
                .unwrap_or(0);
            let coeffs: Vec<f64> = exps.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut cheb = vec![Vec::new(); d];
            points
                .iter()
                .map(|p| {
                    for (j, t) in reference(p).into_iter().enumerate() {
                        chebyshev_values(t, degree, &mut cheb[j]);
                    }
                    exps.iter()
                        .zip(&coeffs)
                        .map(|(e, c)| {
                            c * e
                                .iter()
                                .enumerate()
                                .map(|(j, &k)| cheb[j][k])
                                .product::<f64>()
                        })
                        .sum()
                })
                .collect()
        }
        Family::AffineProducts(degree) => {
            let mut terms: Vec<(f64, Vec<AffineFactor>)> = Vec::new();
            for k in [degree, degree.saturating_sub(1), degree.div_ceil(2)] {
                let factors = (0..k)
                    .map(|_| {
                        let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
                        (
                            rng.gen_range(-1.0..1.0),
                            g.iter().map(|x| x / norm).collect(),
                        )
                    })
                    .collect();
                terms.push((rng.gen_range(-1.0..1.0), factors));
            }
            points
                .iter()
                .map(|p| {
                    let t = reference(p);
                    terms
                        .iter()
                        .map(|(c, factors)| {
                            c * factors
                                .iter()
                                .map(|(r, g)| r + g.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>())
                                .product::<f64>()
                        })
                        .sum()
                })
                .collect()
        }
    };
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        values.iter_mut().for_each(|v| *v /= scale);
    }
    values
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let csv = run_binary(&["table", "--dimensions-only", "--format", "csv"])?;
    let elapsed = start.elapsed();
    let dims: Vec<usize> = csv
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|s| s.parse().ok())
                .ok_or(format!("bad line {l:?}"))
        })
        .collect::<Result<_, _>>()?;
    ensure(dims == REF_DIM_2N, || format!("N_2n = {dims:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "N_2n = {dims:?} in {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn criterion_2() -> Outcome {
    let (table, elapsed) = table()?;
    let m_total = table.sample_size.ok_or("no sample size")?;
    let mut worst = 0.0f64;
    for (k, row) in table.rows.iter().enumerate() {
        for run in &row.runs {
            let m = run.rule.len();
            ensure(m <= row.dim_2n, || {
                format!("n={} {}: m={m} > {}", row.n, run.solver, row.dim_2n)
            })?;
            if (3..=12).contains(&row.n) {
                ensure(m == row.dim_2n, || {
                    format!("n={} {}: m={m} != {}", row.n, run.solver, row.dim_2n)
                })?;
            }
            let c_ratio = m_total as f64 / m as f64;
            let dev = (c_ratio / REF_C_RATIO[k] - 1.0).abs();
            worst = worst.max(dev);
            ensure(dev <= 0.15, || {
                format!(
                    "n={} {}: C_ratio {c_ratio:.1} vs {}",
                    row.n, run.solver, REF_C_RATIO[k]
                )
            })?;
        }
    }
    ensure(*elapsed < Duration::from_secs(600), || {
        format!("table took {elapsed:?}")
    })?;
    Ok(format!(
        "M={m_total}, largest C_ratio deviation {:.1}%, both solvers in {:.0} s",
        worst * 100.0,
        elapsed.as_secs_f64()
    ))
}

fn criterion_3() -> Outcome {
    let (table, _) = table()?;
    let mut worst = 0.0f64;
    for row in &table.rows {
        for run in &row.runs {
            let eps = run.rule.residual;
            worst = worst.max(eps);
            ensure(eps <= 1e-10, || {
                format!("n={} {}: epsilon {eps:e}", row.n, run.solver)
            })?;
        }
    }
    Ok(format!("largest epsilon {worst:.1e}"))
}

/// Checks `|∫p dλ - Σ w p(t)| <= ε ||p||_λ + 1e-10 μ` for 100 random
/// polynomials of the rule's exactness space: the span of the generators kept
/// by the rank step. When that is all of the polynomial space, half of the
/// polynomials are affine products instead of Chebyshev combinations.
fn check_exactness(
    rng: &mut impl Rng,
    measure: &DiscreteMeasure,
    basis: &OrthoFactorization,
    rule: &CompressedRule,
    label: &str,
) -> Result<f64, String> {
    let space = basis.space();
    ensure(basis.rank() == rule.rank_n, || {
        format!("{label}: rank {} vs {}", basis.rank(), rule.rank_n)
    })?;
    let kept: Vec<Vec<usize>> = basis.perm()[..basis.rank()]
        .iter()
        .map(|&k| space.exponents()[k].clone())
        .collect();
    let full_rank = kept.len() == space.len();
    let mu = measure.total_mass();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let family = if full_rank && k % 2 == 1 {
            Family::AffineProducts(rule.exactness_degree)
        } else {
            Family::Chebyshev(&kept)
        };
        let p = random_polynomial(rng, family, measure.points(), space.bbox());
        let diff = (measure.integrate(&p) - apply_rule(rule, &p)).abs();
        let allowed = rule.residual * measure.l2_norm(&p) + 1e-10 * mu;
        worst = worst.max(diff / allowed);
        ensure(diff <= allowed, || {
            format!("{label}: error {diff:e} > {allowed:e}")
        })?;
    }
    Ok(worst)
}

fn scaled_halton(count: usize, d: usize, lo: f64, hi: f64) -> PointSet {
    let raw = halton(count, d, 0).unwrap();
    PointSet::new(d, raw.coords().iter().map(|t| lo + (hi - lo) * t).collect()).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut rules = 0;
    let mut partial = Vec::new();

    let (table, _) = table()?;
    let disks = load_measure(&config(&["table"])).map_err(|e| e.to_string())?;
    let bbox = disks.bounding_box().map_err(|e| e.to_string())?;
    for row in &table.rows {
        let basis = orthonormal_basis(&disks, &PolynomialSpace::new(2 * row.n, bbox.clone()), None)
            .map_err(|e| e.to_string())?;
        if basis.rank() < basis.space().len() {
            partial.push(row.n);
        }
        for run in &row.runs {
            let label = format!("2D n={} {}", row.n, run.solver);
            worst = worst.max(check_exactness(
                &mut rng, &disks, &basis, &run.rule, &label,
            )?);
            rules += 1;
        }
    }

    let line = scaled_halton(500, 1, -1.0, 2.0);
    let line_masses = (0..500).map(|i| 0.5 + (i % 7) as f64 / 7.0).collect();
    let cube = scaled_halton(2000, 3, 0.0, 1.0);
    let cube_masses = cube.iter().map(|p| 1.0 + p[0] * p[1] * p[2]).collect();
    let extra = [
        ("1D", DiscreteMeasure::new(line, line_masses).unwrap(), 20),
        ("3D", DiscreteMeasure::new(cube, cube_masses).unwrap(), 6),
    ];
    for (label, measure, nu) in &extra {
        let bbox = measure.bounding_box().map_err(|e| e.to_string())?;
        let basis = orthonormal_basis(measure, &PolynomialSpace::new(*nu, bbox), None)
            .map_err(|e| e.to_string())?;
        for solver in [SolverKind::Nnls, SolverKind::Lp] {
            let rule = compress_with_basis(measure, &basis, solver, &CompressOptions::default())
                .map_err(|e| e.to_string())?;
            worst = worst.max(check_exactness(
                &mut rng,
                measure,
                &basis,
                &rule,
                &format!("{label} {solver}"),
            )?);
            rules += 1;
        }
    }
    Ok(format!(
        "{rules} rules x 100 polynomials, worst error/bound {worst:.1e}; rank-reduced spaces at n = {partial:?}"
    ))
}

fn criterion_5() -> Outcome {
    let (table, _) = table()?;
    let mut worst_ratio = 0.0f64;
    let mut worst_decade = 1.0f64;
    for (k, row) in table.rows.iter().enumerate() {
        let ls = row.rmse_ls.ok_or("missing LS columns")?;
        for (fk, fname) in ["f1", "f2"].iter().enumerate() {
            let mut observed = vec![(0, ls[fk])];
            for run in &row.runs {
                let ratio = run.rmse_cls[fk] / ls[fk];
                worst_ratio = worst_ratio.max(ratio);
                ensure(ratio <= 2.0, || {
                    format!(
                        "n={} {fname} {}: CATCHLS/LS = {ratio:.2}",
                        row.n, run.solver
                    )
                })?;
                let column = match run.solver {
                    SolverKind::Nnls => 1,
                    SolverKind::Lp => 2,
                };
                observed.push((column, run.rmse_cls[fk]));
            }
            for (column, value) in observed {
                let reference = REF_RMSE[fk][column][k];
                let q = value / reference;
                worst_decade = if (q.log10()).abs() > worst_decade.log10().abs() {
                    q
                } else {
                    worst_decade
                };
                ensure((0.1..=10.0).contains(&q), || {
                    format!("n={} {fname} column {column}: RMSE {value:.2e} vs reference {reference:.1e}", row.n)
                })?;
            }
        }
    }
    Ok(format!(
        "largest CATCHLS/LS ratio {worst_ratio:.3}, largest deviation from reference x{worst_decade:.2}"
    ))
}

fn criterion_6() -> Outcome {
    let (table, _) = table()?;
    let measure = load_measure(&config(&["table"])).map_err(|e| e.to_string())?;
    let bbox = measure.bounding_box().map_err(|e| e.to_string())?;
    let mu = measure.total_mass();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for row in &table.rows {
        let generators = exponent_list(measure.dim(), row.n);
        for run in &row.runs {
            let rule = &run.rule;
            let factors =
                stability_factors(rule.residual, measure.len()).map_err(|e| e.to_string())?;
            for _ in 0..100 {
                let p = random_polynomial(
                    &mut rng,
                    Family::Chebyshev(&generators),
                    measure.points(),
                    &bbox,
                );
                let full = measure.l2_norm(&p);
                let compressed = rule
                    .node_indices
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&i, w)| w * p[i] * p[i])
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(full / (factors.alpha * compressed));
                ensure(full <= factors.alpha * compressed * (1.0 + 1e-8), || {
                    format!(
                        "n={} {}: {full:e} > alpha * {compressed:e}",
                        row.n, run.solver
                    )
                })?;
            }
            let gap = (rule.weight_sum() - mu).abs();
            ensure(gap <= rule.residual * mu.sqrt() + 1e-10, || {
                format!("n={} {}: |sum w - mu| = {gap:e}", row.n, run.solver)
            })?;
        }
    }
    Ok(format!(
        "largest ||p||_X / (alpha ||p||_w,T) - 1 = {:.1e}",
        worst - 1.0
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_nnls = 0.0f64;
    for trial in 0..50 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=10);
        let a = random_matrix(&mut rng, n, m);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let res = nnls(&a, &b).map_err(|e| e.to_string())?;
        let gap = (res.residual_norm - nnls_optimal_residual(&a, &b)).abs();
        worst_nnls = worst_nnls.max(gap);
        ensure(gap <= 1e-10, || format!("NNLS trial {trial}: gap {gap:e}"))?;
    }
    let mut worst_lp = 0.0f64;
    for trial in 0..50 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(n..=8);
        let (a, b, c) = random_lp(&mut rng, n, m);
        let res = simplex_lp(&a, &b, &c).map_err(|e| e.to_string())?;
        ensure(res.status == LpStatus::Optimal, || {
            format!("LP trial {trial}: {:?}", res.status)
        })?;
        let best = lp_vertex_optimum(&a, &b, &c).ok_or("oracle found no vertex")?;
        let gap = (res.objective - best).abs();
        worst_lp = worst_lp.max(gap);
        ensure(gap <= 1e-10, || format!("LP trial {trial}: gap {gap:e}"))?;
        let nonzeros = res.u.iter().filter(|&&x| x != 0.0).count();
        ensure(nonzeros <= n, || {
            format!("LP trial {trial}: {nonzeros} nonzeros > {n}")
        })?;
    }
    Ok(format!(
        "NNLS worst gap {worst_nnls:.1e}, LP worst gap {worst_lp:.1e}"
    ))
}

fn criterion_8() -> Outcome {
    let mut worst_ratio = 0.0f64;
    for solver in ["nnls", "lp"] {
        let rows = cmd_norms(&config(&[
            "norms",
            "--degrees",
            "1..10",
            "--solver",
            solver,
        ]))
        .map_err(|e| format!("norms failed: {e:#}"))?;
        ensure(rows.len() == 10, || format!("{} rows", rows.len()))?;
        for r in &rows {
            let ratio = r.catchls_norm / r.ls_norm;
            worst_ratio = worst_ratio.max(ratio);
            ensure(ratio <= 3.0, || {
                format!("{solver} n={}: CATCHLS/LS norm {ratio:.2}", r.degree)
            })?;
            ensure(
                r.ls_norm >= 1.0 - 1e-12 && r.catchls_norm >= 1.0 - 1e-12,
                || {
                    format!(
                        "{solver} n={}: norms {} {}",
                        r.degree, r.ls_norm, r.catchls_norm
                    )
                },
            )?;
            ensure(
                r.ls_norm <= r.certified_bound && r.catchls_norm <= r.certified_bound,
                || {
                    format!(
                        "{solver} n={}: bound {} exceeded",
                        r.degree, r.certified_bound
                    )
                },
            )?;
        }
    }
    Ok(format!("largest CATCHLS/LS norm ratio {worst_ratio:.3}"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, Vec<&str>); 4] = [
        (
            "compress",
            vec!["compress", "--degree", "5", "--count", "3000"],
        ),
        (
            "compress-lp",
            vec![
                "compress", "--degree", "5", "--count", "3000", "--solver", "lp",
            ],
        ),
        (
            "table",
            vec![
                "table",
                "--degrees",
                "2,4",
                "--count",
                "3000",
                "--format",
                "csv",
            ],
        ),
        (
            "norms",
            vec!["norms", "--degrees", "1..6", "--format", "csv"],
        ),
    ];
    let read = |p: &Path| fs::read(p).map_err(|e| format!("{}: {e}", p.display()));
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{name}-{rep}.csv"));
            let mut full = args.clone();
            let path_str = path.to_str().unwrap().to_owned();
            full.extend(["--out", &path_str]);
            run_binary(&full)?;
            outputs.push(read(&path)?);
        }
        ensure(!outputs[0].is_empty() && outputs[0] == outputs[1], || {
            format!("{name}: outputs differ")
        })?;
    }
    Ok(format!("{} commands reproduced byte for byte", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failures = 0;
    for (k, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {k}: PASS ({detail})"),
            Err(detail) => {
                failures += 1;
                println!("criterion {k}: FAIL ({detail})");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
