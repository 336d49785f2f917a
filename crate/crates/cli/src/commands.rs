//! The three commands. Each returns structured results; rendering to text or
//! CSV is separate so callers can inspect the numbers directly.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use catch_core::lsq::{
    catch_mesh_bound, christoffel_constant, default_control_count, operator_norm_estimate,
};
use catch_core::pointsets::io::{read_points, write_rule};
use catch_core::pointsets::{halton_domain, level_set_control, level_set_mesh, DomainSpec};
use catch_core::{
    compress, compression_ratio, orthonormal_basis, space_dimension, CatchLs, CompressOptions,
    CompressedRule, DiscreteMeasure, PolynomialSpace, SolverKind,
};
use log::info;
use rayon::prelude::*;

use crate::config::{CommandKind, Format, Preset, RunConfig, Source, DEFAULT_RULE_FILE};

/// `exp(-ρ²)`, smooth test function of the comparison table.
pub fn f1(p: &[f64]) -> f64 {
    (-p.iter().map(|x| x * x).sum::<f64>()).exp()
}

/// `(ρ/2)⁵`, limited-smoothness test function of the comparison table.
pub fn f2(p: &[f64]) -> f64 {
    (p.iter().map(|x| x * x).sum::<f64>().sqrt() / 2.0).powi(5)
}

fn compress_options(cfg: &RunConfig) -> CompressOptions {
    CompressOptions {
        rtol: cfg.rtol,
        ktol: cfg.ktol,
        ..CompressOptions::default()
    }
}

fn source_dim(source: &Source) -> usize {
    match source {
        Source::Preset(p) => p.domain().dim(),
        Source::File { dim, .. } => *dim,
    }
}

/// The sample of a run: Halton points of a preset domain with unit masses, or a point file.
pub fn load_measure(cfg: &RunConfig) -> Result<DiscreteMeasure> {
    match &cfg.source {
        Source::Preset(p) => {
            let pts = halton_domain(&p.domain(), cfg.count, cfg.skip)?;
            info!("{p}: {} of {} Halton points accepted", pts.len(), cfg.count);
            Ok(DiscreteMeasure::unit(pts)?)
        }
        Source::File { path, dim } => read_points(path, *dim)
            .with_context(|| format!("reading points from {}", path.display())),
    }
}

#[derive(Debug, Clone)]
pub struct CompressSummary {
    pub sample_size: usize,
    pub rule: CompressedRule,
    pub c_ratio: f64,
    pub out: PathBuf,
}

impl fmt::Display for CompressSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} N={} m={} C_ratio={:.2} epsilon={:.3e} degree={} solver={} -> {}",
            self.sample_size,
            self.rule.rank_n,
            self.rule.len(),
            self.c_ratio,
            self.rule.residual,
            self.rule.exactness_degree,
            self.rule.solver_used,
            self.out.display()
        )
    }
}

/// Compresses the sample at exactness `exactness_factor * degree` and writes the rule file.
pub fn cmd_compress(cfg: &RunConfig) -> Result<CompressSummary> {
    let measure = load_measure(cfg)?;
    let nu = cfg.exactness_factor * cfg.degrees[0];
    let solver = cfg.solver.unwrap_or(SolverKind::Nnls);
    let rule = compress(&measure, nu, solver, &compress_options(cfg))?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_RULE_FILE));
    write_rule(&out, &rule, measure.len()).with_context(|| format!("writing {}", out.display()))?;
    Ok(CompressSummary {
        sample_size: measure.len(),
        c_ratio: compression_ratio(&rule, measure.len()),
        rule,
        out,
    })
}

/// One solver's column entries for one degree.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub rule: CompressedRule,
    pub c_ratio: f64,
    /// RMSE over the sample of the CATCHLS fits of `f1` and `f2`.
    pub rmse_cls: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub n: usize,
    /// `dim P_2n` in the sample's dimension.
    pub dim_2n: usize,
    /// RMSE of the plain LS fits of `f1` and `f2`; absent in dimensions-only tables.
    pub rmse_ls: Option<[f64; 2]>,
    pub runs: Vec<SolverRun>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub source: String,
    pub sample_size: Option<usize>,
    pub solvers: Vec<SolverKind>,
    pub rows: Vec<TableRow>,
}

/// Compression, LS and CATCHLS statistics per degree, with exactness `2n`.
pub fn cmd_table(cfg: &RunConfig) -> Result<Table> {
    let source = match &cfg.source {
        Source::Preset(p) => p.to_string(),
        Source::File { path, .. } => path.display().to_string(),
    };
    let d = source_dim(&cfg.source);
    if cfg.dimensions_only {
        let rows = cfg
            .degrees
            .iter()
            .map(|&n| TableRow {
                n,
                dim_2n: space_dimension(d, 2 * n),
                rmse_ls: None,
                runs: Vec::new(),
            })
            .collect();
        return Ok(Table {
            source,
            sample_size: None,
            solvers: Vec::new(),
            rows,
        });
    }

    let measure = load_measure(cfg)?;
    let solvers = match cfg.solver {
        Some(s) => vec![s],
        None => vec![SolverKind::Nnls, SolverKind::Lp],
    };
    let opts = compress_options(cfg);
    let bbox = measure.bounding_box()?;
    let f_values: [Vec<f64>; 2] = [
        measure.points().iter().map(f1).collect(),
        measure.points().iter().map(f2).collect(),
    ];
    let rows: Result<Vec<TableRow>> = cfg
        .degrees
        .par_iter()
        .map(|&n| {
            let high = orthonormal_basis(
                &measure,
                &PolynomialSpace::new(2 * n, bbox.clone()),
                opts.rtol,
            )?;
            let mut rmse_ls = [0.0; 2];
            let mut runs = Vec::new();
            for &solver in &solvers {
                let prepared = CatchLs::from_high_basis(&measure, n, &high, solver, &opts)
                    .with_context(|| format!("degree {n}, solver {solver}"))?;
                let mut rmse_cls = [0.0; 2];
                for (k, f) in f_values.iter().enumerate() {
                    let report = prepared.fit(f)?;
                    rmse_ls[k] = report.rmse_ls;
                    rmse_cls[k] = report.rmse_cls;
                }
                info!(
                    "n={n} {solver}: m={} eps={:e}",
                    prepared.rule.len(),
                    prepared.rule.residual
                );
                runs.push(SolverRun {
                    solver,
                    c_ratio: compression_ratio(&prepared.rule, measure.len()),
                    rule: prepared.rule,
                    rmse_cls,
                });
            }
            Ok(TableRow {
                n,
                dim_2n: space_dimension(measure.dim(), 2 * n),
                rmse_ls: Some(rmse_ls),
                runs,
            })
        })
        .collect();
    Ok(Table {
        source,
        sample_size: Some(measure.len()),
        solvers,
        rows: rows?,
    })
}

fn solver_label(s: SolverKind) -> &'static str {
    match s {
        SolverKind::Nnls => "NNLS",
        SolverKind::Lp => "LP",
    }
}

impl Table {
    /// Text layout: one column per degree, one row per quantity.
    pub fn render_text(&self) -> String {
        let mut lines: Vec<(String, Vec<String>)> = vec![
            (
                "n".into(),
                self.rows.iter().map(|r| r.n.to_string()).collect(),
            ),
            (
                "N_2n".into(),
                self.rows.iter().map(|r| r.dim_2n.to_string()).collect(),
            ),
        ];
        for (k, &s) in self.solvers.iter().enumerate() {
            let l = solver_label(s);
            lines.push((
                format!("m ({l})"),
                self.rows
                    .iter()
                    .map(|r| r.runs[k].rule.len().to_string())
                    .collect(),
            ));
            lines.push((
                format!("C_ratio ({l})"),
                self.rows
                    .iter()
                    .map(|r| format!("{:.1}", r.runs[k].c_ratio))
                    .collect(),
            ));
            lines.push((
                format!("eps ({l})"),
                self.rows
                    .iter()
                    .map(|r| format!("{:.1e}", r.runs[k].rule.residual))
                    .collect(),
            ));
        }
        if !self.solvers.is_empty() {
            for (fk, fname) in ["f1", "f2"].iter().enumerate() {
                lines.push((
                    format!("RMSE {fname} LS"),
                    self.rows
                        .iter()
                        .map(|r| format!("{:.1e}", r.rmse_ls.map_or(f64::NAN, |v| v[fk])))
                        .collect(),
                ));
                for (k, &s) in self.solvers.iter().enumerate() {
                    lines.push((
                        format!("RMSE {fname} {}-CATCHLS", solver_label(s)),
                        self.rows
                            .iter()
                            .map(|r| format!("{:.1e}", r.runs[k].rmse_cls[fk]))
                            .collect(),
                    ));
                }
            }
        }
        let mut out = String::new();
        match self.sample_size {
            Some(m) => {
                let _ = writeln!(out, "# {}: M = {m}", self.source);
            }
            None => {
                let _ = writeln!(out, "# {}", self.source);
            }
        }
        for (label, cells) in lines {
            let _ = write!(out, "{label:<22}");
            for c in cells {
                let _ = write!(out, "{c:>10}");
            }
            out.push('\n');
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut header = vec!["n".to_string(), "N2n".to_string()];
        for &s in &self.solvers {
            for field in ["m", "cratio", "eps"] {
                header.push(format!("{field}_{s}"));
            }
        }
        if !self.solvers.is_empty() {
            for f in ["f1", "f2"] {
                header.push(format!("{f}_ls"));
                for &s in &self.solvers {
                    header.push(format!("{f}_{s}"));
                }
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![r.n.to_string(), r.dim_2n.to_string()];
            for run in &r.runs {
                cells.push(run.rule.len().to_string());
                cells.push(format!("{:.6}", run.c_ratio));
                cells.push(format!("{:.6e}", run.rule.residual));
            }
            if let Some(ls) = r.rmse_ls {
                for (fk, value) in ls.iter().enumerate() {
                    cells.push(format!("{value:.6e}"));
                    for run in &r.runs {
                        cells.push(format!("{:.6e}", run.rmse_cls[fk]));
                    }
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub degree: usize,
    /// Size of the LS sample (the mesh).
    pub mesh_size: usize,
    /// Number of CATCH points.
    pub catch_size: usize,
    pub epsilon: f64,
    pub ls_norm: f64,
    pub catchls_norm: f64,
    /// `max_x sqrt(K_n(x, x))` on the control set, used as the mesh constant.
    pub christoffel: f64,
    /// `C sqrt(M) β_M(ε)`, bounding both operator norms on the control set.
    pub certified_bound: f64,
}

/// Uniform operator-norm estimates of LS on a level-set mesh and of CATCHLS on its CATCH points.
pub fn cmd_norms(cfg: &RunConfig) -> Result<Vec<NormRow>> {
    let spec = match &cfg.source {
        Source::Preset(Preset::Quartic) => DomainSpec::quartic(),
        Source::Preset(p) => {
            bail!("norms needs a level-set domain with a boundary sample, got preset {p}")
        }
        Source::File { .. } => bail!("norms needs a level-set preset, not a point file"),
    };
    let solver = cfg.solver.unwrap_or(SolverKind::Nnls);
    let opts = CompressOptions {
        bbox: Some(spec.bounding_box()),
        ..compress_options(cfg)
    };
    cfg.degrees
        .par_iter()
        .map(|&n| {
            let mesh = level_set_mesh(&spec, n, cfg.skip)?;
            let measure = DiscreteMeasure::unit(mesh)?;
            let control =
                level_set_control(&spec, n, default_control_count(measure.len()), cfg.skip)?;
            let prepared =
                CatchLs::new(&measure, n, solver, &opts).with_context(|| format!("degree {n}"))?;
            let ls_norm = operator_norm_estimate(&prepared.ls_basis, &control)?;
            let catchls_norm = operator_norm_estimate(&prepared.cls_basis, &control)?;
            let christoffel = christoffel_constant(&prepared.ls_basis, &control)?;
            let epsilon = prepared.rule.residual;
            let certified_bound = catch_mesh_bound(christoffel, measure.len(), epsilon)
                .with_context(|| {
                    format!("degree {n}: residual {epsilon:e} too large for the stability bound")
                })?;
            info!("n={n}: LS {ls_norm:.3}, CATCHLS {catchls_norm:.3}, bound {certified_bound:.3}");
            Ok(NormRow {
                degree: n,
                mesh_size: measure.len(),
                catch_size: prepared.rule.len(),
                epsilon,
                ls_norm,
                catchls_norm,
                christoffel,
                certified_bound,
            })
        })
        .collect()
}

pub fn render_norms_csv(rows: &[NormRow]) -> String {
    let mut out = String::from(
        "degree,mesh_size,catch_size,epsilon,ls_norm,catchls_norm,christoffel,certified_bound\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.degree,
            r.mesh_size,
            r.catch_size,
            r.epsilon,
            r.ls_norm,
            r.catchls_norm,
            r.christoffel,
            r.certified_bound
        );
    }
    out
}

pub fn render_norms_text(rows: &[NormRow]) -> String {
    let mut out = format!(
        "{:>6} {:>8} {:>8} {:>10} {:>10} {:>12} {:>12}\n",
        "n", "M_n", "m", "epsilon", "LS", "CATCHLS", "bound"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>8} {:>8} {:>10.1e} {:>10.3} {:>12.3} {:>12.1}",
            r.degree,
            r.mesh_size,
            r.catch_size,
            r.epsilon,
            r.ls_norm,
            r.catchls_norm,
            r.certified_bound
        );
    }
    out
}

/// Runs the configured command. Returns what belongs on stdout; file outputs
/// are written here.
pub fn run(cfg: &RunConfig) -> Result<String> {
    let rendered = match cfg.command {
        CommandKind::Compress => return Ok(format!("{}\n", cmd_compress(cfg)?)),
        CommandKind::Table => {
            let table = cmd_table(cfg)?;
            match cfg.format {
                Format::Text => table.render_text(),
                Format::Csv => table.render_csv(),
            }
        }
        CommandKind::Norms => {
            let rows = cmd_norms(cfg)?;
            match cfg.format {
                Format::Text => render_norms_text(&rows),
                Format::Csv => render_norms_csv(&rows),
            }
        }
    };
    match &cfg.out {
        Some(path) => {
            fs::write(path, &rendered).with_context(|| format!("writing {}", path.display()))?;
            Ok(format!("wrote {}\n", path.display()))
        }
        None => Ok(rendered),
    }
}
