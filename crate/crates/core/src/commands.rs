//! Benchmark driver: the work behind each CLI subcommand.
//!
//! Every command writes its artifacts under `<out>/<command>/`. Solve counts
//! go to `manifest.csv`; wall-clock times go to a separate `timings.csv` so
//! all other files are reproducible byte for byte.

use std::path::{Path, PathBuf};

use crate::adapt::{self, AdaptedRun, CostAccounting};
use crate::chaos::{kde, MultiIndexSet};
use crate::collocation::{self, CollocationRun, Problem, RunOptions};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mesh::{build_grid, partition_snake, quad_weights, QuadratureWeights, StructuredGrid, SubdomainPartition};
use crate::output::{num, write_csv, Table};
use crate::random_field::{kl_solve, lognormal_params_with, CovarianceKernel, RandomFieldModel};
use crate::sparse_grid::{from_one_based, smolyak};
use crate::validation::{ks_distance, mc_reference, rel_l2_error, McReference};

/// Grid, weights, partition and KL model shared by all commands.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: RunConfig,
    pub grid: StructuredGrid,
    pub weights: QuadratureWeights,
    pub part: SubdomainPartition,
    pub model: RandomFieldModel,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.geometry;
        let grid = build_grid(cfg.rect(), g.n1, g.n2)?;
        let weights = quad_weights(&grid);
        let part = partition_snake(&grid, cfg.partition.nx, cfg.partition.ny)?;
        let k = &cfg.kernel;
        let (sigma_g, g0) = lognormal_params_with(k.a0, k.sigma_a, k.lognormal_variance_convention)?;
        let kernel = CovarianceKernel::new(sigma_g, k.l1, k.l2)?;
        let model = kl_solve(&kernel, &grid, &weights, cfg.stochastic.d, g0)?;
        Ok(Setup { cfg: cfg.clone(), grid, weights, part, model })
    }

    pub fn problem(&self) -> Result<Problem<'_>> {
        Ok(Problem::new(&self.grid, &self.model, self.cfg.bc())?.with_constant_source(self.cfg.problem.source))
    }

    pub fn opts(&self) -> RunOptions {
        RunOptions { workers: self.cfg.run.workers }
    }

    fn out(&self, command: &str) -> PathBuf {
        self.cfg.run.output_dir.join(command)
    }

    /// First-order solution from the coarse sparse grid.
    pub fn coarse_gaussian(&self) -> Result<CollocationRun> {
        let level = from_one_based(self.cfg.stochastic.paper_level_coarse)?;
        collocation::run_coarse_gaussian_with_factor(
            &self.problem()?,
            level,
            self.cfg.stochastic.coarse_spatial_factor,
            self.opts(),
        )
    }
}

fn write_manifest(dir: &Path, cost: &CostAccounting, seconds: &[(String, f64)]) -> Result<()> {
    let mut rows: Vec<Vec<String>> = cost.stages.iter().map(|(s, n)| vec![s.clone(), n.to_string()]).collect();
    rows.push(vec!["total".into(), cost.total().to_string()]);
    write_csv(&dir.join("manifest.csv"), &["stage", "solves"], rows)?;
    write_csv(
        &dir.join("timings.csv"),
        &["stage", "seconds"],
        seconds.iter().map(|(s, t)| vec![s.clone(), format!("{t:.3}")]),
    )
}

fn write_fields(dir: &Path, setup: &Setup, mean: &[f64], std: &[f64]) -> Result<()> {
    let labels = setup.part.labels();
    write_csv(
        &dir.join("fields.csv"),
        &["x1", "x2", "mean", "std", "subdomain"],
        (0..setup.grid.len()).map(|k| {
            let x = setup.grid.node(k);
            vec![num(x[0]), num(x[1]), num(mean[k]), num(std[k]), labels[k].to_string()]
        }),
    )
}

fn write_eigenvalues(path: &Path, values: &[f64]) -> Result<()> {
    let lead = values.first().copied().unwrap_or(0.0);
    write_csv(
        path,
        &["index", "value", "normalized"],
        values.iter().enumerate().map(|(i, v)| {
            let n = if lead > 0.0 { v / lead } else { 0.0 };
            vec![(i + 1).to_string(), num(*v), num(n)]
        }),
    )
}

/// Seed of the surrogate samples at PDF point `k` for a given run kind.
pub fn pdf_seed(base: u64, kind: u64, k: usize) -> u64 {
    base ^ (kind << 32) ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Samples, KDE and point table for every configured PDF point.
fn write_pdfs<F>(dir: &Path, setup: &Setup, kind: u64, sample: F) -> Result<()>
where
    F: Fn(usize, usize, u64) -> Result<Vec<f64>>,
{
    let n = setup.cfg.pdf.samples;
    let mut table = Vec::new();
    for (k, p) in setup.cfg.pdf.points.iter().enumerate() {
        let node = setup.grid.nearest_node(*p)?;
        let samples = sample(node, n, pdf_seed(setup.cfg.run.seed, kind, k))?;
        let (support, density, degenerate) = kde(&samples);
        write_csv(
            &dir.join(format!("pdf_{}.csv", k + 1)),
            &["u", "density"],
            support.iter().zip(&density).map(|(x, y)| vec![num(*x), num(*y)]),
        )?;
        write_csv(&dir.join(format!("samples_{}.csv", k + 1)), &["u"], samples.iter().map(|x| vec![num(*x)]))?;
        let x = setup.grid.node(node);
        table.push(vec![
            (k + 1).to_string(),
            num(p[0]),
            num(p[1]),
            num(x[0]),
            num(x[1]),
            setup.part.label(node).to_string(),
            degenerate.to_string(),
        ]);
    }
    write_csv(
        &dir.join("pdf_points.csv"),
        &["point", "x1", "x2", "node_x1", "node_x2", "subdomain", "degenerate"],
        table,
    )
}

#[derive(Debug, Clone)]
pub struct KlReport {
    pub lambda: Vec<f64>,
    /// Subdomain spectra, indexed by id minus one.
    pub mu: Vec<Vec<f64>>,
    pub coarse_solves: usize,
}

/// Input-field and subdomain eigenvalue tables.
pub fn cmd_kl(setup: &Setup) -> Result<KlReport> {
    let dir = setup.out("kl");
    write_eigenvalues(&dir.join("eigenvalues_global.csv"), setup.model.eigenvalues())?;
    let coarse = setup.coarse_gaussian()?;
    let mut mu = Vec::new();
    for s in 1..=setup.part.count() {
        let nodes = setup.part.box_nodes(&setup.grid, s);
        let u = adapt::linear_coefficients(&coarse.solution, &nodes)?;
        let pairs = adapt::hilbert_kl_factored(&u, &setup.part.box_weights(&setup.grid, s))?;
        write_eigenvalues(&dir.join(format!("eigenvalues_subdomain_{s}.csv")), &pairs.values)?;
        mu.push(pairs.values);
    }
    write_manifest(&dir, &adapt::total_cost(coarse.solves, &[]), &[("coarse".into(), coarse.seconds)])?;
    Ok(KlReport { lambda: setup.model.eigenvalues().to_vec(), mu, coarse_solves: coarse.solves })
}

/// Full-dimensional chaos solution with statistics and PDFs.
pub fn cmd_full(setup: &Setup) -> Result<CollocationRun> {
    let dir = setup.out("full");
    let s = &setup.cfg.stochastic;
    let basis = MultiIndexSet::new(s.d, s.p)?;
    let sg = smolyak(s.d, from_one_based(s.paper_level_full)?)?;
    let run = collocation::run_full(&setup.problem()?, &basis, &sg, setup.opts())?;
    let (mean, std) = run.solution.moments();
    write_fields(&dir, setup, &mean, &std)?;
    write_pdfs(&dir, setup, 1, |node, n, seed| run.solution.sample_node(node, n, seed))?;
    let mut cost = CostAccounting::default();
    cost.push("full", run.solves);
    write_manifest(&dir, &cost, &[("full".into(), run.seconds)])?;
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct AdaptReport {
    pub coarse: CollocationRun,
    pub adapted: AdaptedRun,
    pub cost: CostAccounting,
}

/// Coarse Gaussian solve, per-subdomain adaptation and stitching.
pub fn cmd_adapt(setup: &Setup) -> Result<AdaptReport> {
    let dir = setup.out("adapt");
    let s = &setup.cfg.stochastic;
    let coarse = setup.coarse_gaussian()?;
    let adapted = adapt::run_pipeline(
        &setup.problem()?,
        &setup.part,
        &coarse.solution,
        &s.r.to_choice()?,
        s.p,
        from_one_based(s.eta_level)?,
        setup.opts(),
    )?;
    let st = &adapted.stitched;
    write_fields(&dir, setup, &st.mean, &st.std)?;
    write_pdfs(&dir, setup, 2, |node, n, seed| st.sample_node(node, n, seed))?;

    let mut summary = Vec::new();
    for a in &adapted.adaptations {
        let m = &a.map;
        write_eigenvalues(&dir.join(format!("eigenvalues_subdomain_{}.csv", m.subdomain)), &m.mu)?;
        let d = m.dim();
        write_csv(
            &dir.join(format!("adaptation_subdomain_{}.csv", m.subdomain)),
            &["i", "j", "a_ij"],
            (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| {
                vec![(i + 1).to_string(), (j + 1).to_string(), num(m.a[(i, j)])]
            }),
        )?;
        let mu_sum: f64 = m.mu.iter().sum();
        summary.push(vec![
            m.subdomain.to_string(),
            m.r.to_string(),
            num(adapt::truncation_error_indicator(&m.mu, m.r)?),
            num(m.isometry_error()),
            num((mu_sum - a.weighted_trace).abs() / a.weighted_trace),
        ]);
    }
    write_csv(
        &dir.join("subdomains.csv"),
        &["subdomain", "r", "indicator", "isometry_error", "trace_rel_error"],
        summary,
    )?;
    write_csv(
        &dir.join("interface_mismatch.csv"),
        &["x1", "x2", "a", "b", "mean_diff", "std_diff"],
        st.mismatches.iter().map(|m| {
            let x = setup.grid.node(m.node);
            vec![num(x[0]), num(x[1]), m.a.to_string(), m.b.to_string(), num(m.mean_diff), num(m.std_diff)]
        }),
    )?;
    let cost = adapt::total_cost(coarse.solves, &adapted.runs.iter().map(|r| r.solves).collect::<Vec<_>>());
    let mut seconds = vec![("coarse".to_string(), coarse.seconds)];
    for (i, r) in adapted.runs.iter().enumerate() {
        seconds.push((format!("subdomain {}", i + 1), r.seconds));
    }
    write_manifest(&dir, &cost, &seconds)?;
    Ok(AdaptReport { coarse, adapted, cost })
}

/// Monte Carlo reference fields.
pub fn cmd_mc(setup: &Setup) -> Result<McReference> {
    let dir = setup.out("mc");
    let t0 = std::time::Instant::now();
    let mc = mc_reference(&setup.problem()?, setup.cfg.run.mc_samples, setup.cfg.run.seed, setup.opts())?;
    write_fields(&dir, setup, &mc.mean, &mc.std)?;
    write_csv(
        &dir.join("std_error.csv"),
        &["x1", "x2", "std_error"],
        (0..setup.grid.len()).map(|k| {
            let x = setup.grid.node(k);
            vec![num(x[0]), num(x[1]), num(mc.std_error[k])]
        }),
    )?;
    let mut cost = CostAccounting::default();
    cost.push("monte carlo", mc.samples);
    write_manifest(&dir, &cost, &[("monte carlo".into(), t0.elapsed().as_secs_f64())])?;
    Ok(mc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// `(metric, region, value)`; region 0 stands for the whole domain.
    pub metrics: Vec<(String, usize, f64)>,
    /// KS distance per PDF point (absent when a run has no samples there).
    pub ks: Vec<Option<f64>>,
}

fn read_fields(dir: &Path, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = Table::read(&dir.join("fields.csv"))?;
    let (mean, std) = (t.column("mean")?, t.column("std")?);
    if mean.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mean.len() });
    }
    Ok((mean, std))
}

/// Error fields, regional relative errors and KS distances of run `a`
/// against reference run `b`. `region` restricts the metrics to one
/// subdomain.
pub fn cmd_compare(setup: &Setup, a: &Path, b: &Path, region: Option<usize>) -> Result<CompareReport> {
    let dir = setup.out("compare");
    let n = setup.grid.len();
    let (ma, sa) = read_fields(a, n)?;
    let (mb, sb) = read_fields(b, n)?;
    write_csv(
        &dir.join("error_fields.csv"),
        &["x1", "x2", "mean_error", "std_error"],
        (0..n).map(|k| {
            let x = setup.grid.node(k);
            vec![num(x[0]), num(x[1]), num(ma[k] - mb[k]), num(sa[k] - sb[k])]
        }),
    )?;
    let regions: Vec<usize> = match region {
        Some(s) if s == 0 || s > setup.part.count() => {
            return Err(Error::invalid(format!("region {s} is not a subdomain")));
        }
        Some(s) => vec![s],
        None => (0..=setup.part.count()).collect(),
    };
    let mut metrics = Vec::new();
    for &s in &regions {
        let nodes = if s == 0 { None } else { Some(setup.part.labeled_nodes(s)) };
        for (name, f, g) in [("mean_rel_l2", &ma, &mb), ("std_rel_l2", &sa, &sb)] {
            let v = match rel_l2_error(f, g, &setup.weights, nodes.as_deref()) {
                Err(Error::ZeroDenominator) => f64::NAN,
                other => other?,
            };
            metrics.push((name.to_string(), s, v));
        }
    }
    write_csv(
        &dir.join("metrics.csv"),
        &["metric", "region", "value"],
        metrics.iter().map(|(m, s, v)| {
            vec![m.clone(), if *s == 0 { "all".to_string() } else { format!("D{s}") }, num(*v)]
        }),
    )?;
    let mut ks = Vec::new();
    let mut rows = Vec::new();
    for (k, p) in setup.cfg.pdf.points.iter().enumerate() {
        let file = format!("samples_{}.csv", k + 1);
        let (pa, pb) = (a.join(&file), b.join(&file));
        let d = if pa.exists() && pb.exists() {
            Some(ks_distance(&Table::read(&pa)?.column("u")?, &Table::read(&pb)?.column("u")?)?)
        } else {
            None
        };
        let label = setup.part.label(setup.grid.nearest_node(*p)?);
        if region.is_none_or(|s| s == label) {
            rows.push(vec![
                (k + 1).to_string(),
                num(p[0]),
                num(p[1]),
                label.to_string(),
                d.map_or_else(|| "nan".to_string(), num),
            ]);
        }
        ks.push(d);
    }
    write_csv(&dir.join("ks.csv"), &["point", "x1", "x2", "subdomain", "ks"], rows)?;
    Ok(CompareReport { metrics, ks })
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub kl: KlReport,
    pub full: CollocationRun,
    pub adapt: AdaptReport,
    pub compare: CompareReport,
}

/// `kl`, `full`, `adapt` and `compare` in sequence.
pub fn cmd_bench(setup: &Setup) -> Result<BenchReport> {
    let kl = cmd_kl(setup)?;
    let full = cmd_full(setup)?;
    let adapt = cmd_adapt(setup)?;
    let root = &setup.cfg.run.output_dir;
    let compare = cmd_compare(setup, &root.join("adapt"), &root.join("full"), None)?;
    Ok(BenchReport { kl, full, adapt, compare })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BcName, RSetting};

    fn tiny(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.geometry.n1 = 17;
        cfg.geometry.n2 = 5;
        cfg.stochastic.d = 3;
        cfg.stochastic.p = 2;
        cfg.stochastic.paper_level_full = 3;
        cfg.stochastic.paper_level_coarse = 2;
        cfg.stochastic.eta_level = 3;
        cfg.stochastic.r = RSetting::Fixed(2);
        cfg.pdf.samples = 500;
        cfg.run.mc_samples = 100;
        cfg.run.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn bench_writes_artifacts_and_is_reproducible() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let r1 = cmd_bench(&Setup::new(&tiny(d1.path())).unwrap()).unwrap();
        cmd_bench(&Setup::new(&tiny(d2.path())).unwrap()).unwrap();
        assert_eq!(r1.kl.mu.len(), 8);
        assert_eq!(r1.adapt.cost.total(), r1.kl.coarse_solves + 8 * smolyak(2, 2).unwrap().len());
        for f in [
            "kl/eigenvalues_global.csv",
            "kl/eigenvalues_subdomain_8.csv",
            "full/fields.csv",
            "full/pdf_8.csv",
            "full/manifest.csv",
            "adapt/fields.csv",
            "adapt/adaptation_subdomain_1.csv",
            "adapt/interface_mismatch.csv",
            "adapt/subdomains.csv",
            "adapt/manifest.csv",
            "compare/metrics.csv",
            "compare/ks.csv",
        ] {
            let a = std::fs::read(d1.path().join(f)).unwrap();
            let b = std::fs::read(d2.path().join(f)).unwrap();
            assert!(a == b, "{f} differs between reruns");
        }
        assert_eq!(r1.compare.ks.len(), 8);
    }

    #[test]
    fn identical_runs_compare_to_zero() {
        let d = tempfile::tempdir().unwrap();
        let mut cfg = tiny(d.path());
        cfg.pdf.points.truncate(2);
        let setup = Setup::new(&cfg).unwrap();
        cmd_full(&setup).unwrap();
        let full = d.path().join("full");
        let rep = cmd_compare(&setup, &full, &full, None).unwrap();
        assert!(rep.metrics.iter().all(|(_, _, v)| *v == 0.0));
        assert!(rep.ks.iter().all(|k| *k == Some(0.0)));
        let one = cmd_compare(&setup, &full, &full, Some(3)).unwrap();
        assert!(one.metrics.iter().all(|(_, s, _)| *s == 3));
        assert!(cmd_compare(&setup, &full, &full, Some(9)).is_err());
    }

    #[test]
    fn dirichlet_case_runs() {
        let d = tempfile::tempdir().unwrap();
        let mut cfg = tiny(d.path());
        cfg.problem.bc = BcName::Dirichlet;
        cfg.pdf.points.truncate(1);
        let setup = Setup::new(&cfg).unwrap();
        let run = cmd_full(&setup).unwrap();
        assert!(run.solution.mean().iter().all(|&m| (-1e-10..=100.0 + 1e-10).contains(&m)));
        let mc = cmd_mc(&setup).unwrap();
        assert_eq!(mc.samples, 100);
    }
}
