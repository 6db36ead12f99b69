//! The `check`, `radius`, `fuse`, `cohomology` and `leray` commands.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sheaf_core::cohomology::{betti, leray_check, BettiTable, Cover, LiftedComplex};
use sheaf_core::consistency::{consistency_radius, Assignment};
use sheaf_core::fusion::{fuse_with, FusionMethod, FusionOptions, FusionResult};
use sheaf_core::sheaf::Sheaf;
use sheaf_core::spaces::{FactorKind, ValueSpace};
use sheaf_core::topology::{verify_topology, Topology};

use crate::assignment_io::{fmt_f64, read_assignment, write_assignment, write_edges, write_file};
use crate::error::{CliError, CliResult, EXIT_ANALYSIS, EXIT_NOT_CONVERGED};
use crate::parallel::{run_restarts, thread_budget};
use crate::spec::SheafSpec;

/// Samples per diamond used by `check` unless overridden.
pub const DEFAULT_CHECK_SAMPLES: usize = 256;

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// `n` followed by `noun`, with an `s` unless `n` is 1.
pub(crate) fn count(n: usize, noun: &str) -> String {
    if n == 1 {
        format!("1 {noun}")
    } else {
        format!("{n} {noun}s")
    }
}

/// Loads and builds a spec file.
pub fn load_sheaf(path: &Path) -> CliResult<Sheaf> {
    SheafSpec::read(path)?.build()
}

fn resolve_cover(t: &Topology, keys: &[String]) -> CliResult<Cover> {
    if keys.is_empty() {
        Ok(Cover::subbase(t))
    } else {
        Ok(Cover::from_keys(t, keys)?)
    }
}

fn cover_keys(t: &Topology, cover: &Cover) -> Vec<String> {
    cover.sets().iter().map(|&s| t.key(s)).collect()
}

/// Axiom checks: topology, functoriality on sampled points, and gluing for linear sheaves.
pub fn check(spec: &Path, samples: usize, seed: u64, out: &mut dyn Write) -> CliResult<u8> {
    let sheaf = load_sheaf(spec)?;
    let t = sheaf.topology();
    let family: Vec<_> = t.ids().map(|id| t.set(id)).collect();
    let topo = verify_topology(t.set(t.whole()), &family);
    writeln!(out, "{} topology: {} open sets from {} basis sets", pass(topo.is_topology()), t.len(), t.basis().len())?;
    let mut ok = topo.is_topology();

    let f = sheaf.verify_functoriality(samples, seed);
    let worst = f.worst().map_or(0.0, |w| w.max_discrepancy);
    writeln!(
        out,
        "{} functoriality: {} with several paths, {} samples each, worst discrepancy {:e}",
        pass(f.passed()),
        count(f.checked.len(), "pair"),
        f.samples,
        worst
    )?;
    for w in f.failures() {
        let path = |p: &[sheaf_core::topology::OpenId]| p.iter().map(|&o| t.key(o)).collect::<Vec<_>>().join(" > ");
        writeln!(
            out,
            "  witness {} -> {}: paths [{}] and [{}] differ by {:e}",
            t.key(w.from),
            t.key(w.to),
            path(&w.witness.0),
            path(&w.witness.1),
            w.max_discrepancy
        )?;
    }
    ok &= f.passed();

    if sheaf.is_linear() {
        let g = sheaf.verify_gluing()?;
        writeln!(out, "{} gluing: {} of incomparable opens", pass(g.passed()), count(g.pairs.len(), "pair"))?;
        for p in g.failures() {
            let what = match (p.exists, p.unique) {
                (false, false) => "existence and uniqueness fail",
                (false, true) => "existence fails",
                _ => "uniqueness fails",
            };
            writeln!(
                out,
                "  witness {} | {}: agreeing pairs span dimension {}, union stalk dimension {}, joint restriction rank {} ({what})",
                t.key(p.u),
                t.key(p.v),
                p.agreement_dim,
                p.union_dim,
                p.joint_rank
            )?;
        }
        ok &= g.passed();
    } else {
        writeln!(out, "SKIP gluing: restrictions are nonlinear, only functoriality is sampled")?;
    }
    Ok(if ok { 0 } else { EXIT_ANALYSIS })
}

/// Consistency radius and the edge table.
pub fn radius(spec: &Path, assignment: &Path, edges_out: Option<&Path>, out: &mut dyn Write) -> CliResult<u8> {
    let sheaf = load_sheaf(spec)?;
    let a = read_assignment(&sheaf, assignment)?;
    let report = consistency_radius(&a)?;
    let t = sheaf.topology();
    writeln!(out, "radius: {:.6}", report.radius)?;
    writeln!(out, "edges: {}", report.edges.len())?;
    for e in &report.edges {
        writeln!(out, "  {:>12.6}  {} <= {}", e.error, t.key(e.smaller), t.key(e.larger))?;
    }
    if let Some(path) = edges_out {
        write_file(path, |buf| write_edges(t, &report, buf))?;
    }
    Ok(0)
}

/// Optimizer settings taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct FuseSettings {
    /// Iteration budget per run.
    pub max_iter: Option<usize>,
    /// Objective and simplex-size tolerance.
    pub tol: Option<f64>,
    /// Number of runs.
    pub restarts: Option<usize>,
    /// Restart seed.
    pub seed: u64,
}

impl FuseSettings {
    /// Library options with these overrides applied.
    pub fn options(&self) -> FusionOptions {
        let d = FusionOptions::default();
        FusionOptions {
            max_iterations: self.max_iter.unwrap_or(d.max_iterations),
            f_tolerance: self.tol.unwrap_or(d.f_tolerance),
            x_tolerance: self.tol.unwrap_or(d.x_tolerance),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed,
            ..d
        }
    }
}

/// Fusion with restarts spread over the thread budget.
pub fn fuse_parallel<'s>(a: &Assignment<'s>, opts: &FusionOptions) -> CliResult<FusionResult<'s>> {
    let threads = thread_budget();
    Ok(fuse_with(a, opts, |starts, run| run_restarts(threads, starts, run))?)
}

/// Column labels for the coordinates of a space.
pub fn coordinate_labels(space: &ValueSpace) -> Vec<String> {
    let mut labels = Vec::new();
    for (i, f) in space.factors().iter().enumerate() {
        let names: Vec<String> = match &f.kind {
            FactorKind::Euclidean(n) => (1..=*n).map(|j| format!("f{i}.e{j}")).collect(),
            FactorKind::Circle => vec![format!("f{i}.angle_deg")],
            FactorKind::GeoPosition2D => vec![format!("f{i}.lon_deg"), format!("f{i}.lat_deg")],
            FactorKind::GeoPosition3D => vec![format!("f{i}.lon_deg"), format!("f{i}.lat_deg"), format!("f{i}.alt_km")],
            FactorKind::Time => vec![format!("f{i}.t_h")],
            FactorKind::Discrete(_) => vec![format!("f{i}.label")],
            FactorKind::Simplex(n) => (1..=*n).map(|j| format!("f{i}.p{j}")).collect(),
        };
        labels.extend(names);
    }
    labels
}

/// Writes the fusion summary shared by `fuse` and the scenarios.
pub fn write_fusion_report(sheaf: &Sheaf, r: &FusionResult<'_>, out: &mut dyn Write) -> CliResult<()> {
    let x = sheaf.topology().whole();
    let method = match r.method {
        FusionMethod::NelderMead => "nelder-mead",
        FusionMethod::ProjectionSeeded => "nelder-mead from least-squares projection",
    };
    writeln!(out, "method: {method}")?;
    writeln!(out, "section at X:")?;
    writeln!(out, "  {}", coordinate_labels(sheaf.stalk(x)).join(","))?;
    writeln!(out, "  {}", r.section_at_x.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","))?;
    writeln!(out, "residual: {:.6}", r.residual)?;
    writeln!(out, "input consistency radius: {:.6}", r.radius)?;
    match (r.lower_bound, r.lipschitz) {
        (Some(b), Some(k)) => writeln!(out, "lower bound: {b:.6} (Lipschitz constant {k:.6})")?,
        _ => writeln!(out, "lower bound: unavailable for nonlinear restrictions without --lipschitz")?,
    }
    writeln!(
        out,
        "iterations: {} (run {} of {}, {} evaluations in total)",
        r.iterations,
        r.best_run + 1,
        r.runs.len(),
        r.evaluations
    )?;
    writeln!(out, "converged: {}", if r.converged { "yes" } else { "no" })?;
    Ok(())
}

/// Nearest global section.
pub fn fuse(
    spec: &Path,
    assignment: &Path,
    settings: &FuseSettings,
    lipschitz: Option<f64>,
    strict: bool,
    fused_out: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<u8> {
    let sheaf = load_sheaf(spec)?;
    let a = read_assignment(&sheaf, assignment)?;
    let opts = FusionOptions { lipschitz, ..settings.options() };
    let r = fuse_parallel(&a, &opts)?;
    write_fusion_report(&sheaf, &r, out)?;
    if let Some(path) = fused_out {
        write_file(path, |buf| write_assignment(&r.fused, buf))?;
    }
    Ok(if strict && !r.converged { EXIT_NOT_CONVERGED } else { 0 })
}

#[derive(Serialize)]
struct BettiJson<'a> {
    cover: Vec<String>,
    betti: Vec<usize>,
    rows: Vec<RowJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lift: Option<&'a LiftJson>,
}

#[derive(Serialize)]
struct RowJson {
    degree: usize,
    cochain_dim: usize,
    rank: usize,
    betti: usize,
}

#[derive(Serialize)]
struct LiftJson {
    bins_per_axis: usize,
    samples_per_axis: usize,
    column_stochastic: bool,
    dd_residual: f64,
}

fn write_betti(
    out: &mut dyn Write,
    cover: Vec<String>,
    table: Option<&BettiTable>,
    lift: Option<&LiftJson>,
) -> CliResult<()> {
    let rows: Vec<RowJson> = table
        .map(|t| {
            t.rows
                .iter()
                .map(|r| RowJson { degree: r.degree, cochain_dim: r.cochain_dim, rank: r.rank, betti: r.betti })
                .collect()
        })
        .unwrap_or_default();
    if table.is_some() {
        writeln!(out, "degree  dim C^k  rank d^k  betti")?;
        for r in &rows {
            writeln!(out, "{:>6}  {:>7}  {:>8}  {:>5}", r.degree, r.cochain_dim, r.rank, r.betti)?;
        }
    }
    let numbers: Vec<usize> = rows.iter().map(|r| r.betti).collect();
    match table {
        Some(_) => writeln!(out, "betti: {numbers:?}")?,
        None => writeln!(out, "betti: not computed (a cochain space exceeds the dense rank limit)")?,
    }
    let json = BettiJson { cover, betti: numbers, rows, lift };
    writeln!(out, "{}", serde_json::to_string(&json).expect("reports serialize"))?;
    Ok(())
}

/// Options of the stochastic lift.
#[derive(Debug, Clone, Copy)]
pub struct LiftSettings {
    /// Bins per continuous coordinate.
    pub bins: usize,
    /// Sample points per coordinate and bin.
    pub samples: usize,
}

/// Betti numbers on a cover, or of the stochastic lift for nonlinear sheaves.
pub fn cohomology(
    spec: &Path,
    cover_keys_in: &[String],
    max_degree: usize,
    lift: Option<LiftSettings>,
    out: &mut dyn Write,
) -> CliResult<u8> {
    let sheaf = load_sheaf(spec)?;
    let t = sheaf.topology();
    let cover = resolve_cover(t, cover_keys_in)?;
    let keys = cover_keys(t, &cover);
    writeln!(out, "cover: {}", keys.join(" | "))?;
    match lift {
        None => {
            let table = betti(&sheaf, &cover, max_degree).map_err(|e| match e {
                sheaf_core::Error::NonlinearSheaf => CliError::invalid(
                    "cohomology",
                    "the sheaf has nonlinear restrictions; rerun with --lift-bins N to use its stochastic lift",
                ),
                other => other.into(),
            });
            let table = match table {
                Ok(t) => t,
                Err(e) => {
                    writeln!(out, "error: {e}")?;
                    return Ok(EXIT_ANALYSIS);
                }
            };
            write_betti(out, keys, Some(&table), None)?;
            Ok(0)
        }
        Some(l) => {
            let c = LiftedComplex::build(&sheaf, &cover, l.bins, l.samples, max_degree)?;
            let dims: Vec<usize> = (0..=max_degree + 1).map(|k| c.cochain_dim(k)).collect();
            writeln!(out, "stochastic lift: {} bins per axis, {} samples per axis and bin", l.bins, l.samples)?;
            writeln!(out, "cochain dims: {dims:?}")?;
            let stochastic = c.column_stochastic();
            let dd = c.dd_residual();
            writeln!(out, "{} lifted maps: {} distinct, column stochastic", pass(stochastic), c.lifted_map_count())?;
            writeln!(out, "d∘d largest entry: {dd:e}")?;
            let info = LiftJson {
                bins_per_axis: l.bins,
                samples_per_axis: l.samples,
                column_stochastic: stochastic,
                dd_residual: dd,
            };
            write_betti(out, keys, c.betti().as_ref(), Some(&info))?;
            Ok(if stochastic { 0 } else { EXIT_ANALYSIS })
        }
    }
}

/// Leray check of a cover.
pub fn leray(spec: &Path, cover_keys_in: &[String], max_degree: usize, out: &mut dyn Write) -> CliResult<u8> {
    let sheaf = load_sheaf(spec)?;
    let t = sheaf.topology();
    let cover = resolve_cover(t, cover_keys_in)?;
    writeln!(out, "cover: {}", cover_keys(t, &cover).join(" | "))?;
    let r = leray_check(&sheaf, &cover, max_degree)?;
    for c in &r.intersections {
        let members: Vec<String> = c.indices.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "{} intersection {} (members {}): betti {:?}",
            if c.acyclic { "acyclic    " } else { "NOT ACYCLIC" },
            t.key(c.open),
            members.join(","),
            c.betti
        )?;
    }
    let witnesses = r.witnesses().count();
    if r.verdict {
        writeln!(out, "verdict: Leray cover")?;
    } else {
        writeln!(out, "verdict: not a Leray cover ({witnesses} witness{})", if witnesses == 1 { "" } else { "es" })?;
    }
    writeln!(out, "cover betti: {:?}", r.cover_betti.betti_numbers())?;
    writeln!(out, "topology betti: {:?}", r.topology_betti.betti_numbers())?;
    writeln!(out, "certified: {}", if r.certified() { "yes" } else { "no" })?;
    Ok(if r.certified() { 0 } else { EXIT_ANALYSIS })
}

/// Writes a spec file.
pub fn write_spec(path: &Path, spec: &SheafSpec) -> CliResult<()> {
    write_file(path, |buf| buf.write_all(spec.to_json().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sheaf_core::scenarios::{chain_sheaf, gluing_counterexample};

    fn spec_file(dir: &Path, sheaf: &Sheaf) -> std::path::PathBuf {
        let path = dir.join("spec.json");
        write_spec(&path, &SheafSpec::from_sheaf(sheaf)).unwrap();
        path
    }

    #[test]
    fn counts_agree_with_their_noun() {
        assert_eq!(count(1, "pair"), "1 pair");
        assert_eq!(count(0, "pair"), "0 pairs");
    }

    #[test]
    fn labels_follow_factor_layout() {
        let s = ValueSpace::product([ValueSpace::geo3d(), ValueSpace::euclidean(2), ValueSpace::time()]);
        assert_eq!(
            coordinate_labels(&s),
            ["f0.lon_deg", "f0.lat_deg", "f0.alt_km", "f1.e1", "f1.e2", "f2.t_h"].map(String::from).to_vec()
        );
    }

    #[test]
    fn check_reports_gluing_witnesses() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Vec::new();
        let code = check(&spec_file(dir.path(), &gluing_counterexample().unwrap()), 8, 0, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(code, EXIT_ANALYSIS);
        assert!(text.contains("FAIL gluing: 1 pair"), "{text}");
        assert!(text.contains("witness p+q | q+r"), "{text}");
    }

    #[test]
    fn leray_on_the_chain_is_certified() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Vec::new();
        let code = leray(&spec_file(dir.path(), &chain_sheaf().unwrap()), &[], 2, &mut out).unwrap();
        assert_eq!(code, 0, "{}", String::from_utf8_lossy(&out));
    }

    #[test]
    fn default_cover_is_the_subbase() {
        let s = chain_sheaf().unwrap();
        let c = resolve_cover(s.topology(), &[]).unwrap();
        assert_eq!(cover_keys(s.topology(), &c), ["x+y", "y"]);
        assert!(resolve_cover(s.topology(), &["q".to_string()]).is_err());
    }
}
