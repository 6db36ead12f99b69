//! End-to-end scenario runners that compare results with published expectations.

use std::io::Write;
use std::path::Path;

use sheaf_core::cohomology::{betti, build_complex, global_sections_via_h0, leray_check, Cover};
use sheaf_core::consistency::{consistency_radius, Assignment, ConsistencyReport};
use sheaf_core::scenarios::coins::detections;
use sheaf_core::scenarios::sar::{field_state, recorded_field};
use sheaf_core::scenarios::{
    build_coin_sheaf, build_obstacle_sheaves, build_sar_sheaf, coin_value, crash_error_km, crash_estimate,
    obstacle_cover, overlap_refinement, pseudocircle_suspension, sar_case, sar_case_assignment, sar_opens, CoinVariant,
    ObstacleParams, SarCase, SarParameters, SAR_CASES,
};
use sheaf_core::sheaf::Sheaf;
use sheaf_core::spaces::FactorKind;
use sheaf_core::topology::OpenId;

use crate::assignment_io::{write_assignment, write_file};
use crate::commands::{count, fuse_parallel, write_spec, FuseSettings, DEFAULT_CHECK_SAMPLES};
use crate::error::{CliError, CliResult, EXIT_ANALYSIS};
use crate::spec::SheafSpec;

/// Largest deviation, per coordinate, of a crash estimate from the published one (degrees).
pub const CRASH_DEGREE_TOLERANCE: f64 = 0.02;
/// Allowed deviation of the dead-reckoning error from the published one (km).
pub const ERROR_KM_TOLERANCE: f64 = 1.0;
/// Relative tolerance on the consistency radius.
pub const RADIUS_RELATIVE_TOLERANCE: f64 = 0.20;
/// Relative tolerance on the largest position-only edge.
pub const POSITION_EDGE_RELATIVE_TOLERANCE: f64 = 0.05;
/// "Much larger" in the radius ordering means at least this factor.
pub const ORDERING_FACTOR: f64 = 2.0;
/// Largest acceptable fused crash error per case (km).
pub const FUSED_ERROR_LIMITS: [f64; 3] = [4.0, 12.0, 110.0];
/// Smallest acceptable ratio of dead-reckoning error to fused error per case.
pub const IMPROVEMENT_FACTORS: [f64; 3] = [4.0, 1.4, 1.7];
/// Consistency radius below which a fused assignment counts as a global section.
pub const GLOBAL_TOLERANCE: f64 = 1e-6;

/// Collects PASS/FAIL/INFO lines.
pub struct Ledger<'w> {
    out: &'w mut dyn Write,
    failures: usize,
}

impl<'w> Ledger<'w> {
    /// Starts an empty ledger writing to `out`.
    pub fn new(out: &'w mut dyn Write) -> Self {
        Self { out, failures: 0 }
    }

    /// Records a check.
    pub fn check(&mut self, ok: bool, name: &str, detail: impl AsRef<str>) -> CliResult<()> {
        if !ok {
            self.failures += 1;
        }
        writeln!(self.out, "{} {name}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref())?;
        Ok(())
    }

    /// Records an informational line.
    pub fn info(&mut self, name: &str, detail: impl AsRef<str>) -> CliResult<()> {
        writeln!(self.out, "INFO {name}: {}", detail.as_ref())?;
        Ok(())
    }

    /// Raw output line.
    pub fn line(&mut self, text: impl AsRef<str>) -> CliResult<()> {
        writeln!(self.out, "{}", text.as_ref())?;
        Ok(())
    }

    /// Exit code: 0 without failures.
    pub fn exit_code(&self) -> u8 {
        if self.failures == 0 {
            0
        } else {
            EXIT_ANALYSIS
        }
    }
}

/// Everything a search-and-rescue run measures for one case.
#[derive(Debug, Clone)]
pub struct SarEvaluation {
    /// The case.
    pub case: SarCase,
    /// Dead-reckoned crash site from the field office values, `(lon, lat)` east positive.
    pub crash_estimate: (f64, f64),
    /// Its distance to the true site (km).
    pub dead_reckon_error_km: f64,
    /// Consistency radius and edges of the recorded assignment.
    pub consistency: ConsistencyReport,
    /// Largest edge whose smaller stalk holds positions only.
    pub position_edge: Option<(OpenId, OpenId, f64)>,
    /// Fused field office state in recorded units.
    pub fused_field: [f64; 6],
    /// Dead-reckoned crash site of the fused state.
    pub fused_crash: (f64, f64),
    /// Its distance to the true site (km).
    pub fused_error_km: f64,
    /// Distance between the recorded and fused assignments.
    pub residual: f64,
    /// Consistency radius of the fused assignment.
    pub fused_radius: f64,
    /// Whether the optimizer met its tolerances.
    pub converged: bool,
}

fn is_position_only(sheaf: &Sheaf, open: OpenId) -> bool {
    sheaf.stalk(open).factors().iter().all(|f| matches!(f.kind, FactorKind::GeoPosition2D | FactorKind::GeoPosition3D))
}

/// Runs the consistency and fusion analysis of one case.
pub fn evaluate_sar(
    sheaf: &Sheaf,
    params: &SarParameters,
    case: &SarCase,
    settings: &FuseSettings,
) -> CliResult<SarEvaluation> {
    let a = sar_case_assignment(sheaf, case)?;
    let crash = crash_estimate(params, &field_state(&case.field));
    let consistency = consistency_radius(&a)?;
    let position_edge =
        consistency.edges.iter().find(|e| is_position_only(sheaf, e.smaller)).map(|e| (e.smaller, e.larger, e.error));
    let r = fuse_parallel(&a, &settings.options())?;
    let fused_crash = crash_estimate(params, r.section_at_x.coords());
    Ok(SarEvaluation {
        case: *case,
        crash_estimate: crash,
        dead_reckon_error_km: crash_error_km(params, crash),
        position_edge,
        fused_field: recorded_field(r.section_at_x.coords()),
        fused_crash,
        fused_error_km: crash_error_km(params, fused_crash),
        residual: r.residual,
        fused_radius: consistency_radius(&r.fused)?.radius,
        converged: r.converged,
        consistency,
    })
}

fn within_relative(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target
}

fn edge_name(sheaf: &Sheaf, smaller: OpenId, larger: OpenId) -> String {
    let o = sar_opens(sheaf.topology()).expect("search-and-rescue opens");
    let name = |id: OpenId| -> String {
        [(o.u1, "U1"), (o.u2, "U2"), (o.u3, "U3"), (o.u4, "U4"), (o.u5, "U5"), (o.x, "X")]
            .iter()
            .find(|(i, _)| *i == id)
            .map_or_else(|| sheaf.topology().key(id), |(_, n)| (*n).to_string())
    };
    format!("{}/{}", name(smaller), name(larger))
}

/// Radii of all recorded cases under the given parameters.
pub fn sar_radii(sheaf: &Sheaf) -> CliResult<Vec<f64>> {
    SAR_CASES.iter().map(|c| Ok(consistency_radius(&sar_case_assignment(sheaf, c)?)?.radius)).collect()
}

/// Whether radii satisfy `r3 ≫ r1 > r2`.
pub fn radius_ordering_holds(r: &[f64]) -> bool {
    r[2] >= ORDERING_FACTOR * r[0] && r[0] > r[1]
}

/// The search-and-rescue scenario for one case.
pub fn run_sar(case_id: u8, settings: &FuseSettings, export: Option<&Path>, out: &mut dyn Write) -> CliResult<u8> {
    let case = sar_case(case_id)
        .ok_or_else(|| CliError::invalid("scenario sar", format!("unknown case {case_id}, expected 1, 2 or 3")))?;
    let params = SarParameters::default();
    let sheaf = build_sar_sheaf(&params)?;
    let idx = usize::from(case_id - 1);
    let mut l = Ledger::new(out);
    let w = params.weights;
    l.line(format!("scenario: sar, case {case_id}"))?;
    l.line(format!(
        "weights: bearing {} km per degree, time {} km per hour, velocity {} km per km/h",
        w.bearing, w.time, w.velocity
    ))?;

    let f = sheaf.verify_functoriality(DEFAULT_CHECK_SAMPLES, settings.seed);
    let worst = f.worst().map_or(0.0, |p| p.max_discrepancy);
    l.check(f.passed(), "functoriality", format!("{}, worst discrepancy {worst:e}", count(f.checked.len(), "pair")))?;

    let e = evaluate_sar(&sheaf, &params, case, settings)?;
    let (pub_x, pub_y) = case.crash_estimate;
    let dev = (-e.crash_estimate.0 - pub_x).abs().max((e.crash_estimate.1 - pub_y).abs());
    l.check(
        dev <= CRASH_DEGREE_TOLERANCE,
        "crash estimate",
        format!(
            "({:.4}°W, {:.4}°N) vs published ({pub_x:.4}°W, {pub_y:.4}°N), largest deviation {dev:.4}° (tolerance {CRASH_DEGREE_TOLERANCE}°)",
            -e.crash_estimate.0, e.crash_estimate.1
        ),
    )?;
    l.check(
        (e.dead_reckon_error_km - case.error_km).abs() <= ERROR_KM_TOLERANCE,
        "dead-reckoning error",
        format!(
            "{:.2} km vs published {} km (tolerance {ERROR_KM_TOLERANCE} km)",
            e.dead_reckon_error_km, case.error_km
        ),
    )?;
    l.check(
        within_relative(e.consistency.radius, case.radius_km, RADIUS_RELATIVE_TOLERANCE),
        "consistency radius",
        format!(
            "{:.2} km vs published {} km (tolerance ±{:.0}%)",
            e.consistency.radius,
            case.radius_km,
            RADIUS_RELATIVE_TOLERANCE * 100.0
        ),
    )?;
    match e.position_edge {
        Some((s, g, v)) => l.check(
            within_relative(v, case.radius_km, POSITION_EDGE_RELATIVE_TOLERANCE),
            "largest position edge",
            format!(
                "{} {:.2} km vs published radius {} km (tolerance ±{:.0}%)",
                edge_name(&sheaf, s, g),
                v,
                case.radius_km,
                POSITION_EDGE_RELATIVE_TOLERANCE * 100.0
            ),
        )?,
        None => l.check(false, "largest position edge", "no position edge in the assignment")?,
    }
    let top: Vec<String> = e
        .consistency
        .edges
        .iter()
        .take(4)
        .map(|x| format!("{} {:.2}", edge_name(&sheaf, x.smaller, x.larger), x.error))
        .collect();
    l.info("largest edges", top.join(", "))?;
    let o = sar_opens(sheaf.topology())?;
    let rank_of = |smaller: OpenId, larger: OpenId| {
        e.consistency.edges.iter().position(|x| x.smaller == smaller && x.larger == larger)
    };
    match case_id {
        1 => {
            let fp = rank_of(o.u1, o.u2);
            let sat = rank_of(o.u5, o.x);
            let ok = matches!((fp, sat), (Some(a), Some(b)) if a < 2 && b < 2);
            l.check(
                ok,
                "dominant edges",
                "U1/U2 (flight plan vs ATC) and U5/X (satellite vs field office) are the two largest",
            )?;
        }
        2 => {
            let ok = rank_of(o.u4, o.x) == Some(0);
            l.check(ok, "dominant edges", "U4/X (direction finder 2 vs field office) is the largest")?;
        }
        _ => {}
    }
    let radii = sar_radii(&sheaf)?;
    l.check(
        radius_ordering_holds(&radii),
        "radius ordering",
        format!(
            "case 3 ≥ {ORDERING_FACTOR}× case 1 > case 2 with radii {:.2}, {:.2}, {:.2} km",
            radii[0], radii[1], radii[2]
        ),
    )?;

    let fmt_field = |v: &[f64; 6]| {
        format!("{:.4}°W {:.4}°N {:.0} m v_x {:.1} v_y {:.1} t {:.3}", v[0], v[1], v[2], v[3], v[4], v[5])
    };
    l.info("fused field office", fmt_field(&e.fused_field))?;
    l.info("published fused field office", fmt_field(&case.fused.field))?;
    l.info(
        "fused crash estimate",
        format!(
            "({:.4}°W, {:.4}°N) vs published ({:.4}°W, {:.4}°N)",
            -e.fused_crash.0, e.fused_crash.1, case.fused.crash.0, case.fused.crash.1
        ),
    )?;
    l.info(
        "fusion residual",
        format!("{:.2} (optimizer converged: {})", e.residual, if e.converged { "yes" } else { "no" }),
    )?;
    let limit = FUSED_ERROR_LIMITS[idx];
    l.check(
        e.fused_error_km <= limit,
        "fused error",
        format!("{:.2} km (limit {limit} km, published {} km)", e.fused_error_km, case.fused.error_km),
    )?;
    let factor = e.dead_reckon_error_km / e.fused_error_km;
    l.check(
        e.fused_error_km < e.dead_reckon_error_km && factor >= IMPROVEMENT_FACTORS[idx],
        "fusion improvement",
        format!(
            "{:.2} km to {:.2} km, factor {factor:.2} (needs at least {})",
            e.dead_reckon_error_km, e.fused_error_km, IMPROVEMENT_FACTORS[idx]
        ),
    )?;
    l.check(
        e.fused_radius <= GLOBAL_TOLERANCE,
        "fused assignment is a global section",
        format!("consistency radius {:e}", e.fused_radius),
    )?;

    if let Some(dir) = export {
        write_spec(&dir.join("sar.json"), &SheafSpec::from_sheaf(&sheaf))?;
        let a = sar_case_assignment(&sheaf, case)?;
        write_file(&dir.join(format!("sar_case{case_id}.csv")), |buf| write_assignment(&a, buf))?;
        l.info("export", format!("wrote sar.json and sar_case{case_id}.csv to {}", dir.display()))?;
    }
    Ok(l.exit_code())
}

/// The obstacle scenario: cohomology and Leray checks for the mosaic and summary sheaves.
pub fn run_obstacle(params: ObstacleParams, export: Option<&Path>, out: &mut dyn Write) -> CliResult<u8> {
    let (m, p) = build_obstacle_sheaves(params)?;
    let mut l = Ledger::new(out);
    l.line(format!("scenario: obstacle, pixels m={} n={} p={} q={}", params.m, params.n, params.p, params.q))?;

    let cover_p = obstacle_cover(p.topology())?;
    let c = build_complex(&p, &cover_p, 1)?;
    let b = c.betti().betti_numbers();
    l.check(b == [3, 1], "betti of P on {U_L, U_R}", format!("{b:?}, expected [3, 1]"))?;
    l.check(
        c.cochain_dim(0) == 4 && c.cochain_dim(1) == 2,
        "cochain dimensions of P",
        format!("C0 {} (expected 4), C1 {} (expected 2)", c.cochain_dim(0), c.cochain_dim(1)),
    )?;
    let h0 = global_sections_via_h0(&p)?.cols();
    l.check(h0 == 3, "global sections of P", format!("dimension {h0}, expected 3"))?;
    for (name, s) in [("M", &m), ("P", &p)] {
        let (r, cover) = overlap_refinement(s)?;
        let b = betti(&r, &cover, 2)?.betti_numbers();
        l.check(b[1..].iter().all(|&x| x == 0), &format!("betti of {name} on the refined cover"), format!("{b:?}"))?;
    }
    let leray_m = leray_check(&m, &obstacle_cover(m.topology())?, 2)?;
    l.check(
        leray_m.certified(),
        "Leray cover for M",
        format!(
            "verdict {}, cover betti {:?}, topology betti {:?}",
            leray_m.verdict,
            leray_m.cover_betti.betti_numbers(),
            leray_m.topology_betti.betti_numbers()
        ),
    )?;
    let leray_p = leray_check(&p, &cover_p, 2)?;
    l.info(
        "Leray cover for P",
        format!(
            "verdict {}, cover betti {:?}, topology betti {:?}",
            leray_p.verdict,
            leray_p.cover_betti.betti_numbers(),
            leray_p.topology_betti.betti_numbers()
        ),
    )?;
    let s = pseudocircle_suspension()?;
    let r = leray_check(&s, &Cover::subbase(s.topology()), 2)?;
    let witnesses: Vec<String> =
        r.witnesses().map(|w| format!("{} betti {:?}", s.topology().key(w.open), w.betti)).collect();
    l.check(
        !r.verdict && !witnesses.is_empty(),
        "Leray failure on the suspended pseudocircle",
        format!("witnesses: {}", witnesses.join("; ")),
    )?;

    if let Some(dir) = export {
        write_spec(&dir.join("obstacle_m.json"), &SheafSpec::from_sheaf(&m))?;
        write_spec(&dir.join("obstacle_p.json"), &SheafSpec::from_sheaf(&p))?;
        l.info("export", format!("wrote obstacle_m.json and obstacle_p.json to {}", dir.display()))?;
    }
    Ok(l.exit_code())
}

fn camera_assignment<'s>(sheaf: &'s Sheaf, left: Vec<f64>, right: Vec<f64>) -> CliResult<Assignment<'s>> {
    let t = sheaf.topology();
    let (l, r, mid) = (t.open_by_key("left+mid")?, t.open_by_key("mid+right")?, t.open_by_key("mid")?);
    let shared = sheaf.restrict_coords(l, mid, &left)?;
    let mut a = Assignment::new(sheaf);
    a.set(l, left)?;
    a.set(r, right)?;
    a.set(mid, shared)?;
    Ok(a)
}

/// The coin scenario: the three overlap processing choices.
pub fn run_coins(export: Option<&Path>, out: &mut dyn Write) -> CliResult<u8> {
    let mut l = Ledger::new(out);
    l.line("scenario: coins")?;
    let shared = [[1.0, 0.0, 2.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
    for (name, variant) in
        [("mosaic", CoinVariant::Mosaic), ("counts", CoinVariant::Counts), ("value", CoinVariant::Value)]
    {
        let s = build_coin_sheaf(variant)?;
        let g = s.verify_gluing()?;
        l.check(g.passed(), &format!("{name}: gluing"), count(g.pairs.len(), "pair"))?;
        let a = camera_assignment(
            &s,
            detections(&[shared[0], shared[1], [4.0, 0.0, 0.0, 0.0]]),
            detections(&[shared[0], shared[1], [0.0, 0.0, 3.0, 0.0]]),
        )?;
        let r = consistency_radius(&a)?.radius;
        l.check(r == 0.0, &format!("{name}: agreeing views"), format!("consistency radius {r}"))?;
        if let Some(dir) = export {
            write_spec(&dir.join(format!("coins_{name}.json")), &SheafSpec::from_sheaf(&s))?;
        }
    }
    let value = build_coin_sheaf(CoinVariant::Value)?;
    let t = value.topology();
    let cents = value.restrict_coords(
        t.open_by_key("left+mid")?,
        t.open_by_key("mid")?,
        &detections(&[[3.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 2.0]]),
    )?[0];
    l.check(
        cents == 58.0 && coin_value(&[3.0, 1.0, 0.0, 2.0]) == 58.0,
        "value of counts (3, 1, 0, 2)",
        format!("{cents} cents, expected 58"),
    )?;
    let counts = build_coin_sheaf(CoinVariant::Counts)?;
    let a = camera_assignment(&counts, detections(&[[3.0, 1.0, 0.0, 2.0]]), detections(&[[3.0, 1.0, 0.0, 0.0]]))?;
    let r = consistency_radius(&a)?.radius;
    l.check(
        (r - 2.0).abs() <= 1e-12,
        "conflicting counts",
        format!(
            "consistency radius {r}, count vectors differ by {}",
            euclidean_distance(&[3.0, 1.0, 0.0, 2.0], &[3.0, 1.0, 0.0, 0.0])
        ),
    )?;
    Ok(l.exit_code())
}

fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_counts_failures() {
        let mut buf = Vec::new();
        let mut l = Ledger::new(&mut buf);
        l.check(true, "a", "fine").unwrap();
        l.info("b", "note").unwrap();
        assert_eq!(l.exit_code(), 0);
        l.check(false, "c", "broken").unwrap();
        assert_eq!(l.exit_code(), EXIT_ANALYSIS);
        assert_eq!(String::from_utf8(buf).unwrap(), "PASS a: fine\nINFO b: note\nFAIL c: broken\n");
    }

    #[test]
    fn ordering_needs_a_wide_margin() {
        assert!(radius_ordering_holds(&[15.0, 11.0, 150.0]));
        assert!(!radius_ordering_holds(&[15.0, 11.0, 29.0]));
        assert!(!radius_ordering_holds(&[11.0, 15.0, 150.0]));
    }

    #[test]
    fn relative_tolerance_is_symmetric() {
        assert!(within_relative(12.0, 10.0, 0.2));
        assert!(within_relative(8.0, 10.0, 0.2));
        assert!(!within_relative(12.5, 10.0, 0.2));
    }

    #[test]
    fn obstacle_and_coin_scenarios_pass() {
        let mut out = Vec::new();
        assert_eq!(run_obstacle(ObstacleParams::default(), None, &mut out).unwrap(), 0);
        assert_eq!(run_coins(None, &mut out).unwrap(), 0, "{}", String::from_utf8_lossy(&out));
    }

    #[test]
    fn unknown_case_is_rejected() {
        let mut out = Vec::new();
        assert!(matches!(run_sar(4, &FuseSettings::default(), None, &mut out), Err(CliError::Invalid { .. })));
    }

    #[test]
    fn fused_sar_state_is_a_global_section() {
        let params = SarParameters::default();
        let sheaf = build_sar_sheaf(&params).unwrap();
        let e = evaluate_sar(&sheaf, &params, &SAR_CASES[0], &FuseSettings::default()).unwrap();
        assert!(e.fused_radius <= GLOBAL_TOLERANCE);
        assert!(e.fused_error_km < e.dead_reckon_error_km);
        let (s, l, _) = e.position_edge.unwrap();
        assert_eq!(edge_name(&sheaf, s, l), "U5/X");
    }
}
