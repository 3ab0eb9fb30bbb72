use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use mpass_core::action::{geometry_constants_unchecked, ActionContext, GeometryConstants};
use mpass_core::continuation::{
    run_sequence, tail_profile, ContinuationConfig, ContinuationReport, TailBand, DEFAULT_LADDER,
};
use mpass_core::mpa::{refinement_check, solve_mountain_pass, Bracket, MpaConfig, NewtonConfig, RefinementCheck, SolveReport};
use mpass_core::potential::{check_admissibility, estimate_constants, HypothesisReport, PotentialSpec, Verdict};
use mpass_core::{Error, TimeGrid};

use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::plot;

pub const REPORT_FILE: &str = "report.json";
/// Outermost-band derivative bound required of the largest ladder entry.
pub const DERIVATIVE_CERTIFICATE_TOL: f64 = 1e-2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn spec(message: String) -> Self {
        Self { code: 2, message }
    }

    fn stage(stage: &str, message: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("{stage}: {message}"),
        }
    }
}

/// Malformed inputs exit with 2, everything else with 1.
fn classify(stage: &str, e: Error) -> Failure {
    match e {
        Error::SpecFile(_)
        | Error::Expression(_)
        | Error::UnknownExample(_)
        | Error::NonFiniteSample { .. }
        | Error::NonIntegrableSuspected { .. }
        | Error::InvalidGrid(_)
        | Error::InvalidConfig(_) => Failure::spec(format!("{stage}: {e}")),
        other => Failure::stage(stage, other),
    }
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::stage("output", e)
}

pub fn execute(m: &RunManifest) -> Result<(), Failure> {
    std::fs::create_dir_all(&m.out).map_err(io)?;
    m.write(&m.out).map_err(io)?;
    let spec = m.potential().map_err(|e| classify("spec", e))?;
    let report = estimate_constants(&spec, &m.audit_config()).map_err(|e| classify("audit", e))?;
    let verdict = check_admissibility(&report);
    match m.subcommand.as_str() {
        "check" => check(m, &report, &verdict),
        "solve" => solve(m, &spec, report, &verdict),
        "continuation" => continuation(m, &spec, &report, &verdict),
        other => Err(Failure::spec(format!("unknown subcommand {other:?}"))),
    }
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(io)? + "\n";
    std::fs::write(dir.join(name), text).map_err(io)
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    hypotheses: &'a HypothesisReport,
    verdict: &'a Verdict,
}

fn check(m: &RunManifest, report: &HypothesisReport, verdict: &Verdict) -> Result<(), Failure> {
    print_table(report, verdict);
    write_json(&m.out, REPORT_FILE, &CheckOutput { hypotheses: report, verdict })?;
    match verdict {
        Verdict::Admissible => Ok(()),
        Verdict::Rejected(reasons) => Err(Failure::stage("check", format!("rejected: {}", reasons.join("; ")))),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn print_table(r: &HypothesisReport, verdict: &Verdict) {
    let p = &r.passes;
    println!("potential: {} (n = {})", r.spec_name, r.dim);
    println!("{:<34} {:>14}  {}", "quantity", "estimate", "flag");
    let rows: [(&str, f64, &str); 12] = [
        ("b1 (inf K/|q|^2)", r.b1_hat, flag(p.c2)),
        ("b2 (sup K/|q|^2)", r.b2_hat, flag(p.c2)),
        ("min (q,grad K)/K", r.c3_min, flag(p.c3)),
        ("max (q,grad K)/K", r.c3_max, flag(p.c3)),
        ("mu (inf (q,grad W)/W)", r.mu_hat, flag(p.c5)),
        ("m (inf W on |q| = 1)", r.m_hat, flag(p.c6)),
        ("M (sup W on |q| = 1)", r.big_m_hat, flag(p.m_below_half_bbar1)),
        ("bbar1 = min(1, 2 b1)", r.bbar1, ""),
        ("bbar2 = max(1, 2 b2)", r.bbar2, ""),
        ("declared mu", r.declared_mu, ""),
        ("||f||_L2", r.force_l2, flag(p.forcing_within_budget)),
        ("budget (sqrt2/4)(bbar1 - 2M)", r.force_budget, flag(p.forcing_within_budget)),
    ];
    for (name, v, f) in rows {
        println!("{name:<34} {v:>14.9}  {f}");
    }
    println!("{:<34} {:>14}  {}", "(C1) gradients bounded", "sampled", flag(p.c1));
    println!("{:<34} {:>14}  {}", "(C4) grad W = o(|q|)", "sampled", flag(p.c4));
    println!(
        "forcing: ||f|| = {:.6} vs budget = {:.6} ({})",
        r.force_l2,
        r.force_budget,
        if r.force_l2 < r.force_budget { "within" } else { "exceeds" }
    );
    for note in &r.notes {
        println!("note: {note}");
    }
    match verdict {
        Verdict::Admissible => println!("verdict: admissible"),
        Verdict::Rejected(reasons) => {
            println!("verdict: rejected");
            for reason in reasons {
                println!("  - {reason}");
            }
        }
    }
}

fn gate(m: &RunManifest, verdict: &Verdict) -> Result<(), Failure> {
    if let Verdict::Rejected(reasons) = verdict {
        if m.force {
            eprintln!("warning: hypotheses rejected, continuing because of --force (results are not covered by the theory)");
            for r in reasons {
                eprintln!("  - {r}");
            }
        } else {
            return Err(Failure::stage(
                "admissibility",
                format!("{} (use --force to run anyway)", reasons.join("; ")),
            ));
        }
    }
    Ok(())
}

fn mpa_config(m: &RunManifest) -> MpaConfig {
    MpaConfig {
        tol_grad: m.tol_grad,
        newton: NewtonConfig {
            tol_residual: m.tol_residual,
            ..NewtonConfig::default()
        },
        ..MpaConfig::default()
    }
}

#[derive(Serialize)]
struct Bounds {
    alpha: f64,
    #[serde(rename = "M0")]
    m0: f64,
    #[serde(rename = "M1")]
    m1: f64,
    zeta_star: f64,
}

impl Bounds {
    fn of(g: &GeometryConstants) -> Self {
        Self {
            alpha: g.alpha,
            m0: g.m0,
            m1: g.m1,
            zeta_star: g.zeta_star,
        }
    }
}

#[derive(Serialize)]
struct SolveOutput {
    spec_name: String,
    admissible: bool,
    forced: bool,
    k: f64,
    h: f64,
    bounds: Bounds,
    norm_ek: f64,
    m1_check: bool,
    solve: SolveReport,
    refinement: Option<RefinementCheck>,
    passed: bool,
    failure: Option<String>,
}

fn geometry(m: &RunManifest, spec: &PotentialSpec, report: &HypothesisReport) -> Result<GeometryConstants, Failure> {
    let grid1 = TimeGrid::with_step(1.0, m.h).map_err(|e| classify("grid", e))?;
    let ctx1 = ActionContext::new(spec.clone(), grid1);
    let g = geometry_constants_unchecked(&ctx1, report).map_err(|e| classify("geometry", e))?;
    if m.dump_geometry {
        write_json(&m.out, "geometry.json", &g)?;
    }
    Ok(g)
}

fn solve(m: &RunManifest, spec: &PotentialSpec, report: HypothesisReport, verdict: &Verdict) -> Result<(), Failure> {
    gate(m, verdict)?;
    let k = m.k.ok_or_else(|| Failure::spec("solve needs --k".into()))?;
    let g = geometry(m, spec, &report)?;
    let grid = TimeGrid::with_step(k, m.h).map_err(|e| classify("grid", e))?;
    let ctx = ActionContext::new(spec.clone(), grid).with_report(Arc::new(report));
    let endpoint = g.endpoint(&grid).map_err(|e| classify("geometry", e))?;
    let cfg = mpa_config(m);
    let bracket = Bracket {
        alpha: g.alpha,
        m0: g.m0,
    };
    let outcome = solve_mountain_pass(&ctx, &endpoint, bracket, &cfg).map_err(|e| classify("mountain pass", e))?;
    let r = outcome.report;
    let mut failure = None;
    if !r.converged {
        failure = Some(format!(
            "mountain pass: not converged ({:?}; gradient {:.3e}, residual {:.3e})",
            r.status, r.grad_norm, r.residual_sup
        ));
    }
    let refinement = if r.converged {
        let check = refinement_check(&ctx, &r.q_k, &cfg.newton).map_err(|e| classify("refinement", e))?;
        if !(check.gap <= m.tol_refine) {
            failure = Some(format!(
                "refinement: residual too large for h = {}: sup|q_h - q_h/2| = {:.3e} exceeds {:.1e} (|I_h - I_h/2| = {:.3e}); the grid is too coarse",
                m.h, check.gap, m.tol_refine, check.action_gap
            ));
        }
        Some(check)
    } else {
        None
    };
    let norm_ek = r.q_k.norm_ek();
    let csv = "q_k.csv";
    std::fs::write(m.out.join(csv), r.q_k.to_csv()).map_err(io)?;
    std::fs::write(m.out.join("plot.gp"), plot::single(csv, r.q_k.dim(), k)).map_err(io)?;
    println!(
        "k = {k}: c_k = {:.12}, |q_k|_E = {:.9}, grad = {:.3e}, residual = {:.3e}, path iterations = {}, Newton iterations = {}",
        r.c_k, norm_ek, r.grad_norm, r.residual_sup, r.outer_iterations, r.newton_iterations
    );
    println!(
        "bracket: alpha = {:.6} <= c_k <= M0 = {:.6} ({}/{}); |q_k|_E <= M1 = {:.6} ({})",
        g.alpha,
        g.m0,
        flag(r.alpha_check),
        flag(r.m0_check),
        g.m1,
        flag(norm_ek <= g.m1 + 1e-6)
    );
    let out = SolveOutput {
        spec_name: spec.name.clone(),
        admissible: verdict.is_admissible(),
        forced: m.force,
        k,
        h: m.h,
        bounds: Bounds::of(&g),
        norm_ek,
        m1_check: norm_ek <= g.m1 + 1e-6,
        passed: failure.is_none(),
        failure: failure.clone(),
        refinement,
        solve: r,
    };
    write_json(&m.out, REPORT_FILE, &out)?;
    match failure {
        None => Ok(()),
        Some(f) => Err(Failure { code: 1, message: f }),
    }
}

#[derive(Serialize)]
struct ContinuationOutput {
    admissible: bool,
    forced: bool,
    bounds: Bounds,
    continuation: ContinuationReport,
    /// Bands of the largest half-period, from the boundary inward.
    tail_profile: Vec<TailBand>,
    derivative_certificate: bool,
    passed: bool,
}

fn ladder_of(m: &RunManifest) -> Vec<f64> {
    let base = m.ladder.clone().unwrap_or_else(|| DEFAULT_LADDER.to_vec());
    match m.k {
        Some(limit) => base.into_iter().filter(|k| *k <= limit).collect(),
        None => base,
    }
}

fn csv_name(k: f64) -> String {
    format!("q_k{k}.csv")
}

fn continuation(m: &RunManifest, spec: &PotentialSpec, report: &HypothesisReport, verdict: &Verdict) -> Result<(), Failure> {
    gate(m, verdict)?;
    let ladder = ladder_of(m);
    let g = geometry(m, spec, report)?;
    let cfg = ContinuationConfig {
        step: m.h,
        mpa: mpa_config(m),
        force: m.force,
        ..ContinuationConfig::default()
    };
    let outcome = run_sequence(spec, report, &ladder, &cfg).map_err(|e| classify("continuation", e))?;
    let rep = outcome.report;
    let mut files = Vec::new();
    for (k, s) in ladder.iter().zip(&outcome.solves) {
        if let Some(s) = s {
            let name = csv_name(*k);
            std::fs::write(m.out.join(&name), s.q_k.to_csv()).map_err(io)?;
            files.push((*k, name));
        }
    }
    let window = cfg.window.unwrap_or_else(|| 10f64.min(ladder[0]));
    std::fs::write(m.out.join("plot.gp"), plot::overlay(&files, window)).map_err(io)?;
    let tail = outcome
        .solves
        .last()
        .and_then(|s| s.as_ref())
        .map(|s| tail_profile(&s.q_k, cfg.margin))
        .unwrap_or_default();
    let derivative_certificate = tail.first().is_some_and(|b| b.bound <= DERIVATIVE_CERTIFICATE_TOL && b.sup_qdot <= b.bound);
    for r in &rep.records {
        println!(
            "k = {:>7}: c_k = {:.12}, |q_k|_E = {:.9}, residual = {:.3e}, tail |q| = {:.3e}, tail |q'| = {:.3e}{}",
            r.k,
            r.c_k,
            r.norm_ek,
            r.residual_sup,
            r.tail_sup_q,
            r.tail_sup_qdot,
            r.failure.as_ref().map(|f| format!(" [{f}]")).unwrap_or_default()
        );
    }
    for d in &rep.window_distances {
        println!(
            "window [-{}, {}] k = {} -> {}: |dq| = {:.3e}, |dq'| = {:.3e}, |dq''| = {:.3e}",
            d.window, d.window, d.k_from, d.k_to, d.q, d.qdot, d.qddot
        );
    }
    println!("verdicts: {:?}; derivative certificate: {}", rep.verdicts, flag(derivative_certificate));
    let passed = rep.verdicts.all() && derivative_certificate;
    let out = ContinuationOutput {
        admissible: verdict.is_admissible(),
        forced: m.force,
        bounds: Bounds::of(&g),
        continuation: rep,
        tail_profile: tail,
        derivative_certificate,
        passed,
    };
    write_json(&m.out, REPORT_FILE, &out)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::stage("continuation", "ladder verdicts failed"))
    }
}

pub fn replay(manifest_path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut m = RunManifest::load(manifest_path).map_err(|e| classify("manifest", e))?;
    let original_dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let target = out.unwrap_or_else(|| original_dir.join("replay"));
    m.out = target.clone();
    let rerun = execute(&m);
    let before = std::fs::read(original_dir.join(REPORT_FILE)).map_err(io)?;
    let after = std::fs::read(target.join(REPORT_FILE)).map_err(io)?;
    if before == after {
        println!("replay: {REPORT_FILE} reproduced bit-for-bit ({} bytes)", after.len());
        rerun
    } else {
        Err(Failure::stage(
            "replay",
            format!(
                "{REPORT_FILE} differs from the recorded run (see {} and {})",
                original_dir.join(REPORT_FILE).display(),
                target.join(MANIFEST_FILE).display()
            ),
        ))
    }
}
