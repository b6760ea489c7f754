use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use vcausal_core::behavior::Fixed;
use vcausal_core::certifier::{abd_acd_marginals, marginal_feasibility, maximize_s};
use vcausal_core::io::{behavior_to_json, parse_behavior, parse_config, parse_quantum_model, FileProb};
use vcausal_core::lp::{verify, Certificate, LinearProgram, SolveStats};
use vcausal_core::num_rational::BigRational;
use vcausal_core::prob::{fmt_rational, parse_rational, rat};
use vcausal_core::spacetime::{
    ordering_protocol_check, scan_frames, speed_bound, triangle_config, v_connected, validate_config, Event,
    FrameBoost, C,
};
use vcausal_core::vcausal::{analytic_success, ghz_protocol, signalling_speed, Message};
use vcausal_core::{build_paper_model, is_local_2222, Behavior, InequalityS, Prob};

use crate::report::{fmt_f64, RunReport};
use crate::{Cli, Command, MessageArg};

fn party_name(p: usize) -> char {
    (b'A' + p as u8) as char
}

fn read(path: &Path, report: &mut RunReport) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    report.input(&text);
    Ok(text)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let name = match &cli.command {
        Command::QuantumS { .. } => "quantum-s",
        Command::CertifyBound { .. } => "certify-bound",
        Command::CheckBehavior { .. } => "check-behavior",
        Command::GhzProtocol { .. } => "ghz-protocol",
        Command::SpeedBound { .. } => "speed-bound",
        Command::ValidateConfig { .. } => "validate-config",
    };
    let mut report = RunReport::new(name, cli.seed);
    for arg in std::env::args().skip(1) {
        report.input(arg);
    }
    match &cli.command {
        Command::QuantumS { state_file, dump_behavior } => {
            quantum_s(cli, &mut report, state_file.as_deref(), dump_behavior.as_deref())?
        }
        Command::CertifyBound { ns_only, marginals_from_quantum, radius, certificate_out } => {
            certify_bound(&mut report, *ns_only, *marginals_from_quantum, radius, certificate_out.as_deref())?
        }
        Command::CheckBehavior { path } => {
            let text = read(path, &mut report)?;
            if cli.rational {
                check_behavior::<BigRational>(&mut report, &text, &BigRational::from_f64(cli.tol))?
            } else {
                check_behavior::<f64>(&mut report, &text, &cli.tol)?
            }
        }
        Command::GhzProtocol { rounds, trials, message, v_over_c, length, separation } => {
            if *rounds == 0 {
                bail!("--rounds must be at least 1");
            }
            ghz(&mut report, cli.seed, *rounds, *trials, *message, (*v_over_c, *length, *separation))?
        }
        Command::SpeedBound { d, dt, t, scan, beta_max, speeds, polar, azimuth } => {
            speed(&mut report, *d, *dt, *t, scan.then_some((*beta_max, *speeds, *polar, *azimuth)))?
        }
        Command::ValidateConfig { path, choices } => validate(&mut report, path, choices.as_deref())?,
    }
    Ok(report)
}

fn quantum_s(cli: &Cli, report: &mut RunReport, state_file: Option<&Path>, dump: Option<&Path>) -> Result<()> {
    let model = match state_file {
        Some(p) => parse_quantum_model(&read(p, report)?)?,
        None => build_paper_model(),
    };
    let s = InequalityS::four_party();
    for term in s.terms() {
        let value = model.expectation(&term.factors)?;
        report.float("quantum", format!("{} <{}>", fmt_rational(&term.coefficient), term.label()), value);
    }
    let s_op = s.evaluate_quantum(&model)?;
    let behavior = model.behavior();
    let s_beh = s.evaluate(&behavior, &cli.tol)?;
    report.float("inequality", "S (operator path)", s_op);
    report.float("inequality", "S (behavior path)", s_beh);
    if cli.rational {
        let exact = s.evaluate_at(&behavior.to_rational(), &[0; 4])?;
        report.quantity("inequality", "S (exact, binary behavior)", fmt_rational(&exact));
    }
    report.check("S > 7", s_op > 7.0);
    report.check("evaluation paths agree within 1e-10", (s_op - s_beh).abs() <= 1e-10);
    if let Some(out) = dump {
        let text = if cli.rational { behavior_to_json(&behavior.to_rational()) } else { behavior_to_json(&behavior) };
        write(out, &text)?;
        report.note(format!("behavior written to {}", out.display()));
    }
    Ok(())
}

fn lp_stats(report: &mut RunReport, stats: &SolveStats) {
    report.quantity("certifier", "tableau", format!("{} rows x {} columns", stats.rows, stats.cols));
    report.quantity("certifier", "pivots", stats.pivots.to_string());
}

fn record_certificate(
    report: &mut RunReport,
    program: &LinearProgram,
    cert: &Certificate,
    out: Option<&Path>,
) -> Result<bool> {
    let verified = verify(program, cert);
    report.quantity(
        "certifier",
        "certificate",
        match &verified {
            Ok(()) => "verified".to_string(),
            Err(e) => format!("rejected: {e}"),
        },
    );
    if let Some(path) = out {
        write(path, &serde_json::to_string_pretty(cert)?)?;
        report.note(format!("certificate written to {}", path.display()));
    }
    Ok(verified.is_ok())
}

fn certify_bound(
    report: &mut RunReport,
    ns_only: bool,
    from_quantum: bool,
    radius: &str,
    out: Option<&Path>,
) -> Result<()> {
    if from_quantum {
        let r = parse_rational(radius).filter(|r| *r >= rat(0, 1)).context("--radius must be a nonnegative number")?;
        let q = build_paper_model().behavior().to_rational();
        let (abd, acd) = abd_acd_marginals(&q)?;
        report.quantity("certifier", "marginal radius", fmt_rational(&r));
        let result = marginal_feasibility(&abd, &acd, &r)?;
        lp_stats(report, &result.stats);
        report.quantity(
            "certifier",
            "status",
            if result.is_feasible() { "FEASIBLE" } else { "INFEASIBLE" },
        );
        let verified = record_certificate(report, &result.program, &result.certificate, out)?;
        report.check("quantum marginals are infeasible", !result.is_feasible());
        report.check("certificate verified", verified);
        return Ok(());
    }
    let bound = maximize_s(!ns_only)?;
    lp_stats(report, &bound.stats);
    let optimum = bound.optimum().cloned().context("the S program is always feasible")?;
    report.quantity("certifier", "optimum", fmt_rational(&optimum));
    report.float("certifier", "optimum (decimal)", optimum.to_f64());
    let verified = record_certificate(report, &bound.program, &bound.certificate, out)?;
    report.check("certificate verified", verified);
    if ns_only {
        report.check("optimum >= 36/5", optimum >= rat(36, 5));
    } else {
        report.check("optimum = 7/1", optimum == rat(7, 1));
    }
    Ok(())
}

fn check_behavior<T: FileProb>(report: &mut RunReport, text: &str, tol: &T) -> Result<()> {
    let b: Behavior<T> = parse_behavior(text, tol)?;
    report.quantity("behavior", "parties", b.parties().to_string());
    report.quantity("behavior", "settings", format!("{:?}", b.settings()));
    report.quantity("behavior", "outcomes", format!("{:?}", b.outcomes()));
    report.check("normalized and nonnegative", true);

    let ns = b.no_signalling_check(tol);
    for e in &ns.entries {
        let names: String = e.receivers.iter().map(|&p| party_name(p)).collect();
        report.note(format!(
            "signalling: {names} marginal depends on {}'s setting (variation {})",
            party_name(e.source),
            fmt_f64(e.variation.to_f64())
        ));
    }
    report.quantity("behavior", "signalling entries", ns.entries.len().to_string());
    report.check("no-signalling", ns.is_empty());

    let shape_4222 = b.parties() == 4 && b.is_binary() && b.settings().iter().all(|&k| k == 2);
    if shape_4222 {
        let s = InequalityS::four_party();
        match s.evaluate(&b, tol) {
            Ok(v) => report.float("inequality", "S", v.to_f64()),
            Err(_) => {
                let v = s.evaluate_at(&b, &[0; 4])?;
                report.float("inequality", "S (absent parties at setting 0)", v.to_f64());
            }
        }
    }
    locality(report, &b, tol);
    Ok(())
}

/// 2-party locality verdicts for every pair of parties, conditioned on every
/// setting/outcome assignment of the remaining parties.
fn locality<T: FileProb>(report: &mut RunReport, b: &Behavior<T>, tol: &T) {
    let n = b.parties();
    let binary2 = |p: usize| b.settings()[p] == 2 && b.outcomes()[p] == 2;
    let (mut local, mut nonlocal, mut signalling, mut skipped) = (0, 0, 0, 0);
    for i in 0..n {
        for j in i + 1..n {
            if !binary2(i) || !binary2(j) {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&p| p != i && p != j).collect();
            let radices: Vec<usize> = others.iter().flat_map(|&p| [b.settings()[p], b.outcomes()[p]]).collect();
            let combos: usize = radices.iter().product();
            for k in 0..combos {
                let mut digits = Vec::with_capacity(radices.len());
                let mut rest = k;
                for &r in radices.iter().rev() {
                    digits.push(rest % r);
                    rest /= r;
                }
                digits.reverse();
                let fixed: Vec<Fixed> = others
                    .iter()
                    .enumerate()
                    .map(|(m, &party)| Fixed { party, setting: digits[2 * m], outcome: digits[2 * m + 1] })
                    .collect();
                let cond = if fixed.is_empty() { Ok(b.clone()) } else { b.condition(&fixed) };
                let Ok(cond) = cond else {
                    skipped += 1;
                    continue;
                };
                let context: String = fixed
                    .iter()
                    .map(|f| format!(" {}{}={}", party_name(f.party), f.setting, if f.outcome == 0 { "+1" } else { "-1" }))
                    .collect();
                match is_local_2222(&cond, tol) {
                    Ok(v) if v.local => local += 1,
                    Ok(v) => {
                        nonlocal += 1;
                        let (id, value) = v.witness.expect("nonlocal verdict has a witness");
                        report.note(format!(
                            "nonlocal: {}{} given{context}: CH facet {id} = {}",
                            party_name(i),
                            party_name(j),
                            fmt_f64(value.to_f64())
                        ));
                    }
                    Err(_) => signalling += 1,
                }
            }
        }
    }
    report.quantity("ch", "local 2-party conditionals", local.to_string());
    report.quantity("ch", "nonlocal 2-party conditionals", nonlocal.to_string());
    report.quantity("ch", "signalling 2-party conditionals", signalling.to_string());
    report.quantity("ch", "zero-probability conditions", skipped.to_string());
}

fn ghz(
    report: &mut RunReport,
    seed: u64,
    rounds: u32,
    trials: u64,
    message: MessageArg,
    geometry: (f64, f64, f64),
) -> Result<()> {
    report.quantity("vcausal", "rounds", rounds.to_string());
    report.quantity("vcausal", "trials per message", trials.to_string());
    report.quantity("vcausal", "analytic success (uniform prior)", fmt_rational(&analytic_success(rounds)));
    let messages: &[Message] = match message {
        MessageArg::Yes => &[Message::Yes],
        MessageArg::No => &[Message::No],
        MessageArg::Both => &[Message::Yes, Message::No],
    };
    for (k, &m) in messages.iter().enumerate() {
        let r = ghz_protocol(rounds, m, trials, seed.wrapping_add(k as u64));
        let tag = match m {
            Message::Yes => "yes",
            Message::No => "no",
        };
        report.quantity("vcausal", format!("errors | {tag}"), r.errors.to_string());
        report.float("vcausal", format!("empirical P(error | {tag})"), r.empirical_error_rate);
        report.float("vcausal", format!("analytic P(error | {tag})"), r.analytic_error_rate);
        report.check(format!("P(error | {tag}) within 5 sigma of analytic"), r.within_band());
    }
    let (v_over_c, length, separation) = geometry;
    let cfg = triangle_config(v_over_c * C, length, separation)?;
    let s = signalling_speed(&cfg, "A", &["B", "C"], "B", C)?;
    report.float("vcausal", "effective signalling speed / c", s.speed / C);
    Ok(())
}

fn speed(report: &mut RunReport, d: f64, dt: f64, t: f64, scan: Option<(f64, usize, usize, usize)>) -> Result<()> {
    if !(d > 0.0) || !(dt >= 0.0) {
        bail!("--d must be positive and --dt nonnegative");
    }
    let e1 = Event::new("1", 0.0, &[0.0]);
    let e2 = Event::new("2", t, &[d]);
    let rest = speed_bound(&e1, &e2, dt, &FrameBoost::rest())?;
    report.float("spacetime", "v_min (lab frame) [m/s]", rest);
    report.float("spacetime", "v_min / c (lab frame)", rest / C);
    let mut worst = rest;
    if let Some((beta_max, speeds, polar, azimuth)) = scan {
        if !(beta_max > 0.0 && beta_max < 1.0) {
            bail!("--beta-max must lie in (0, 1)");
        }
        let s = scan_frames(&e1, &e2, dt, beta_max, speeds, polar, azimuth)?;
        report.note(format!("{:>14} {:>14} {:>14} {:>20}", "u_x / c", "u_y / c", "u_z / c", "v_min / c"));
        for (k, p) in s.points.iter().enumerate() {
            let mark = if k == s.minimum { "  <- minimum" } else { "" };
            report.note(format!(
                "{:>14} {:>14} {:>14} {:>20}{mark}",
                fmt_f64(p.velocity[0] / C),
                fmt_f64(p.velocity[1] / C),
                fmt_f64(p.velocity[2] / C),
                fmt_f64(p.v_min / C)
            ));
        }
        worst = s.min_point().v_min;
        report.quantity("spacetime", "frames scanned", s.points.len().to_string());
        report.float("spacetime", "min v_min / c over frames", worst / C);
    }
    report.check("speed bound exceeds c", worst > C);
    Ok(())
}

fn validate(report: &mut RunReport, path: &Path, choices: Option<&Path>) -> Result<()> {
    let cfg = parse_config(&read(path, report)?)?;
    report.float("spacetime", "v / c", cfg.v() / C);
    for a in cfg.events() {
        let reach: Vec<&str> = cfg
            .events()
            .iter()
            .filter(|b| v_connected(a, b, cfg.v()))
            .map(|b| b.label.as_str())
            .collect();
        report.note(format!("{} -> {{{}}}", a.label, reach.join(", ")));
    }
    let violations = validate_config(&cfg)?;
    for r in cfg.requirements() {
        let bad = violations.iter().any(|v| v.from == r.from && v.to == r.to);
        let relation = if r.connected { "v-connected to" } else { "not v-connected to" };
        report.check(format!("{} {relation} {}", r.from, r.to), !bad);
    }
    if let Some(p) = choices {
        let events: Vec<Event> = serde_json::from_str(&read(p, report)?).context("choices file")?;
        let broken = ordering_protocol_check(&cfg, &events)?;
        for v in &broken {
            report.note(format!("ordering protocol: {}", v.rule));
        }
        report.check("ordering protocol schedule", broken.is_empty());
    }
    Ok(())
}
