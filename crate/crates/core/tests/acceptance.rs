//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcausal_core::behavior::Behavior;
use vcausal_core::certifier::{abd_acd_marginals, local_decomposition_2222, marginal_feasibility, maximize_s};
use vcausal_core::ch::{ch_facets, ch_value, is_local_2222};
use vcausal_core::inequality::InequalityS;
use vcausal_core::lp::verify;
use vcausal_core::prob::{fmt_rational, rat};
use vcausal_core::quantum::build_paper_model;
use vcausal_core::spacetime::{boost, interval, speed_bound, v_connected, Event, FrameBoost, C};
use vcausal_core::vcausal::{analytic_success, dc_behavior_fig3, ghz_protocol, ghz_triangle_dc, Message};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn quantum_violation() -> Outcome {
    let start = Instant::now();
    let q = build_paper_model();
    let s = InequalityS::four_party();
    let op = s.evaluate_quantum(&q).map_err(|e| e.to_string())?;
    let beh = s.evaluate(&q.behavior(), &1e-9).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(op > 7.0, format!("S = {op} does not exceed 7"))?;
    ensure(format!("{op:.1}") == "7.2", format!("S = {op} does not round to 7.2"))?;
    ensure((op - beh).abs() <= 1e-10, format!("paths differ: {op} vs {beh}"))?;
    ensure(took < Duration::from_secs(1), format!("took {}", secs(took)))?;
    Ok(format!("S = {op:.12} (operator), {beh:.12} (behavior), {}", secs(took)))
}

fn theorem_bound() -> Outcome {
    let start = Instant::now();
    let cert = maximize_s(true).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let opt = cert.optimum().ok_or("program reported infeasible")?;
    ensure(*opt == rat(7, 1), format!("optimum {}", fmt_rational(opt)))?;
    verify(&cert.program, &cert.certificate).map_err(|e| format!("certificate rejected: {e}"))?;
    ensure(took < Duration::from_secs(300), format!("took {}", secs(took)))?;
    Ok(format!("optimum {} with verified certificate, {} pivots, {}", fmt_rational(opt), cert.stats.pivots, secs(took)))
}

fn local_bound() -> Outcome {
    let start = Instant::now();
    let s = InequalityS::four_party();
    let mut best = None::<BigRational>;
    for mask in 0..256usize {
        let resp: Vec<Vec<usize>> = (0..4).map(|p| (0..2).map(|x| mask >> (2 * p + x) & 1).collect()).collect();
        let b: Behavior<BigRational> = Behavior::deterministic(&resp, vec![2; 4]);
        let v = s.evaluate(&b, &BigRational::zero()).map_err(|e| e.to_string())?;
        if best.as_ref().map_or(true, |m| v > *m) {
            best = Some(v);
        }
    }
    let best = best.expect("256 strategies");
    let all_minus: Behavior<BigRational> = Behavior::deterministic(&vec![vec![1, 1]; 4], vec![2; 4]);
    let at_minus = s.evaluate(&all_minus, &BigRational::zero()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(best == rat(7, 1), format!("maximum {}", fmt_rational(&best)))?;
    ensure(at_minus == best, format!("all -1 gives {}", fmt_rational(&at_minus)))?;
    ensure(took < Duration::from_secs(1), format!("took {}", secs(took)))?;
    Ok(format!("max over 256 strategies = {}, attained by all -1, {}", fmt_rational(&best), secs(took)))
}

fn marginal_infeasibility() -> Outcome {
    let start = Instant::now();
    let q = build_paper_model().behavior().to_rational();
    let (abd, acd) = abd_acd_marginals(&q).map_err(|e| e.to_string())?;
    let radius = rat(1, 1_000_000_000);
    let res = marginal_feasibility(&abd, &acd, &radius).map_err(|e| e.to_string())?;
    ensure(!res.is_feasible(), "marginals reported feasible")?;
    verify(&res.program, &res.certificate).map_err(|e| format!("Farkas certificate rejected: {e}"))?;
    // infeasibility within the 1e-9 box covers the unperturbed marginals too
    Ok(format!(
        "INFEASIBLE with verified Farkas certificate at radius {}, {} pivots, {}",
        fmt_rational(&radius),
        res.stats.pivots,
        secs(start.elapsed())
    ))
}

fn signalling_activation() -> Outcome {
    let q = build_paper_model();
    let qb = q.behavior();
    let dc = dc_behavior_fig3(&q).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for subset in [[0, 1, 3], [0, 2, 3]] {
        let (mq, md) = (qb.marginal(&subset).unwrap(), dc.marginal(&subset).unwrap());
        for s in 0..16 {
            let xs = qb.setting_tuple(s);
            for (a, b) in mq.distribution(&xs).iter().zip(md.distribution(&xs)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-10, format!("marginal mismatch {worst:e}"))?;
    let report = dc.no_signalling_check(&1e-9);
    ensure(!report.is_empty(), "no signalling found")?;
    let bcd_x = report.find(&[1, 2, 3], 0).map(|e| e.variation);
    let abc_w = report.find(&[0, 1, 2], 3).map(|e| e.variation);
    ensure(bcd_x.is_some() || abc_w.is_some(), "neither BCD-on-x nor ABC-on-w")?;
    let show = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.6}"));
    Ok(format!(
        "marginal gap {worst:.1e}; BCD depends on x (variation {}), ABC depends on w (variation {})",
        show(bcd_x),
        show(abc_w)
    ))
}

fn ghz_protocol_rates() -> Outcome {
    // enumeration: under "no" the pairs (b, c) are equiprobable and the
    // receiver errs exactly when b = c
    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let p_err_no = rat(pairs.iter().filter(|(b, c)| b == c).count() as i64, 4);
    let success = rat(1, 2) * rat(1, 1) + rat(1, 2) * (rat(1, 1) - p_err_no);
    ensure(success == rat(3, 4), format!("enumeration gives {}", fmt_rational(&success)))?;
    ensure(analytic_success(1) == success, "library analytic value differs")?;

    let no = ghz_triangle_dc(false).behavior().map_err(|e| e.to_string())?;
    let model_equal: f64 = (0..8)
        .filter(|&o| {
            let os = no.outcome_tuple(o);
            os[1] == os[2]
        })
        .map(|o| no.table()[0][o])
        .sum();
    ensure(model_equal == 0.5, format!("model P(b=c | no) = {model_equal}"))?;

    let trials = 100_000;
    let mut lines = Vec::new();
    for (rounds, message, seed) in [(1, Message::Yes, 1), (1, Message::No, 2), (20, Message::Yes, 3), (20, Message::No, 4)] {
        let r = ghz_protocol(rounds, message, trials, seed);
        if message == Message::Yes {
            ensure(r.errors == 0, format!("{} errors for yes", r.errors))?;
        }
        ensure(
            r.within_band(),
            format!("rounds {rounds} {message:?}: {} vs {}", r.empirical_error_rate, r.analytic_error_rate),
        )?;
        lines.push(format!("{rounds}/{message:?}: {:.5} vs {:.5}", r.empirical_error_rate, r.analytic_error_rate));
    }
    Ok(format!("success 3/4 exactly; {trials} trials each: {}", lines.join(", ")))
}

fn locality_cross_check() -> Outcome {
    let det = |k: usize| -> Behavior<BigRational> {
        Behavior::deterministic(&[vec![k & 1, k >> 1 & 1], vec![k >> 2 & 1, k >> 3 & 1]], vec![2, 2])
    };
    let pr = |k: usize| -> Behavior<BigRational> {
        let (alpha, beta, gamma) = (k & 1, k >> 1 & 1, k >> 2 & 1);
        Behavior::from_fn(vec![2, 2], vec![2, 2], |xs, os| {
            if os[0] ^ os[1] == (xs[0] & xs[1]) ^ (alpha & xs[0]) ^ (beta & xs[1]) ^ gamma {
                rat(1, 2)
            } else {
                BigRational::zero()
            }
        })
        .unwrap()
    };
    let vertices: Vec<Behavior<BigRational>> = (0..16).map(det).chain((0..8).map(pr)).collect();

    let uniform: Behavior<BigRational> = Behavior::uniform(vec![2, 2], vec![2, 2]);
    ensure(ch_value(&uniform, 0).unwrap() == rat(-1, 2), "uniform CH value")?;
    ensure(ch_value(&pr(0), 0).unwrap() == rat(1, 2), "PR box CH value")?;
    ensure(ch_facets().len() == 8, "facet count")?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut local, mut nonlocal) = (0, 0);
    let samples = 1000;
    for i in 0..samples {
        let k = rng.gen_range(1..=4);
        let mut mix = uniform.clone();
        let mut total = rat(0, 1);
        for j in 0..k {
            let v = &vertices[rng.gen_range(0..24)];
            let w = rat(rng.gen_range(1..=12), 1);
            total += &w;
            mix = if j == 0 { v.clone() } else { v.mix(&mix, &(&w / &total)).unwrap() };
        }
        if i % 4 == 0 {
            // pull a quarter of the samples toward the centre
            mix = mix.mix(&uniform, &rat(rng.gen_range(1..=9), 10)).unwrap();
        }
        let verdict = is_local_2222(&mix, &BigRational::zero()).map_err(|e| e.to_string())?;
        let lp = local_decomposition_2222(&mix).map_err(|e| e.to_string())?;
        verify(&lp.program, &lp.certificate).map_err(|e| format!("sample {i}: certificate rejected: {e}"))?;
        ensure(verdict.local == lp.is_feasible(), format!("sample {i}: facet test and LP disagree"))?;
        if verdict.local {
            local += 1;
        } else {
            nonlocal += 1;
        }
    }
    ensure(local > 0 && nonlocal > 0, "samples did not cover both classes")?;
    Ok(format!("{samples}/{samples} agree ({local} local, {nonlocal} nonlocal); PR box 1/2, uniform -1/2"))
}

fn spacetime_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut coord = |scale: f64| rng.gen_range(-scale..scale);
    for _ in 0..2000 {
        let e1 = Event::new("1", coord(1e-3), &[coord(1e5), coord(1e5), coord(1e5)]);
        let e2 = Event::new("2", coord(1e-3), &[coord(1e5), coord(1e5), coord(1e5)]);
        let v1 = C * (1.0 + coord(1.0).abs() * 20.0);
        let v2 = v1 * (1.0 + coord(1.0).abs());
        ensure(!v_connected(&e1, &e2, v1) || v_connected(&e1, &e2, v2), "v-cone not monotone")?;

        let f = FrameBoost::new([coord(0.6) * C, coord(0.6) * C, coord(0.6) * C]).map_err(|e| e.to_string())?;
        let (b1, b2) = (boost(&e1, &f), boost(&e2, &f));
        let dr2: f64 = (0..3).map(|k| (e1.r[k] - e2.r[k]).powi(2)).sum();
        let scale = C * C * (e1.t - e2.t).powi(2) + dr2;
        ensure((interval(&e1, &e2) - interval(&b1, &b2)).abs() <= 1e-9 * scale, "interval not preserved")?;
        let back = boost(&b1, &f.inverse());
        let extent = e1.t.abs() * C + e1.r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let err = (0..3).map(|k| (back.r[k] - e1.r[k]).abs()).fold((back.t - e1.t).abs() * C, f64::max);
        ensure(err <= 1e-9 * extent, format!("round trip error {err}"))?;
    }

    let (d, dt) = (18e3, 3.6e-10);
    let rest = speed_bound(&Event::new("1", 0.0, &[0.0]), &Event::new("2", 0.0, &[d]), dt, &FrameBoost::rest())
        .map_err(|e| e.to_string())?;
    ensure(rest == d / dt, format!("rest-frame bound {rest} != d/dt"))?;
    ensure(rest >= 1e4 * C, format!("bound {} c below 1e4 c", rest / C))?;
    Ok(format!("2000 random checks; km-scale bound = {:.3e} c", rest / C))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("quantum violation", quantum_violation),
        ("theorem bound", theorem_bound),
        ("local bound tightness", local_bound),
        ("marginal infeasibility", marginal_infeasibility),
        ("signalling activation", signalling_activation),
        ("GHZ protocol", ghz_protocol_rates),
        ("oracle cross-checks", locality_cross_check),
        ("spacetime properties", spacetime_properties),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
