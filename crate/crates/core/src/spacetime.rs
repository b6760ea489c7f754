//! Event geometry in a hypothetical privileged frame.
//!
//! Influences travel at a finite speed `v > c`; two events are
//! v-connected when the later one lies inside or on the future v-cone of
//! the earlier one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in m/s.
pub const C: f64 = 299_792_458.0;

/// Relative slack on the v-cone boundary so that `|Δr| = v·Δt` computed in
/// floating point still counts as connected.
const CONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpacetimeError {
    #[error("influence speed {0} m/s does not exceed c")]
    SubluminalInfluence(f64),
    #[error("frame velocity {0} m/s is not below c")]
    SuperluminalFrame(f64),
    #[error("unknown event label {0:?}")]
    UnknownLabel(String),
    #[error("events {0:?} and {1:?} are co-located in the boosted frame")]
    CoLocated(String, String),
    #[error("timing is degenerate: the speed bound is unbounded")]
    DegenerateTiming,
    #[error("event {0:?} has a non-finite coordinate")]
    NonFinite(String),
    #[error("duplicate event label {0:?}")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    /// Seconds.
    pub t: f64,
    /// Meters; missing components are zero.
    pub r: [f64; 3],
}

impl Event {
    pub fn new(label: impl Into<String>, t: f64, r: &[f64]) -> Self {
        let mut pos = [0.0; 3];
        for (slot, &x) in pos.iter_mut().zip(r) {
            *slot = x;
        }
        Self { label: label.into(), t, r: pos }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.r.iter().all(|x| x.is_finite())
    }

    pub fn distance(&self, other: &Event) -> f64 {
        norm(&sub(&other.r, &self.r))
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// True iff `later` is strictly after `earlier` and within reach of an
/// influence moving at `v` (boundary included).
pub fn v_connected(earlier: &Event, later: &Event, v: f64) -> bool {
    let dt = later.t - earlier.t;
    dt > 0.0 && earlier.distance(later) <= v * dt * (1.0 + CONE_SLACK)
}

pub fn c_connected(earlier: &Event, later: &Event) -> bool {
    v_connected(earlier, later, C)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub from: String,
    pub to: String,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VConeConfig {
    v: f64,
    events: Vec<Event>,
    requirements: Vec<Requirement>,
}

impl VConeConfig {
    pub fn new(v: f64, events: Vec<Event>, requirements: Vec<Requirement>) -> Result<Self, SpacetimeError> {
        if !(v > C) {
            return Err(SpacetimeError::SubluminalInfluence(v));
        }
        for (i, e) in events.iter().enumerate() {
            if !e.is_finite() {
                return Err(SpacetimeError::NonFinite(e.label.clone()));
            }
            if events[..i].iter().any(|o| o.label == e.label) {
                return Err(SpacetimeError::DuplicateLabel(e.label.clone()));
            }
        }
        Ok(Self { v, events, requirements })
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn requirements(&self) -> &[Requirement] {
        &self.requirements
    }

    pub fn event(&self, label: &str) -> Result<&Event, SpacetimeError> {
        self.events
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| SpacetimeError::UnknownLabel(label.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub from: String,
    pub to: String,
    pub required: bool,
    pub actual: bool,
}

/// Checks every required (non-)connection; returns the violated ones.
pub fn validate_config(cfg: &VConeConfig) -> Result<Vec<Violation>, SpacetimeError> {
    let mut out = Vec::new();
    for req in cfg.requirements() {
        let from = cfg.event(&req.from)?;
        let to = cfg.event(&req.to)?;
        let actual = v_connected(from, to, cfg.v());
        if actual != req.connected {
            out.push(Violation {
                from: req.from.clone(),
                to: req.to.clone(),
                required: req.connected,
                actual,
            });
        }
    }
    Ok(out)
}

/// Velocity of a candidate privileged frame relative to the lab.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBoost {
    u: [f64; 3],
}

impl FrameBoost {
    pub fn new(u: [f64; 3]) -> Result<Self, SpacetimeError> {
        let speed = norm(&u);
        if !(speed < C) {
            return Err(SpacetimeError::SuperluminalFrame(speed));
        }
        Ok(Self { u })
    }

    pub fn rest() -> Self {
        Self { u: [0.0; 3] }
    }

    pub fn velocity(&self) -> [f64; 3] {
        self.u
    }

    pub fn inverse(&self) -> Self {
        Self { u: [-self.u[0], -self.u[1], -self.u[2]] }
    }

    pub fn gamma(&self) -> f64 {
        let beta2 = dot(&self.u, &self.u) / (C * C);
        1.0 / (1.0 - beta2).sqrt()
    }
}

/// Lorentz transformation of `e` into the frame moving with `f`'s velocity.
pub fn boost(e: &Event, f: &FrameBoost) -> Event {
    let u2 = dot(&f.u, &f.u);
    if u2 == 0.0 {
        return e.clone();
    }
    let gamma = f.gamma();
    let ur = dot(&f.u, &e.r);
    let t = gamma * (e.t - ur / (C * C));
    let k = (gamma - 1.0) * ur / u2 - gamma * e.t;
    let r = [e.r[0] + k * f.u[0], e.r[1] + k * f.u[1], e.r[2] + k * f.u[2]];
    Event { label: e.label.clone(), t, r }
}

/// `c²Δt² − |Δr|²`
pub fn interval(e1: &Event, e2: &Event) -> f64 {
    let dt = e2.t - e1.t;
    let dr = sub(&e2.r, &e1.r);
    C * C * dt * dt - dot(&dr, &dr)
}

/// Interval change relative to `c²Δt² + |Δr|²`, which stays meaningful
/// for light-like pairs.
pub fn interval_relative_error(e1: &Event, e2: &Event, f: &FrameBoost) -> f64 {
    let (b1, b2) = (boost(e1, f), boost(e2, f));
    let dt = e2.t - e1.t;
    let dr = sub(&e2.r, &e1.r);
    let scale = C * C * dt * dt + dot(&dr, &dr);
    if scale == 0.0 {
        return 0.0;
    }
    (interval(e1, e2) - interval(&b1, &b2)).abs() / scale
}

/// Smallest influence speed that would v-connect the two events in frame
/// `f`, given a synchronisation uncertainty: `|Δr'| / (|Δt'| + δt)`.
pub fn speed_bound(e1: &Event, e2: &Event, sync_uncertainty: f64, f: &FrameBoost) -> Result<f64, SpacetimeError> {
    let (b1, b2) = (boost(e1, f), boost(e2, f));
    let dr = b1.distance(&b2);
    if dr == 0.0 {
        return Err(SpacetimeError::CoLocated(e1.label.clone(), e2.label.clone()));
    }
    let denom = (b2.t - b1.t).abs() + sync_uncertainty;
    if !(denom > 0.0) {
        return Err(SpacetimeError::DegenerateTiming);
    }
    Ok(dr / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub velocity: [f64; 3],
    pub v_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameScan {
    pub points: Vec<ScanPoint>,
    /// Index of the smallest bound in `points`.
    pub minimum: usize,
}

impl FrameScan {
    pub fn min_point(&self) -> &ScanPoint {
        &self.points[self.minimum]
    }
}

/// Speed bounds over a grid of candidate frames: `speeds` evenly spaced
/// boost speeds in `(0, beta_max·c]`, `polar × azimuth` directions, plus
/// the lab frame itself.
pub fn scan_frames(
    e1: &Event,
    e2: &Event,
    sync_uncertainty: f64,
    beta_max: f64,
    speeds: usize,
    polar: usize,
    azimuth: usize,
) -> Result<FrameScan, SpacetimeError> {
    use std::f64::consts::PI;
    let mut points = vec![ScanPoint {
        velocity: [0.0; 3],
        v_min: speed_bound(e1, e2, sync_uncertainty, &FrameBoost::rest())?,
    }];
    for i in 1..=speeds {
        let speed = beta_max * C * i as f64 / speeds as f64;
        for p in 0..polar {
            let theta = PI * (p as f64 + 0.5) / polar as f64;
            for a in 0..azimuth {
                let phi = 2.0 * PI * a as f64 / azimuth as f64;
                // drop rounding residue of the trig functions
                let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
                    .map(|k| if k.abs() < 1e-12 { 0.0 } else { speed * k });
                let f = FrameBoost::new(u)?;
                points.push(ScanPoint { velocity: u, v_min: speed_bound(e1, e2, sync_uncertainty, &f)? });
            }
        }
    }
    let minimum = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.v_min.total_cmp(&b.1.v_min))
        .map(|(i, _)| i)
        .expect("at least the lab frame");
    Ok(FrameScan { points, minimum })
}

/// Labels of the random choices in the measurement-ordering protocol.
pub mod choice {
    pub const X: &str = "x";
    pub const W: &str = "w";
    pub const BC_SELECTOR: &str = "bc";
    pub const Y_OR_Z: &str = "yz";
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleViolation {
    pub rule: String,
}

/// Checks the four-random-bit schedule: x is the earliest choice and
/// precedes A's measurement; w is chosen in the future light cone of A's
/// measurement and before D measures; D measures in the future light cone
/// of A; the B/C selector and the y-or-z choice lie in the future light
/// cone of D's measurement; any B or C measurement event in `cfg` follows
/// both choices. Light-cone conditions use speed c, so they hold for
/// every faster influence.
pub fn ordering_protocol_check(cfg: &VConeConfig, choices: &[Event]) -> Result<Vec<ScheduleViolation>, SpacetimeError> {
    let find = |label: &str| {
        choices
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| SpacetimeError::UnknownLabel(label.to_string()))
    };
    let x = find(choice::X)?;
    let w = find(choice::W)?;
    let sel = find(choice::BC_SELECTOR)?;
    let yz = find(choice::Y_OR_Z)?;
    let a = cfg.event("A")?;
    let d = cfg.event("D")?;

    let mut out = Vec::new();
    let mut rule = |ok: bool, text: &str| {
        if !ok {
            out.push(ScheduleViolation { rule: text.to_string() });
        }
    };
    rule(
        [w, sel, yz].iter().all(|e| x.t < e.t),
        "x must be the earliest choice",
    );
    rule(c_connected(x, a), "x must precede A's measurement");
    rule(c_connected(a, w), "w must lie in the future light cone of A's measurement");
    rule(c_connected(w, d), "w must precede D's measurement");
    rule(c_connected(a, d), "D must measure in the future light cone of A");
    rule(c_connected(d, sel), "B/C selector must lie in the future light cone of D's measurement");
    rule(c_connected(d, yz), "setting choice must lie in the future light cone of D's measurement");
    for label in ["B", "C"] {
        if let Ok(m) = cfg.event(label) {
            rule(
                c_connected(sel, m) && c_connected(yz, m),
                &format!("{label}'s measurement must follow the selector and setting choice"),
            );
        }
    }
    Ok(out)
}

/// The four-party configuration in 1-D space with times in seconds and
/// positions as multiples of `v` meters: A=(0, 0), D=(1, 0.5v),
/// B=(2, b_pos·v), C=(2, -0.35v), with the required connectivity pattern
/// (A→D, A→B, A→C, D→B, D→C connected; B and C not connected).
pub fn four_party_config(v: f64, b_pos: f64) -> Result<VConeConfig, SpacetimeError> {
    let events = vec![
        Event::new("A", 0.0, &[0.0]),
        Event::new("D", 1.0, &[0.5 * v]),
        Event::new("B", 2.0, &[b_pos * v]),
        Event::new("C", 2.0, &[-0.35 * v]),
    ];
    let req = |from: &str, to: &str, connected| Requirement { from: from.into(), to: to.into(), connected };
    VConeConfig::new(
        v,
        events,
        vec![
            req("A", "D", true),
            req("A", "B", true),
            req("A", "C", true),
            req("D", "B", true),
            req("D", "C", true),
            req("B", "C", false),
            req("C", "B", false),
        ],
    )
}

/// Triangle with A at the origin and B, C simultaneous at distance `length`
/// along x, separated by `separation` along y; A measures exactly early
/// enough for its influence to reach both.
pub fn triangle_config(v: f64, length: f64, separation: f64) -> Result<VConeConfig, SpacetimeError> {
    let half = separation / 2.0;
    let reach = (length * length + half * half).sqrt() / v;
    let events = vec![
        Event::new("A", 0.0, &[0.0, 0.0]),
        Event::new("B", reach, &[length, half]),
        Event::new("C", reach, &[length, -half]),
    ];
    let req = |from: &str, to: &str, connected| Requirement { from: from.into(), to: to.into(), connected };
    VConeConfig::new(
        v,
        events,
        vec![
            req("A", "B", true),
            req("A", "C", true),
            req("B", "C", false),
            req("C", "B", false),
        ],
    )
}
