//! Models mixing shared local variables with finite-speed direct causes.
//!
//! A model is a finite distribution over hidden variables λ, a directed
//! acyclic influence pattern, and per-party response tables
//! `p(o_i | x_i, λ, (x_p, o_p) for every predecessor p)`. The joint
//! behavior is `Σ_λ ρ(λ) Π_i p(o_i | …)`.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{decode, encode, Behavior};
use crate::linalg::norm_sqr;
use crate::prob::rat;
use crate::quantum::{apply_local, QuantumModel};
use crate::spacetime::{v_connected, SpacetimeError, VConeConfig};

const RESPONSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VCausalError {
    #[error("influence pattern contains a cycle")]
    CyclicConnectivity,
    #[error("λ weights must be nonnegative and sum to 1")]
    BadWeights,
    #[error("response of party {party} at row {row} is not a distribution")]
    BadResponse { party: usize, row: usize },
    #[error("response table of party {party} has {got} rows, expected {expected}")]
    ResponseShape { party: usize, got: usize, expected: usize },
    #[error("edge {0} -> {1} refers to a missing party or is a self-loop")]
    BadEdge(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// What a party sees from one v-connected predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Influence {
    pub party: usize,
    pub setting: usize,
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VCausalModel {
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
    pub lambda_weights: Vec<f64>,
    /// Directed edges `(from, to)`: `to` receives `from`'s setting and outcome.
    pub edges: Vec<(usize, usize)>,
    /// `responses[party][row]` is a distribution over the party's outcomes;
    /// see [`VCausalModel::response_row`] for the row layout.
    pub responses: Vec<Vec<Vec<f64>>>,
}

impl VCausalModel {
    /// Builds response tables from a closure and validates the model.
    pub fn from_fn(
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        lambda_weights: Vec<f64>,
        edges: Vec<(usize, usize)>,
        mut response: impl FnMut(usize, usize, usize, &[Influence]) -> Vec<f64>,
    ) -> Result<Self, VCausalError> {
        let n = settings.len();
        let mut model = Self {
            settings,
            outcomes,
            lambda_weights,
            edges,
            responses: vec![Vec::new(); n],
        };
        model.check_edges()?;
        for party in 0..n {
            let preds = model.predecessors(party);
            let radices = model.history_radices(&preds);
            let histories: usize = radices.iter().product();
            let mut rows = Vec::new();
            for lambda in 0..model.lambda_weights.len() {
                for x in 0..model.settings[party] {
                    for h in 0..histories {
                        let influences = model.decode_history(&preds, &radices, h);
                        rows.push(response(party, lambda, x, &influences));
                    }
                }
            }
            model.responses[party] = rows;
        }
        model.validate()?;
        Ok(model)
    }

    pub fn parties(&self) -> usize {
        self.settings.len()
    }

    /// Sorted list of parties with an edge into `party`.
    pub fn predecessors(&self, party: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self.edges.iter().filter(|e| e.1 == party).map(|e| e.0).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    fn history_radices(&self, preds: &[usize]) -> Vec<usize> {
        preds
            .iter()
            .flat_map(|&p| [self.settings[p], self.outcomes[p]])
            .collect()
    }

    fn decode_history(&self, preds: &[usize], radices: &[usize], h: usize) -> Vec<Influence> {
        let digits = decode(radices, h);
        preds
            .iter()
            .enumerate()
            .map(|(k, &party)| Influence { party, setting: digits[2 * k], outcome: digits[2 * k + 1] })
            .collect()
    }

    /// Row index into `responses[party]`:
    /// `(λ · settings[party] + x) · H + history`, where the history digits
    /// are `(x_p, o_p)` for each predecessor p in increasing order.
    pub fn response_row(&self, party: usize, lambda: usize, x: usize, xs: &[usize], os: &[usize]) -> usize {
        let preds = self.predecessors(party);
        let radices = self.history_radices(&preds);
        let digits: Vec<usize> = preds.iter().flat_map(|&p| [xs[p], os[p]]).collect();
        let histories: usize = radices.iter().product();
        (lambda * self.settings[party] + x) * histories + encode(&radices, &digits)
    }

    fn check_edges(&self) -> Result<(), VCausalError> {
        let n = self.parties();
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(VCausalError::BadEdge(a, b));
            }
        }
        Ok(())
    }

    /// Kahn ordering of the influence pattern.
    pub fn topological_order(&self) -> Result<Vec<usize>, VCausalError> {
        self.check_edges()?;
        let n = self.parties();
        let mut indegree = vec![0usize; n];
        for &(_, b) in &self.edges {
            indegree[b] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(i);
            for &(a, b) in &self.edges {
                if a == i {
                    indegree[b] -= 1;
                    if indegree[b] == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        if order.len() != n {
            return Err(VCausalError::CyclicConnectivity);
        }
        Ok(order)
    }

    pub fn validate(&self) -> Result<(), VCausalError> {
        let total: f64 = self.lambda_weights.iter().sum();
        if self.lambda_weights.is_empty()
            || self.lambda_weights.iter().any(|&w| !(w >= 0.0))
            || (total - 1.0).abs() > RESPONSE_TOL
        {
            return Err(VCausalError::BadWeights);
        }
        self.topological_order()?;
        for party in 0..self.parties() {
            let preds = self.predecessors(party);
            let histories: usize = self.history_radices(&preds).iter().product();
            let expected = self.lambda_weights.len() * self.settings[party] * histories;
            let rows = &self.responses[party];
            if rows.len() != expected {
                return Err(VCausalError::ResponseShape { party, got: rows.len(), expected });
            }
            for (row, dist) in rows.iter().enumerate() {
                let sum: f64 = dist.iter().sum();
                if dist.len() != self.outcomes[party]
                    || dist.iter().any(|&p| !(p >= 0.0))
                    || (sum - 1.0).abs() > RESPONSE_TOL
                {
                    return Err(VCausalError::BadResponse { party, row });
                }
            }
        }
        Ok(())
    }

    /// `p(o|x) = Σ_λ ρ(λ) Π_i p(o_i | x_i, λ, predecessors)`.
    pub fn behavior(&self) -> Result<Behavior<f64>, VCausalError> {
        self.validate()?;
        let order = self.topological_order()?;
        let b = Behavior::from_fn(self.settings.clone(), self.outcomes.clone(), |xs, os| {
            self.lambda_weights
                .iter()
                .enumerate()
                .map(|(lambda, &w)| {
                    order.iter().fold(w, |acc, &i| {
                        let row = self.response_row(i, lambda, xs[i], xs, os);
                        acc * self.responses[i][row][os[i]]
                    })
                })
                .sum()
        })
        .expect("valid shape");
        Ok(b)
    }
}

pub fn behavior_of_model(m: &VCausalModel) -> Result<Behavior<f64>, VCausalError> {
    m.behavior()
}

/// Extracts the influence edges `(i, j)` for which the event labelled with
/// party i's name v-connects to party j's (party names `A`, `B`, …).
pub fn edges_from_config(cfg: &VConeConfig, parties: usize) -> Result<Vec<(usize, usize)>, VCausalError> {
    let name = |i: usize| ((b'A' + i as u8) as char).to_string();
    let mut edges = Vec::new();
    for i in 0..parties {
        for j in 0..parties {
            if i != j && v_connected(cfg.event(&name(i))?, cfg.event(&name(j))?, cfg.v()) {
                edges.push((i, j));
            }
        }
    }
    Ok(edges)
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn point(k: usize, o: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[o] = 1.0;
    v
}

/// Pure direct-cause GHZ triangle with all parties measuring σz. When
/// `influenced`, A's outcome reaches B and C, who copy it; otherwise B and
/// C answer uniformly and independently.
pub fn ghz_triangle_dc(influenced: bool) -> VCausalModel {
    let edges = if influenced { vec![(0, 1), (0, 2)] } else { vec![] };
    VCausalModel::from_fn(vec![1; 3], vec![2; 3], vec![1.0], edges, |_, _, _, seen| {
        match seen.first() {
            Some(inf) => point(2, inf.outcome),
            None => uniform(2),
        }
    })
    .expect("valid model")
}

/// The triangle supplemented with a shared uniform bit r: parties without
/// an incoming influence output r.
pub fn ghz_triangle_shared_bit(influenced: bool) -> VCausalModel {
    let edges = if influenced { vec![(0, 1), (0, 2)] } else { vec![] };
    VCausalModel::from_fn(vec![1; 3], vec![2; 3], vec![0.5, 0.5], edges, |_, lambda, _, seen| {
        match seen.first() {
            Some(inf) => point(2, inf.outcome),
            None => point(2, lambda),
        }
    })
    .expect("valid model")
}

/// Behavior in which A's setting is the message: setting 0 ("yes") means A
/// measures in time for the influence to arrive, setting 1 ("no") means it
/// does not. Built from [`ghz_triangle_dc`] or, with `shared_bit`, from
/// [`ghz_triangle_shared_bit`].
pub fn ghz_message_behavior(shared_bit: bool) -> Behavior<f64> {
    let model = |inf| if shared_bit { ghz_triangle_shared_bit(inf) } else { ghz_triangle_dc(inf) };
    let yes = model(true).behavior().expect("valid model");
    let no = model(false).behavior().expect("valid model");
    Behavior::from_fn(vec![2, 1, 1], vec![2; 3], |xs, os| {
        let src = if xs[0] == 0 { &yes } else { &no };
        *src.prob(&[0, 0, 0], os)
    })
    .expect("valid shape")
}

/// Pure direct-cause model for the four-party configuration: A first, then
/// D (influenced by A), then B and C (each influenced by A and D but not by
/// each other). Responses come from sequential projective updates of the
/// quantum state; measure-zero histories respond uniformly.
pub fn four_party_dc_model(q: &QuantumModel) -> Result<VCausalModel, VCausalError> {
    if q.parties() != 4 {
        return Err(VCausalError::InvalidConfig("four-party quantum model required".into()));
    }
    const A: usize = 0;
    const D: usize = 3;
    let edges = vec![(A, D), (A, 1), (A, 2), (D, 1), (D, 2)];
    let psi = q.state().amplitudes().to_vec();
    let after_a = |x: usize, a: usize| apply_local(&psi, A, q.projector(A, x, a));

    VCausalModel::from_fn(q.settings(), vec![2; 4], vec![1.0], edges, |party, _, setting, seen| {
        let find = |p: usize| seen.iter().find(|i| i.party == p).copied().expect("predecessor");
        let branch = |prior: &[num_complex::Complex64]| {
            let norm = norm_sqr(prior);
            if norm < 1e-15 {
                return uniform(2);
            }
            (0..2)
                .map(|o| norm_sqr(&apply_local(prior, party, q.projector(party, setting, o))) / norm)
                .collect()
        };
        match party {
            A => branch(&psi),
            D => {
                let a = find(A);
                branch(&after_a(a.setting, a.outcome))
            }
            _ => {
                let (a, d) = (find(A), find(D));
                let prior = apply_local(&after_a(a.setting, a.outcome), D, q.projector(D, d.setting, d.outcome));
                branch(&prior)
            }
        }
    })
}

pub fn dc_behavior_fig3(q: &QuantumModel) -> Result<Behavior<f64>, VCausalError> {
    four_party_dc_model(q)?.behavior()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Message {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub rounds: u32,
    pub trials: u64,
    pub message: Message,
    pub seed: u64,
    pub errors: u64,
    pub empirical_error_rate: f64,
    /// `P(error | message)`: 0 for yes, `2^-rounds` for no.
    pub analytic_error_rate: f64,
    /// Success probability under a uniform prior on the message,
    /// `1 - 2^-(rounds+1)`, as an exact fraction.
    #[serde(serialize_with = "crate::lp::rational::serialize")]
    pub analytic_success: BigRational,
}

impl ProtocolResult {
    /// Half-width of the 5σ binomial band around the analytic rate.
    pub fn five_sigma_band(&self) -> f64 {
        let p = self.analytic_error_rate;
        5.0 * (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn within_band(&self) -> bool {
        let diff = (self.empirical_error_rate - self.analytic_error_rate).abs();
        // a single error out of n trials is the resolution of the estimate
        diff <= self.five_sigma_band().max(1.0 / self.trials as f64)
    }
}

pub fn analytic_error_rate(rounds: u32, message: Message) -> f64 {
    match message {
        Message::Yes => 0.0,
        Message::No => 0.5f64.powi(rounds as i32),
    }
}

pub fn analytic_success(rounds: u32) -> BigRational {
    let denom = num_bigint::BigInt::from(2u8).pow(rounds + 1);
    rat(1, 1) - BigRational::new(1.into(), denom)
}

fn sample(block: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in block.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    block.len() - 1
}

/// Monte Carlo of the triangle protocol under the pure direct-cause model.
/// Each trial sends one message using `rounds` GHZ rounds; the receivers
/// answer "yes" iff b = c in every round.
pub fn ghz_protocol(rounds: u32, message: Message, trials: u64, seed: u64) -> ProtocolResult {
    assert!(rounds >= 1, "at least one round per message");
    let model = ghz_triangle_dc(message == Message::Yes);
    let behavior = model.behavior().expect("valid model");
    let block = behavior.block(&[0, 0, 0]).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0;
    for _ in 0..trials {
        let mut all_equal = true;
        for _ in 0..rounds {
            let os = behavior.outcome_tuple(sample(&block, &mut rng));
            all_equal &= os[1] == os[2];
        }
        let decoded = if all_equal { Message::Yes } else { Message::No };
        if decoded != message {
            errors += 1;
        }
    }
    ProtocolResult {
        rounds,
        trials,
        message,
        seed,
        errors,
        empirical_error_rate: errors as f64 / trials.max(1) as f64,
        analytic_error_rate: analytic_error_rate(rounds, message),
        analytic_success: analytic_success(rounds),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignallingSpeed {
    pub distance: f64,
    pub elapsed: f64,
    pub speed: f64,
}

/// End-to-end speed of a message from `sender` to `decoder`: the receivers
/// measure inside the sender's v-cone, then report to the decoder's
/// location at speed `report_speed`; decoding happens when the last report
/// arrives.
pub fn signalling_speed(
    cfg: &VConeConfig,
    sender: &str,
    receivers: &[&str],
    decoder: &str,
    report_speed: f64,
) -> Result<SignallingSpeed, VCausalError> {
    let src = cfg.event(sender)?;
    let dec = cfg.event(decoder)?;
    let mut decode_time = f64::NEG_INFINITY;
    for &label in receivers {
        let e = cfg.event(label)?;
        if !v_connected(src, e, cfg.v()) {
            return Err(VCausalError::InvalidConfig(format!("{label} is outside {sender}'s v-cone")));
        }
        decode_time = decode_time.max(e.t + e.distance(dec) / report_speed);
    }
    let elapsed = decode_time - src.t;
    if receivers.is_empty() || !(elapsed > 0.0) {
        return Err(VCausalError::InvalidConfig("decoding does not follow the sender".into()));
    }
    let distance = src.distance(dec);
    Ok(SignallingSpeed { distance, elapsed, speed: distance / elapsed })
}
