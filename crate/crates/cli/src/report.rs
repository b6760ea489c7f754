use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Formats a float with 12 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

#[derive(Debug, Serialize)]
pub struct Quantity {
    pub module: &'static str,
    pub name: String,
    pub value: String,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub quantities: Vec<Quantity>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
    #[serde(skip)]
    hasher: Sha256,
}

impl RunReport {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Self {
            command: command.to_string(),
            inputs_digest: String::new(),
            seed,
            quantities: Vec::new(),
            notes: Vec::new(),
            checks: Vec::new(),
            wall_time_s: 0.0,
            started: Some(Instant::now()),
            hasher,
        }
    }

    /// Feeds an argument or file content into the input digest.
    pub fn input(&mut self, bytes: impl AsRef<[u8]>) {
        self.hasher.update([0u8]);
        self.hasher.update(bytes.as_ref());
    }

    pub fn quantity(&mut self, module: &'static str, name: impl Into<String>, value: impl Into<String>) {
        self.quantities.push(Quantity { module, name: name.into(), value: value.into() });
    }

    pub fn float(&mut self, module: &'static str, name: impl Into<String>, value: f64) {
        self.quantity(module, name, fmt_f64(value));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check { name: name.into(), passed });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn finish(&mut self) {
        self.inputs_digest = hex::encode(self.hasher.clone().finalize());
        if let Some(t) = self.started.take() {
            self.wall_time_s = t.elapsed().as_secs_f64();
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "inputs digest: {}", self.inputs_digest);
        let _ = writeln!(out, "seed: {}", self.seed);
        let width = self.quantities.iter().map(|q| q.name.len()).max().unwrap_or(0);
        for q in &self.quantities {
            let _ = writeln!(out, "[{:<10}] {:<width$} = {}", q.module, q.name, q.value);
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "checks:");
            for c in &self.checks {
                let _ = writeln!(out, "  {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            }
        }
        let _ = writeln!(out, "wall time: {:.3} s", self.wall_time_s);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_f64(7.201389937007019), "7.20138993701");
        assert_eq!(fmt_f64(0.5), "0.500000000000");
        assert_eq!(fmt_f64(166666.66666666666), "166666.666667");
        assert_eq!(fmt_f64(-1.5e-9), "-1.50000000000e-9");
        assert_eq!(fmt_f64(0.0), "0");
    }
}
