//! Search-space size calculators comparing brute-force enumeration against
//! the guided pipelines. Sizes overflow any integer type almost
//! immediately, so everything is computed in log space; an exact integer
//! path exists for tiny instances to cross-check the logs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexityError {
    #[error("invalid complexity params: {0}")]
    InvalidParams(String),
    #[error("cannot draw {count} ordered thoughts from a pool of {pool}")]
    PoolTooSmall { pool: u64, count: u64 },
}

/// Which pipeline the numbers describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Combinational,
    Exploratory,
    Transformative,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Combinational => "combinational",
            Variant::Exploratory => "exploratory",
            Variant::Transformative => "transformative",
        }
    }
}

/// Inputs to the search-space model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityParams {
    /// Domains available to draw from (d).
    pub domains: u64,
    /// Solutions per domain (s).
    pub solutions_per_domain: u64,
    /// Thoughts per solution (c); also the length of a composed chain.
    pub thoughts_per_solution: u64,
    /// Analogous domains a guided run actually consults (a).
    pub analog_domains: u64,
    /// Thoughts reachable only through exploratory expansion (o).
    pub outside_thoughts: u64,
    /// Rules whose mutations multiply the transformative space (r).
    pub rule_count: u64,
    /// Fraction of retrieved analogues that are actually relevant.
    pub eta_analog: f64,
    /// Fraction of syntheses that produce usable candidates.
    pub eta_synth: f64,
    /// Fraction of rule mutations that yield workable spaces.
    pub eta_rules: f64,
}

impl Default for ComplexityParams {
    fn default() -> ComplexityParams {
        ComplexityParams {
            domains: 10,
            solutions_per_domain: 5,
            thoughts_per_solution: 4,
            analog_domains: 4,
            outside_thoughts: 10,
            rule_count: 4,
            eta_analog: 1.0,
            eta_synth: 1.0,
            eta_rules: 1.0,
        }
    }
}

impl ComplexityParams {
    pub fn validate(&self) -> Result<(), ComplexityError> {
        let fail = |reason: String| Err(ComplexityError::InvalidParams(reason));
        if self.domains == 0 || self.solutions_per_domain == 0 || self.thoughts_per_solution == 0 {
            return fail("domains, solutions_per_domain, and thoughts_per_solution must be at least 1".into());
        }
        if self.analog_domains == 0 || self.analog_domains > self.domains {
            return fail(format!(
                "analog_domains must lie in [1, domains], got {} of {}",
                self.analog_domains, self.domains
            ));
        }
        for (name, value) in [
            ("eta_analog", self.eta_analog),
            ("eta_synth", self.eta_synth),
            ("eta_rules", self.eta_rules),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return fail(format!("{name} must lie in (0, 1], got {value}"));
            }
        }
        Ok(())
    }

    /// Thought-pool size seen by brute force: every thought of every
    /// solution of every domain, plus (for exploratory search) the thoughts
    /// only reachable by expansion.
    fn pool(&self, variant: Variant) -> u64 {
        let base = self.domains * self.solutions_per_domain * self.thoughts_per_solution;
        match variant {
            Variant::Combinational => base,
            Variant::Exploratory | Variant::Transformative => base + self.outside_thoughts,
        }
    }
}

/// ln of the falling factorial n·(n−1)···(n−c+1), i.e. ln P(n, c).
fn ln_falling_factorial(n: u64, c: u64) -> f64 {
    (n - c + 1..=n).map(|i| (i as f64).ln()).sum()
}

fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    ln_falling_factorial(n, n)
}

/// ln of the number of ordered thought chains brute force must consider.
pub fn log_baseline(variant: Variant, p: &ComplexityParams) -> Result<f64, ComplexityError> {
    p.validate()?;
    let pool = p.pool(variant);
    let c = p.thoughts_per_solution;
    if pool < c {
        return Err(ComplexityError::PoolTooSmall { pool, count: c });
    }
    let mut ln = ln_falling_factorial(pool, c);
    if variant == Variant::Transformative {
        ln += ln_factorial(p.rule_count);
    }
    Ok(ln)
}

/// ln of the work a guided run performs: a·s·c candidate thoughts, scaled
/// by the efficiency fractions (and the rule fraction for transformative
/// runs).
pub fn log_uot(variant: Variant, p: &ComplexityParams) -> Result<f64, ComplexityError> {
    p.validate()?;
    let mut work = (p.analog_domains * p.solutions_per_domain * p.thoughts_per_solution) as f64
        * p.eta_analog
        * p.eta_synth;
    if variant == Variant::Transformative {
        work *= p.eta_rules;
    }
    Ok(work.ln())
}

/// ln(baseline / guided): how many orders of magnitude the pipeline saves.
pub fn log_gain(variant: Variant, p: &ComplexityParams) -> Result<f64, ComplexityError> {
    Ok(log_baseline(variant, p)? - log_uot(variant, p)?)
}

fn falling_factorial_u128(n: u64, c: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in n - c + 1..=n {
        acc = acc.checked_mul(i as u128)?;
    }
    Some(acc)
}

/// Exact gain for tiny instances, used to cross-check the log-space path.
/// Returns `None` when the pool exceeds `exact_limit` (or the integers
/// overflow), since the point of the log-space model is that exact values
/// stop being representable.
pub fn exact_gain(
    variant: Variant,
    p: &ComplexityParams,
    exact_limit: u64,
) -> Result<Option<f64>, ComplexityError> {
    p.validate()?;
    let pool = p.pool(variant);
    let c = p.thoughts_per_solution;
    if pool < c {
        return Err(ComplexityError::PoolTooSmall { pool, count: c });
    }
    if pool > exact_limit {
        return Ok(None);
    }
    let mut baseline = match falling_factorial_u128(pool, c) {
        Some(v) => v as f64,
        None => return Ok(None),
    };
    if variant == Variant::Transformative {
        baseline *= match falling_factorial_u128(p.rule_count.max(1), p.rule_count.max(1)) {
            Some(v) => v as f64,
            None => return Ok(None),
        };
    }
    let mut guided = (p.analog_domains * p.solutions_per_domain * p.thoughts_per_solution) as f64
        * p.eta_analog
        * p.eta_synth;
    if variant == Variant::Transformative {
        guided *= p.eta_rules;
    }
    Ok(Some(baseline / guided))
}

/// One row of a gain table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub variant: Variant,
    pub params: ComplexityParams,
    pub log_baseline: f64,
    pub log_uot: f64,
    pub log_gain: f64,
    /// exp(log_gain); infinite once the gain exceeds f64 range.
    pub gain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_gain: Option<f64>,
}

/// Evaluates the model over a parameter grid, one row per combination.
pub fn gain_table(
    variant: Variant,
    grid: &[ComplexityParams],
    exact_limit: u64,
) -> Result<Vec<GainRow>, ComplexityError> {
    let mut rows = Vec::with_capacity(grid.len());
    for p in grid {
        let lb = log_baseline(variant, p)?;
        let lu = log_uot(variant, p)?;
        let lg = lb - lu;
        rows.push(GainRow {
            variant,
            params: *p,
            log_baseline: lb,
            log_uot: lu,
            log_gain: lg,
            gain: lg.exp(),
            exact_gain: exact_gain(variant, p, exact_limit)?,
        });
    }
    Ok(rows)
}
