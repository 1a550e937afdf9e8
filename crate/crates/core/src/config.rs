use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SolverOptions;

/// Parameters of one analysis run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Hypersurface dimension; meshes are surfaces, so this must be 2.
    pub n: usize,
    /// Exponent in k_{p,r} and the Hölder pinching deficit (p ≥ 2).
    pub p: f64,
    /// Exponent of the deviation norms (q > 0, warned below 1; q > n/2 expected).
    pub q: f64,
    /// Curvature order r ∈ 1..=n.
    pub r: usize,
    pub solver_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Deviation norms against dv/Vol (true) or dv (false).
    pub normalized_deviations: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let solver = SolverOptions::default();
        AnalysisConfig {
            n: 2,
            p: 2.0,
            q: 2.0,
            r: 2,
            solver_tol: solver.tol,
            max_iter: solver.max_iter,
            seed: solver.seed,
            normalized_deviations: true,
        }
    }
}

impl AnalysisConfig {
    /// Checks hard constraints; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n != 2 {
            return bad(format!("mesh analyses need n = 2, got n = {}", self.n));
        }
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return bad(format!("p must be a finite number >= 2, got {}", self.p));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return bad(format!(
                "q must be a finite positive number, got {}",
                self.q
            ));
        }
        if self.r == 0 || self.r > self.n {
            return bad(format!("r must lie in 1..={}, got {}", self.n, self.r));
        }
        if !(self.solver_tol > 0.0) || self.max_iter == 0 {
            return bad(format!(
                "solver needs tol > 0 and max_iter > 0 (tol {}, max_iter {})",
                self.solver_tol, self.max_iter
            ));
        }
        let mut warnings = Vec::new();
        if self.q < 1.0 {
            warnings.push(format!(
                "q = {} < 1: the deviation \"norms\" are only quasi-norms",
                self.q
            ));
        }
        if self.q <= self.n as f64 / 2.0 {
            warnings.push(format!(
                "q = {} ≤ n/2 = {}: outside the q > n/2 regime required by the Ricci-pinching eigenvalue bound",
                self.q,
                self.n as f64 / 2.0
            ));
        }
        Ok(warnings)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.max_iter,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(AnalysisConfig::default().validate().unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        for cfg in [
            AnalysisConfig {
                p: 1.5,
                ..Default::default()
            },
            AnalysisConfig {
                q: 0.0,
                ..Default::default()
            },
            AnalysisConfig {
                q: f64::NAN,
                ..Default::default()
            },
            AnalysisConfig {
                r: 0,
                ..Default::default()
            },
            AnalysisConfig {
                r: 3,
                ..Default::default()
            },
            AnalysisConfig {
                n: 3,
                ..Default::default()
            },
            AnalysisConfig {
                solver_tol: 0.0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn warns_on_small_q() {
        let w = AnalysisConfig {
            q: 1.0,
            ..Default::default()
        }
        .validate()
        .unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].starts_with("q = 1 ≤ n/2"));
        let w = AnalysisConfig {
            q: 0.9,
            ..Default::default()
        }
        .validate()
        .unwrap();
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: AnalysisConfig = serde_json::from_str(r#"{"p": 3, "r": 1}"#).unwrap();
        assert_eq!(cfg.p, 3.0);
        assert_eq!(cfg.r, 1);
        assert_eq!(cfg.q, 2.0);
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
