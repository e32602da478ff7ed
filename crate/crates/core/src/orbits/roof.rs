//! Return-time functions for suspension flows.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `a cos(2π k·x) + b sin(2π k·x)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i64; 2],
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RoofFunction {
    Constant {
        c: f64,
    },
    /// Trigonometric polynomial on the 2-torus.
    Trig {
        constant: f64,
        terms: Vec<TrigTerm>,
    },
    /// Per-transition table `r[i][j]` for a symbolic model.
    Table {
        r: Vec<Vec<f64>>,
    },
}

impl RoofFunction {
    pub fn constant(c: f64) -> Self {
        RoofFunction::Constant { c }
    }

    /// The roof `1 + 0.3 cos(2π x₁)`.
    pub fn mixing_default() -> Self {
        RoofFunction::Trig { constant: 1.0, terms: vec![TrigTerm { k: [1, 0], a: 0.3, b: 0.0 }] }
    }

    /// Table with `r[i][j] = per_symbol[i]`.
    pub fn per_symbol(per_symbol: &[f64]) -> Self {
        let k = per_symbol.len();
        RoofFunction::Table { r: per_symbol.iter().map(|&v| vec![v; k]).collect() }
    }

    /// Certified lower bound of the roof.
    pub fn lower_bound(&self) -> f64 {
        match self {
            RoofFunction::Constant { c } => *c,
            RoofFunction::Trig { constant, terms } => {
                constant - terms.iter().map(|t| t.a.abs() + t.b.abs()).sum::<f64>()
            }
            RoofFunction::Table { r } => r.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            RoofFunction::Constant { c } => c.is_finite(),
            RoofFunction::Trig { constant, terms } => {
                constant.is_finite() && terms.iter().all(|t| t.a.is_finite() && t.b.is_finite())
            }
            RoofFunction::Table { r } => {
                if r.is_empty() || r.iter().any(|row| row.len() != r.len()) {
                    return Err(Error::Parameter("roof table must be square and nonempty".into()));
                }
                r.iter().flatten().all(|v| v.is_finite())
            }
        };
        if !finite {
            return Err(Error::Parameter("roof has non-finite coefficients".into()));
        }
        let lb = self.lower_bound();
        if lb <= 0.0 {
            return Err(Error::Parameter(format!("roof positivity margin {lb} is not positive")));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RoofFunction::Constant { .. })
    }

    /// Value at the torus point `(x/q, y/q)`, with phases reduced exactly mod `q`.
    pub fn eval_torus(&self, x: u64, y: u64, q: u64) -> Result<f64> {
        match self {
            RoofFunction::Constant { c } => Ok(*c),
            RoofFunction::Trig { constant, terms } => {
                let mut v = *constant;
                for t in terms {
                    let phase = (t.k[0] as i128 * x as i128 + t.k[1] as i128 * y as i128).rem_euclid(q as i128);
                    let angle = TAU * (phase as f64 / q as f64);
                    v += t.a * angle.cos() + t.b * angle.sin();
                }
                Ok(v)
            }
            RoofFunction::Table { .. } => Err(Error::Parameter("table roof needs a symbolic model".into())),
        }
    }

    /// Value on the transition `i → j` of a symbolic model.
    pub fn eval_transition(&self, i: usize, j: usize) -> Result<f64> {
        match self {
            RoofFunction::Constant { c } => Ok(*c),
            RoofFunction::Table { r } => r
                .get(i)
                .and_then(|row| row.get(j))
                .copied()
                .ok_or_else(|| Error::Parameter(format!("roof table has no entry for {i}->{j}"))),
            RoofFunction::Trig { .. } => Err(Error::Parameter("trigonometric roof needs a toral model".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positivity_margin() {
        assert!(RoofFunction::constant(0.0).validate().is_err());
        assert!(RoofFunction::mixing_default().validate().is_ok());
        assert!((RoofFunction::mixing_default().lower_bound() - 0.7).abs() < 1e-15);
        let bad = RoofFunction::Trig { constant: 1.0, terms: vec![TrigTerm { k: [1, 0], a: 0.6, b: -0.5 }] };
        assert!(bad.validate().is_err());
        assert!(RoofFunction::Table { r: vec![vec![1.0, -1.0], vec![1.0, 1.0]] }.validate().is_err());
    }

    #[test]
    fn exact_phase_reduction() {
        let r = RoofFunction::mixing_default();
        assert!((r.eval_torus(0, 0, 5).unwrap() - 1.3).abs() < 1e-15);
        let half = r.eval_torus(5, 0, 10).unwrap();
        assert!((half - 0.7).abs() < 1e-15);
        // x = 7/5 ≡ 2/5
        assert_eq!(r.eval_torus(7, 3, 5).unwrap(), r.eval_torus(2, 1, 5).unwrap());
    }
}
