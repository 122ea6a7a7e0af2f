//! Time-dependent Hamiltonians as sums of fixed operators times real envelopes.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::operator::Operator;
use crate::error::{Error, Result};

/// Hermiticity tolerance for Hamiltonian terms (max abs element).
pub const HAMILTONIAN_HERMITIAN_TOL: f64 = 1e-12;

/// Real time profile multiplying one Hamiltonian term.
#[derive(Clone)]
pub enum Envelope {
    Constant(f64),
    /// `amplitude` on `[start, end]`, zero elsewhere.
    Square {
        amplitude: f64,
        start: f64,
        end: f64,
    },
    /// Arbitrary smooth profile. Discontinuities must be listed so the
    /// integrator can stop on them.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        breakpoints: Vec<f64>,
    },
}

impl Envelope {
    /// Pointwise value; square pulses are closed on both ends.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(a) => *a,
            Envelope::Square { amplitude, start, end } => {
                if t >= *start && t <= *end {
                    *amplitude
                } else {
                    0.0
                }
            }
            Envelope::Function { f, .. } => f(t),
        }
    }

    /// Value used while integrating the segment `[a, b]` that contains `t`.
    /// Piecewise-constant profiles are sampled at the segment midpoint so a
    /// stage landing exactly on a pulse edge sees the segment's own value.
    pub(crate) fn value_on_segment(&self, t: f64, a: f64, b: f64) -> f64 {
        match self {
            Envelope::Function { f, .. } => f(t),
            _ => self.value(0.5 * (a + b)),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Envelope::Constant(_) => Vec::new(),
            Envelope::Square { start, end, .. } => vec![*start, *end],
            Envelope::Function { breakpoints, .. } => breakpoints.clone(),
        }
    }
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Constant(a) => write!(f, "Constant({a})"),
            Envelope::Square { amplitude, start, end } => write!(f, "Square({amplitude} on [{start}, {end}])"),
            Envelope::Function { breakpoints, .. } => {
                write!(f, "Function(breakpoints={breakpoints:?})")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub operator: Operator,
    pub envelope: Envelope,
}

/// `H(t) = sum_k envelope_k(t) * O_k` with every `O_k` Hermitian.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    dim: usize,
    terms: Vec<HamiltonianTerm>,
}

impl Hamiltonian {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(op: Operator) -> Result<Self> {
        let mut h = Self::zero(op.dim());
        h.push(op, Envelope::Constant(1.0))?;
        Ok(h)
    }

    pub fn push(&mut self, operator: Operator, envelope: Envelope) -> Result<()> {
        operator.check_dim(self.dim)?;
        let defect = operator.hermiticity_defect();
        if defect > HAMILTONIAN_HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        if !operator.is_zero() {
            self.terms.push(HamiltonianTerm { operator, envelope });
        }
        Ok(())
    }

    pub fn with(mut self, operator: Operator, envelope: Envelope) -> Result<Self> {
        self.push(operator, envelope)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    /// Instantaneous operator `H(t)`.
    pub fn at(&self, t: f64) -> Operator {
        self.terms.iter().fold(Operator::zeros(self.dim), |acc, term| {
            acc.add_scaled(&term.operator, Complex64::new(term.envelope.value(t), 0.0))
                .expect("term dimensions checked on push")
        })
    }

    /// Sorted, deduplicated envelope discontinuities.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> =
            self.terms.iter().flat_map(|t| t.envelope.breakpoints()).filter(|x| x.is_finite()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}
