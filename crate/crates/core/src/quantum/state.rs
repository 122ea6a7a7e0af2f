use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::operator::Operator;
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_SLACK: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, trace bounds and positivity.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(m)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("density matrix"));
        }
        Ok(Self { m })
    }

    /// `|index><index|`
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index + 1 });
        }
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        m[(index, index)] = ONE;
        Ok(Self { m })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let v = psi.as_vector();
        Self { m: v * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn population(&self, i: usize) -> f64 {
        self.m[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.m[(r, c)] - self.m[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.m + self.m.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian (defect {defect:e})")));
        }
        let tr = self.trace();
        if !(-TRACE_SLACK..=1.0 + TRACE_SLACK).contains(&tr) {
            return Err(Error::InvalidState(format!("trace {tr} outside [0, 1]")));
        }
        let lo = self.min_eigenvalue();
        if lo < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    /// Row-major copy used by the integrators.
    pub(crate) fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                out.push(self.m[(r, c)]);
            }
        }
        out
    }

    pub(crate) fn from_row_major(n: usize, data: &[Complex64]) -> Self {
        Self { m: DMatrix::from_row_slice(n, n, data) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    v: DVector<Complex64>,
}

impl StateVector {
    /// Accepts any vector with squared norm in `(0, 1 + 1e-9]`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let psi = Self::from_amplitudes_unchecked(amplitudes)?;
        let n2 = psi.norm_sqr();
        if !(n2 > 0.0 && n2 <= 1.0 + TRACE_SLACK) {
            return Err(Error::InvalidState(format!("squared norm {n2} outside (0, 1]")));
        }
        Ok(psi)
    }

    pub(crate) fn from_amplitudes_unchecked(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("state vector"));
        }
        Ok(Self { v: DVector::from_vec(amplitudes) })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: index + 1 });
        }
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.v
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.v.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.v.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.v[i].norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.v.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Either kind of state a trajectory may carry.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Mixed(DensityMatrix),
    Pure(StateVector),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Mixed(r) => r.dim(),
            State::Pure(p) => p.dim(),
        }
    }

    pub fn population(&self, i: usize) -> f64 {
        match self {
            State::Mixed(r) => r.population(i),
            State::Pure(p) => p.population(i),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        match self {
            State::Mixed(r) => r.populations(),
            State::Pure(p) => p.populations(),
        }
    }

    /// Total probability: trace for mixed states, squared norm for pure ones.
    pub fn weight(&self) -> f64 {
        match self {
            State::Mixed(r) => r.trace(),
            State::Pure(p) => p.norm_sqr(),
        }
    }
}

impl From<DensityMatrix> for State {
    fn from(r: DensityMatrix) -> Self {
        State::Mixed(r)
    }
}

impl From<StateVector> for State {
    fn from(p: StateVector) -> Self {
        State::Pure(p)
    }
}

/// `tr(rho A)` or `<psi|A|psi>`.
pub fn expectation(state: &State, op: &Operator) -> Result<Complex64> {
    op.check_dim(state.dim())?;
    Ok(match state {
        State::Mixed(rho) => {
            let m = rho.matrix();
            op.iter().map(|(r, c, a)| a * m[(c, r)]).sum()
        }
        State::Pure(psi) => {
            let v = psi.amplitudes();
            op.iter().map(|(r, c, a)| v[r].conj() * a * v[c]).sum()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn projector(dim: usize, i: usize) -> Operator {
        Operator::transition(dim, i, i).unwrap()
    }

    #[test]
    fn identity_expectation_is_trace() {
        let rho = DensityMatrix::basis(3, 1).unwrap();
        let e = expectation(&rho.into(), &Operator::identity(3)).unwrap();
        assert!((e - ONE).norm() < 1e-15);
    }

    #[test]
    fn projector_on_basis_state() {
        let psi = StateVector::basis(2, 0).unwrap();
        let e = expectation(&psi.into(), &projector(2, 0)).unwrap();
        assert!((e - ONE).norm() < 1e-15);
    }

    #[test]
    fn projector_on_superposition_gives_half() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::new(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap();
        let e = expectation(&psi.clone().into(), &projector(2, 1)).unwrap();
        assert!((e.re - 0.5).abs() < 1e-12 && e.im.abs() < 1e-10);
        let rho = DensityMatrix::from_pure(&psi);
        let e2 = expectation(&rho.into(), &projector(2, 1)).unwrap();
        assert!((e2.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let psi = StateVector::basis(2, 0).unwrap();
        assert!(matches!(expectation(&psi.into(), &projector(3, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        // trace 1 but indefinite: eigenvalues 1.00995.., -0.00995..
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn state_vector_norm_bounds() {
        assert!(StateVector::new(vec![ZERO, ZERO]).is_err());
        assert!(StateVector::new(vec![Complex64::new(2.0, 0.0)]).is_err());
        assert!(StateVector::new(vec![Complex64::new(0.5, 0.0)]).is_ok());
    }
}
