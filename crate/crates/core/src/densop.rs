//! Dense density-operator algebra.
//!
//! States are carried as dense complex matrices. Branches produced by
//! measurements or non-trace-preserving Kraus maps keep their weight in the
//! trace, so heralding probabilities are read off directly instead of being
//! tracked on the side.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest Hilbert-space dimension any operation will build.
pub const DIM_CAP: usize = 256;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;
pub const NORMALIZED_TOL: f64 = 1e-10;
pub const KRAUS_TOL: f64 = 1e-10;

/// Branch weights at or below this are treated as impossible outcomes.
pub const VANISHING_TRACE: f64 = 1e-14;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `|row⟩⟨col|` in dimension `dim`.
pub fn outer_basis(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(row, col)] = c(1., 0.);
    m
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    Ok(())
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let v = CVector::from_vec(amplitudes);
        let dev = (v.norm_squared() - 1.0).abs();
        if dev > 1e-12 {
            return Err(Error::BadNorm(dev));
        }
        Ok(Self { amplitudes: v })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let v = CVector::from_vec(amplitudes);
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::BadNorm(1.0));
        }
        Ok(Self {
            amplitudes: v.unscale(n),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = c(1., 0.);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn kron(&self, other: &PureState) -> Result<PureState> {
        check_dim(self.dim() * other.dim())?;
        Ok(Self {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }
}

/// Possibly sub-normalized density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    matrix: CMatrix,
    normalized: bool,
}

impl DensityOp {
    /// Validates Hermiticity, positivity and trace before accepting `matrix`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_raw(matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape and trace checks only; positivity is the caller's guarantee.
    pub(crate) fn from_raw(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        check_dim(matrix.nrows())?;
        let tr = matrix.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(Error::BadTrace(tr));
        }
        Ok(Self {
            normalized: (tr - 1.0).abs() <= NORMALIZED_TOL,
            matrix,
        })
    }

    /// Checks a freshly computed channel output, then symmetrizes it. Returns
    /// `None` for a vanishing branch.
    pub(crate) fn from_channel_output(matrix: CMatrix) -> Result<Option<Self>> {
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let matrix = symmetrize(&matrix);
        if matrix.trace().re <= VANISHING_TRACE {
            return Ok(None);
        }
        Self::from_raw(matrix).map(Some)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self {
            matrix: v * v.adjoint(),
            normalized: true,
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self::from_pure(&PureState::basis(dim, index))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim) * c(1.0 / dim as f64, 0.),
            normalized: true,
        }
    }

    /// Convex (or sub-convex) combination of equal-dimension states.
    pub fn mixture(parts: &[(f64, &DensityOp)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative mixture weight {w}"
                )));
            }
            acc += &rho.matrix * c(*w, 0.);
        }
        Self::from_raw(acc)
    }

    pub fn validate(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let min = hermitian_eigenvalues(&symmetrize(&self.matrix))[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        let tr = self.trace();
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(Error::BadTrace(tr));
        }
        if self.normalized && (tr - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::NotNormalized(tr));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn normalize(&self) -> Self {
        let tr = self.trace();
        Self {
            matrix: self.matrix.unscale(tr),
            normalized: true,
        }
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityOp) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.matrix - &other.matrix))
    }
}

/// A labeled (sub-)channel `ρ ↦ Σ K ρ K†`. Operators may be rectangular
/// (isometries and subspace projections), but all share one shape.
#[derive(Clone, Debug)]
pub struct KrausSet {
    operators: Vec<CMatrix>,
    label: String,
    trace_preserving: bool,
}

impl KrausSet {
    /// Accepts any set with `Σ K†K ≤ 𝟙`; trace preservation is detected.
    pub fn new(label: impl Into<String>, operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        let (rows, cols) = first.shape();
        check_dim(rows)?;
        check_dim(cols)?;
        for k in &operators {
            if k.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: k.ncols(),
                });
            }
        }
        let gram = Self::gram(&operators, cols);
        let excess = hermitian_eigenvalues(&symmetrize(&(&gram - identity(cols))));
        let max_excess = *excess.last().unwrap_or(&0.0);
        if max_excess > KRAUS_TOL {
            return Err(Error::KrausExceedsIdentity(max_excess));
        }
        let tp_dev = max_abs(&(gram - identity(cols)));
        Ok(Self {
            operators,
            label: label.into(),
            trace_preserving: tp_dev <= KRAUS_TOL,
        })
    }

    /// Like [`KrausSet::new`] but rejects non-trace-preserving sets.
    pub fn channel(label: impl Into<String>, operators: Vec<CMatrix>) -> Result<Self> {
        let set = Self::new(label, operators)?;
        if !set.trace_preserving {
            let cols = set.input_dim();
            let dev = max_abs(&(Self::gram(&set.operators, cols) - identity(cols)));
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(set)
    }

    pub fn unitary(label: impl Into<String>, u: CMatrix) -> Result<Self> {
        Self::channel(label, vec![u])
    }

    fn gram(operators: &[CMatrix], cols: usize) -> CMatrix {
        operators
            .iter()
            .fold(CMatrix::zeros(cols, cols), |acc, k| acc + k.adjoint() * k)
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn input_dim(&self) -> usize {
        self.operators[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.operators[0].nrows()
    }
}

pub fn tensor(a: &DensityOp, b: &DensityOp) -> Result<DensityOp> {
    check_dim(a.dim() * b.dim())?;
    DensityOp::from_raw(kron(&a.matrix, &b.matrix))
}

/// Traces out every subsystem not listed in `keep`. Kept subsystems appear in
/// ascending index order.
pub fn partial_trace(
    rho: &DensityOp,
    subsystem_dims: &[usize],
    keep: &[usize],
) -> Result<DensityOp> {
    let total: usize = subsystem_dims.iter().product();
    if total != rho.dim() {
        return Err(Error::Subsystems(format!(
            "subsystem dimensions multiply to {total}, state has dimension {}",
            rho.dim()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= subsystem_dims.len()) {
        return Err(Error::Subsystems(format!("invalid keep set {keep:?}")));
    }
    let traced: Vec<usize> = (0..subsystem_dims.len())
        .filter(|i| !kept.contains(i))
        .collect();

    let mut strides = vec![1usize; subsystem_dims.len()];
    for i in (0..subsystem_dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * subsystem_dims[i + 1];
    }
    let offsets = |set: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize];
        for &s in set {
            let stride = strides[s];
            out = out
                .iter()
                .flat_map(|&base| (0..subsystem_dims[s]).map(move |d| base + d * stride))
                .collect();
        }
        out
    };
    let kept_off = offsets(&kept);
    let traced_off = offsets(&traced);

    let m = rho.matrix();
    let out = CMatrix::from_fn(kept_off.len(), kept_off.len(), |a, b| {
        traced_off
            .iter()
            .map(|&t| m[(kept_off[a] + t, kept_off[b] + t)])
            .sum()
    });
    Ok(DensityOp {
        normalized: rho.normalized,
        matrix: out,
    })
}

/// `Σ K ρ K†`; `None` when the branch has vanishing weight.
pub fn apply_kraus(rho: &DensityOp, kraus: &KrausSet) -> Result<Option<DensityOp>> {
    if kraus.input_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: kraus.input_dim(),
            found: rho.dim(),
        });
    }
    let out_dim = kraus.output_dim();
    let out = kraus
        .operators()
        .iter()
        .fold(CMatrix::zeros(out_dim, out_dim), |acc, k| {
            acc + k * rho.matrix() * k.adjoint()
        });
    let mut result = DensityOp::from_channel_output(out)?;
    if let Some(r) = result.as_mut() {
        if r.trace() > rho.trace() + TRACE_TOL {
            return Err(Error::BadTrace(r.trace()));
        }
        r.normalized = rho.normalized && kraus.trace_preserving;
    }
    Ok(result)
}

/// Conjugation by a unitary; never produces a vanishing branch.
pub fn apply_unitary(rho: &DensityOp, u: &CMatrix) -> Result<DensityOp> {
    if u.ncols() != rho.dim() || u.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.ncols(),
            found: rho.dim(),
        });
    }
    let out = u * rho.matrix() * u.adjoint();
    let dev = hermitian_deviation(&out);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(DensityOp {
        matrix: symmetrize(&out),
        normalized: rho.normalized,
    })
}

#[derive(Clone, Debug)]
pub struct Measured {
    pub label: String,
    pub probability: f64,
    /// Normalized post-measurement state, absent for impossible outcomes.
    pub state: Option<DensityOp>,
}

/// Generalized measurement: one [`KrausSet`] per outcome, jointly complete.
pub fn measure(rho: &DensityOp, outcomes: &[KrausSet]) -> Result<Vec<Measured>> {
    let dim = rho.dim();
    let mut gram = CMatrix::zeros(dim, dim);
    for set in outcomes {
        if set.input_dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: set.input_dim(),
            });
        }
        gram += KrausSet::gram(set.operators(), dim);
    }
    let dev = max_abs(&(gram - identity(dim)));
    if dev > KRAUS_TOL {
        return Err(Error::IncompleteMeasurement(dev));
    }
    outcomes
        .iter()
        .map(|set| {
            let branch = apply_kraus(rho, set)?;
            let probability = branch.as_ref().map_or(0.0, DensityOp::trace);
            let state = branch.filter(|b| b.trace() > 1e-12).map(|b| b.normalize());
            Ok(Measured {
                label: set.label().to_owned(),
                probability,
                state,
            })
        })
        .collect()
}

/// Lifts a square operator on the `targets` subsystems (in the given order)
/// to the full space described by `dims`.
pub fn embed(op: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    let local: usize = targets
        .iter()
        .map(|&t| dims.get(t).copied().unwrap_or(0))
        .product();
    if op.nrows() != local || op.ncols() != local {
        return Err(Error::DimensionMismatch {
            expected: local,
            found: op.nrows(),
        });
    }
    let total: usize = dims.iter().product();
    check_dim(total)?;
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let digits_of = |index: usize| -> Vec<usize> {
        targets
            .iter()
            .map(|&t| (index / strides[t]) % dims[t])
            .collect()
    };
    let local_index = |digits: &[usize]| -> usize {
        digits
            .iter()
            .zip(targets)
            .fold(0, |acc, (&d, &t)| acc * dims[t] + d)
    };
    let mut out = CMatrix::zeros(total, total);
    for col in 0..total {
        let col_digits = digits_of(col);
        let base = col
            - col_digits
                .iter()
                .zip(targets)
                .map(|(&d, &t)| d * strides[t])
                .sum::<usize>();
        let lc = local_index(&col_digits);
        for lr in 0..local {
            let v = op[(lr, lc)];
            if v == c(0., 0.) {
                continue;
            }
            let mut rem = lr;
            let mut row = base;
            for &t in targets.iter().rev() {
                row += (rem % dims[t]) * strides[t];
                rem /= dims[t];
            }
            out[(row, col)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn plus() -> PureState {
        PureState::new(vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)]).unwrap()
    }

    fn psi_plus() -> PureState {
        PureState::new(vec![
            c(0., 0.),
            c(FRAC_1_SQRT_2, 0.),
            c(FRAC_1_SQRT_2, 0.),
            c(0., 0.),
        ])
        .unwrap()
    }

    fn z_projectors() -> Vec<KrausSet> {
        vec![
            KrausSet::new("0", vec![outer_basis(2, 0, 0)]).unwrap(),
            KrausSet::new("1", vec![outer_basis(2, 1, 1)]).unwrap(),
        ]
    }

    #[test]
    fn tensor_of_mixed_qubits_is_mixed() {
        let half = DensityOp::maximally_mixed(2);
        let out = tensor(&half, &half).unwrap();
        assert!(out.max_abs_diff(&DensityOp::maximally_mixed(4)) < 1e-15);
        assert!(out.is_normalized());
    }

    #[test]
    fn tensor_of_basis_states() {
        let out = tensor(&DensityOp::basis(2, 0), &DensityOp::basis(2, 1)).unwrap();
        assert!(out.max_abs_diff(&DensityOp::basis(4, 1)) < 1e-15);
    }

    #[test]
    fn tensor_multiplies_traces() {
        let sub = DensityOp::new(outer_basis(2, 0, 0) * c(0.3, 0.)).unwrap();
        let plus2 = DensityOp::from_pure(&plus().kron(&plus()).unwrap());
        let out = tensor(&sub, &plus2).unwrap();
        assert_abs_diff_eq!(out.trace(), 0.3, epsilon = 1e-15);
        assert!(!out.is_normalized());
    }

    #[test]
    fn tensor_respects_dimension_cap() {
        let big = DensityOp::maximally_mixed(32);
        assert_eq!(
            tensor(&big, &DensityOp::maximally_mixed(16)).unwrap_err(),
            Error::DimensionCap {
                dim: 512,
                cap: DIM_CAP
            }
        );
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = DensityOp::from_pure(&psi_plus());
        let marginal = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(marginal.max_abs_diff(&DensityOp::maximally_mixed(2)) < 1e-15);
    }

    #[test]
    fn tracing_nothing_is_identity() {
        let rho = DensityOp::from_pure(&psi_plus());
        let out = partial_trace(&rho, &[2, 2], &[0, 1]).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn product_marginal() {
        let rho = DensityOp::basis(4, 1);
        let out = partial_trace(&rho, &[2, 2], &[1]).unwrap();
        assert!(out.max_abs_diff(&DensityOp::basis(2, 1)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_layout() {
        let rho = DensityOp::maximally_mixed(4);
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0]),
            Err(Error::Subsystems(_))
        ));
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[2]),
            Err(Error::Subsystems(_))
        ));
    }

    #[test]
    fn partial_trace_on_middle_subsystem() {
        // |0⟩⟨0| ⊗ 𝟙₃/3 ⊗ |1⟩⟨1|
        let a = DensityOp::basis(2, 0);
        let b = DensityOp::maximally_mixed(3);
        let cst = DensityOp::basis(2, 1);
        let rho = tensor(&tensor(&a, &b).unwrap(), &cst).unwrap();
        let out = partial_trace(&rho, &[2, 3, 2], &[0, 2]).unwrap();
        assert!(out.max_abs_diff(&DensityOp::basis(4, 1)) < 1e-15);
        let mid = partial_trace(&rho, &[2, 3, 2], &[1]).unwrap();
        assert!(mid.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn trace_preserving_kraus_keeps_trace() {
        let p: f64 = 0.3;
        let amp = KrausSet::channel(
            "amplitude damping",
            vec![
                CMatrix::from_row_slice(
                    2,
                    2,
                    &[c(1., 0.), c(0., 0.), c(0., 0.), c((1. - p).sqrt(), 0.)],
                ),
                CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(p.sqrt(), 0.), c(0., 0.), c(0., 0.)]),
            ],
        )
        .unwrap();
        let rho = DensityOp::from_pure(&plus());
        let out = apply_kraus(&rho, &amp).unwrap().unwrap();
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert!(out.is_normalized());
        out.validate().unwrap();
    }

    #[test]
    fn ground_projector_halves_mixed_state() {
        let k = KrausSet::new("ground", vec![outer_basis(2, 0, 0)]).unwrap();
        assert!(!k.is_trace_preserving());
        let out = apply_kraus(&DensityOp::maximally_mixed(2), &k)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(out.trace(), 0.5, epsilon = 1e-15);
        assert!(!out.is_normalized());
    }

    #[test]
    fn kraus_rejects_growth_and_mismatch() {
        let big = identity(2) * c(1.1, 0.);
        assert!(matches!(
            KrausSet::new("x", vec![big]),
            Err(Error::KrausExceedsIdentity(_))
        ));
        let k = KrausSet::channel("id", vec![identity(3)]).unwrap();
        assert!(matches!(
            apply_kraus(&DensityOp::maximally_mixed(2), &k),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            KrausSet::channel("half", vec![outer_basis(2, 0, 0)]),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn vanishing_branch_is_none() {
        let k = KrausSet::new("one", vec![outer_basis(2, 1, 1)]).unwrap();
        assert!(apply_kraus(&DensityOp::basis(2, 0), &k).unwrap().is_none());
    }

    #[test]
    fn z_measurement_of_plus() {
        let out = measure(&DensityOp::from_pure(&plus()), &z_projectors()).unwrap();
        assert_abs_diff_eq!(out[0].probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].probability, 0.5, epsilon = 1e-15);
        assert!(
            out[0]
                .state
                .as_ref()
                .unwrap()
                .max_abs_diff(&DensityOp::basis(2, 0))
                < 1e-15
        );
        assert!(
            out[1]
                .state
                .as_ref()
                .unwrap()
                .max_abs_diff(&DensityOp::basis(2, 1))
                < 1e-15
        );
    }

    #[test]
    fn z_measurement_of_ground() {
        let out = measure(&DensityOp::basis(2, 0), &z_projectors()).unwrap();
        assert_abs_diff_eq!(out[0].probability, 1.0, epsilon = 1e-15);
        assert_eq!(out[1].probability, 0.0);
        assert!(out[1].state.is_none());
    }

    #[test]
    fn parity_measurement_of_plus_plus() {
        let even = outer_basis(4, 0, 0) + outer_basis(4, 3, 3);
        let odd = outer_basis(4, 1, 1) + outer_basis(4, 2, 2);
        let sets = vec![
            KrausSet::new("even", vec![even]).unwrap(),
            KrausSet::new("odd", vec![odd]).unwrap(),
        ];
        let pp = DensityOp::from_pure(&plus().kron(&plus()).unwrap());
        let out = measure(&pp, &sets).unwrap();
        assert_abs_diff_eq!(out[0].probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].probability, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn incomplete_measurement_rejected() {
        let sets = vec![KrausSet::new("0", vec![outer_basis(2, 0, 0)]).unwrap()];
        assert!(matches!(
            measure(&DensityOp::maximally_mixed(2), &sets),
            Err(Error::IncompleteMeasurement(_))
        ));
    }

    #[test]
    fn embed_matches_kron_on_adjacent_and_reordered_targets() {
        let x = pauli_x();
        let z = pauli_z();
        let full = embed(&kron(&x, &z), &[2, 2, 2], &[0, 1]).unwrap();
        assert_eq!(full, kron(&kron(&x, &z), &identity(2)));
        // Reversed target order swaps the factor placement.
        let swapped = embed(&kron(&x, &z), &[2, 2, 2], &[2, 0]).unwrap();
        assert_eq!(swapped, kron(&kron(&z, &identity(2)), &x));
    }

    #[test]
    fn density_op_rejects_invalid_matrices() {
        let non_herm =
            CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0., 0.), c(0.5, 0.)]);
        assert!(matches!(
            DensityOp::new(non_herm),
            Err(Error::NotHermitian(_))
        ));
        let negative =
            CMatrix::from_row_slice(2, 2, &[c(1.2, 0.), c(0., 0.), c(0., 0.), c(-0.2, 0.)]);
        assert!(matches!(
            DensityOp::new(negative),
            Err(Error::NotPositive(_))
        ));
        let heavy = identity(2);
        assert!(matches!(DensityOp::new(heavy), Err(Error::BadTrace(_))));
    }
}
