//! Layer coupling algebra.
//!
//! The coupling matrix `𝒜ᵢⱼ = ρ_min(i,j)` is dense, but its inverse `𝒞` is
//! tridiagonal with entries built from reciprocal density gaps. `𝒞` is kept
//! as two arrays and never densified outside of tests and diagnostics.

use crate::error::{Error, Result};
use crate::fem::ScalarField;
use crate::sparse::{kron, CsrMatrix, DenseMatrix};

const POWER_MAX_ITER: usize = 10_000;
const POWER_TOL: f64 = 1e-12;

/// Density profile and rest thicknesses, top layer first.
#[derive(Debug, Clone)]
pub struct LayerStack {
    densities: Vec<f64>,
    /// Rest thicknesses of layers `1..N-1`; the bottom layer is `bottom`.
    upper_thickness: Vec<f64>,
    bottom: ScalarField,
    /// Skip the `rho_N <= 2 rho_1` check.
    relaxed: bool,
}

impl LayerStack {
    /// Stack with constant thickness in every layer.
    pub fn new(densities: Vec<f64>, thicknesses: Vec<f64>) -> Result<Self> {
        Self::build(densities, thicknesses, false)
    }

    /// Like [`LayerStack::new`] but without the bound `rho_N <= 2 rho_1`.
    /// The layer operators stay well defined; only the stability estimates
    /// rely on that bound.
    pub fn new_unbounded_ratio(densities: Vec<f64>, thicknesses: Vec<f64>) -> Result<Self> {
        Self::build(densities, thicknesses, true)
    }

    fn build(densities: Vec<f64>, thicknesses: Vec<f64>, relaxed: bool) -> Result<Self> {
        if thicknesses.len() != densities.len() {
            return Err(Error::InvalidStack(format!(
                "{} densities but {} thicknesses",
                densities.len(),
                thicknesses.len()
            )));
        }
        let mut upper = thicknesses;
        let bottom = upper.pop().map(ScalarField::Constant);
        let stack = Self {
            densities,
            upper_thickness: upper,
            bottom: bottom.unwrap_or(ScalarField::Constant(1.0)),
            relaxed,
        };
        stack.validate()?;
        Ok(stack)
    }

    /// `n` layers of unit thickness with densities equally spaced on `[lo, hi]`.
    pub fn equidistributed(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let densities = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(densities, vec![1.0; n])
    }

    /// Replace the bottom-layer rest thickness by a cellwise field.
    pub fn with_bottom_thickness(mut self, field: ScalarField) -> Result<Self> {
        if let ScalarField::PerCell(v) = &field {
            if let Some((cell, &value)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
                return Err(Error::NonPositiveCoefficient { cell, value });
            }
        }
        self.bottom = field;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let rho = &self.densities;
        if rho.is_empty() {
            return Err(Error::InvalidStack("at least one layer is required".into()));
        }
        if let Some(r) = rho.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidStack(format!("density {r} is not positive")));
        }
        for (i, w) in rho.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidStack(format!(
                    "densities must strictly increase downward: rho[{}] = {} >= rho[{}] = {}",
                    i,
                    w[0],
                    i + 1,
                    w[1]
                )));
            }
        }
        let (first, last) = (rho[0], rho[rho.len() - 1]);
        if !self.relaxed && last > 2.0 * first {
            return Err(Error::InvalidStack(format!(
                "bottom density {last} exceeds twice the top density {first}"
            )));
        }
        if let Some(d) = self.upper_thickness.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidStack(format!("thickness {d} is not positive")));
        }
        if let ScalarField::Constant(d) = self.bottom {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidStack(format!("thickness {d} is not positive")));
            }
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.densities.len()
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    /// Rest thickness of layer `i`.
    pub fn thickness(&self, i: usize) -> ScalarField {
        if i + 1 == self.n_layers() {
            self.bottom.clone()
        } else {
            ScalarField::Constant(self.upper_thickness[i])
        }
    }

    /// `μᵢ = ρᵢ / D̄ᵢ`.
    pub fn mu(&self, i: usize) -> ScalarField {
        let rho = self.densities[i];
        self.thickness(i).map(|d| rho / d)
    }

    /// Smallest cellwise `μᵢ` over all layers.
    pub fn min_mu(&self) -> f64 {
        (0..self.n_layers())
            .map(|i| self.mu(i).min_value())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest and largest consecutive density gaps.
    pub fn gap_range(&self) -> Option<(f64, f64)> {
        let gaps = self.densities.windows(2).map(|w| w[1] - w[0]);
        gaps.fold(None, |acc, g| match acc {
            None => Some((g, g)),
            Some((lo, hi)) => Some((lo.min(g), hi.max(g))),
        })
    }
}

/// `𝒜ᵢⱼ = ρ_min(i,j)`.
pub fn coupling_matrix(stack: &LayerStack) -> DenseMatrix {
    let rho = stack.densities();
    DenseMatrix::from_fn(rho.len(), rho.len(), |i, j| rho[i.min(j)])
}

/// Symmetric tridiagonal `𝒞 = 𝒜⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingInverse {
    pub diag: Vec<f64>,
    /// `offdiag[i] = 𝒞[i, i+1] = 𝒞[i+1, i]`.
    pub offdiag: Vec<f64>,
}

pub fn coupling_inverse(stack: &LayerStack) -> CouplingInverse {
    let rho = stack.densities();
    let n = rho.len();
    let inv_gap: Vec<f64> = rho.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
    let mut diag = vec![0.0; n];
    diag[0] = 1.0 / rho[0];
    for (i, &g) in inv_gap.iter().enumerate() {
        diag[i] += g;
        diag[i + 1] += g;
    }
    let offdiag = inv_gap.iter().map(|g| -g).collect();
    CouplingInverse { diag, offdiag }
}

impl CouplingInverse {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.offdiag[i] * x[i + 1];
            y[i + 1] += self.offdiag[i] * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, self.diag[i]);
        }
        for (i, &o) in self.offdiag.iter().enumerate() {
            m.set(i, i + 1, o);
            m.set(i + 1, i, o);
        }
        m
    }
}

/// `𝒞 = ℒ𝒟ℒᵀ` with `ℒ` unit lower bidiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactors {
    /// `ℒ[i+1, i]`.
    pub sub: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn ldlt(cinv: &CouplingInverse) -> Result<LdlFactors> {
    let n = cinv.dim();
    let mut d = Vec::with_capacity(n);
    let mut sub = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let di = match i {
            0 => cinv.diag[0],
            _ => {
                let l = sub[i - 1];
                cinv.diag[i] - l * l * d[i - 1]
            }
        };
        if !(di > 0.0) {
            return Err(Error::NotPositiveDefinite { index: i, value: di });
        }
        d.push(di);
        if i + 1 < n {
            sub.push(cinv.offdiag[i] / di);
        }
    }
    Ok(LdlFactors { sub, d })
}

impl LdlFactors {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn l_dense(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else if i == j + 1 {
                self.sub[j]
            } else {
                0.0
            }
        })
    }

    /// `ℒ𝒟ℒᵀ` as a dense matrix.
    pub fn reconstruct(&self) -> DenseMatrix {
        let l = self.l_dense();
        let n = self.dim();
        let ld = DenseMatrix::from_fn(n, n, |i, j| l.get(i, j) * self.d[j]);
        ld.matmul(&l.transpose())
    }
}

/// Extremal eigenvalues of `𝒜` with their analytic brackets.
#[derive(Debug, Clone)]
pub struct SpectralBounds {
    pub lambda_1: f64,
    pub lambda_n: f64,
    /// `[N ρ₁, Σ ρⱼ]`.
    pub lambda_1_bracket: (f64, f64),
    /// `δρ_* / 4`, for N ≥ 2.
    pub lambda_n_lower: Option<f64>,
    /// `3 δρ^* / 10`, for N ≥ 5.
    pub lambda_n_upper: Option<f64>,
}

impl SpectralBounds {
    /// Bracket violations, empty when every estimate is certified.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (lo, hi) = self.lambda_1_bracket;
        if !(self.lambda_1 >= lo && self.lambda_1 <= hi) {
            out.push(format!("lambda_1 = {} outside [{lo}, {hi}]", self.lambda_1));
        }
        if let Some(lo) = self.lambda_n_lower {
            if self.lambda_n < lo {
                out.push(format!("lambda_N = {} below {lo}", self.lambda_n));
            }
        }
        if let Some(hi) = self.lambda_n_upper {
            if self.lambda_n > hi {
                out.push(format!("lambda_N = {} above {hi}", self.lambda_n));
            }
        }
        out
    }
}

pub fn spectral_bounds(stack: &LayerStack) -> Result<SpectralBounds> {
    let rho = stack.densities();
    let n = rho.len();
    let a = coupling_matrix(stack);
    let lambda_1 = power_iteration(|x| a.mul_vec(x), vec![1.0; n], "power iteration on A")?;
    // C is tridiagonal, so bisection gives its top eigenvalue directly; power
    // iteration stalls when that eigenvalue is nearly degenerate.
    let c = coupling_inverse(stack);
    let lambda_n = 1.0 / tridiagonal_extremes(&c.diag, &c.offdiag).1;
    let gaps = stack.gap_range();
    Ok(SpectralBounds {
        lambda_1,
        lambda_n,
        lambda_1_bracket: (n as f64 * rho[0], rho.iter().sum()),
        lambda_n_lower: gaps.map(|(lo, _)| lo / 4.0),
        lambda_n_upper: gaps.filter(|_| n >= 5).map(|(_, hi)| 0.3 * hi),
    })
}

/// Dominant eigenvalue of a symmetric positive-definite operator, returned as
/// the Rayleigh quotient once it changes by less than `POWER_TOL` relative.
fn power_iteration(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    mut x: Vec<f64>,
    what: &'static str,
) -> Result<f64> {
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut theta = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let y = apply(&x);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - theta).abs() <= POWER_TOL * next.abs() {
            return Ok(next);
        }
        theta = next;
    }
    Err(Error::NoConvergence {
        what,
        iterations: POWER_MAX_ITER,
    })
}

/// Extremal eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `a` and off-diagonal `b` by Sturm-sequence bisection.
pub fn tridiagonal_extremes(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len();
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] / d };
            d = a[i] - x - off;
            if d == 0.0 {
                d = -f64::EPSILON * (a[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let radius = (0..n)
        .map(|i| {
            let l = if i > 0 { b[i - 1].abs() } else { 0.0 };
            let r = if i < b.len() { b[i].abs() } else { 0.0 };
            a[i].abs() + l + r
        })
        .fold(0.0, f64::max);
    let bisect = |k: usize| {
        let (mut lo, mut hi) = (-radius, radius);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    (bisect(0), bisect(n - 1))
}

/// `small ⊗ big`, layer index outermost.
pub fn kron_lift(small: &DenseMatrix, big: &CsrMatrix) -> CsrMatrix {
    kron(small, big)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stack(rho: &[f64]) -> LayerStack {
        LayerStack::new_unbounded_ratio(rho.to_vec(), vec![1.0; rho.len()]).unwrap()
    }

    /// Eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence bisection.
    fn sturm_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
        let count_below = |x: f64| {
            let mut count = 0;
            let mut q = 1.0;
            for i in 0..diag.len() {
                let o2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
                q = diag[i] - x - if i == 0 { 0.0 } else { o2 / q };
                if q == 0.0 {
                    q = f64::EPSILON;
                }
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let r: f64 = diag.iter().map(|d| d.abs()).sum::<f64>() + 2.0 * off.iter().map(|o| o.abs()).sum::<f64>();
        let (mut lo, mut hi) = (-r, r);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn random_stack(n: usize, seed: &[f64]) -> LayerStack {
        let rho1 = 0.5 + seed[0];
        let span = rho1 * (0.05 + 0.95 * seed[1]);
        let w: Vec<f64> = (0..n.saturating_sub(1)).map(|i| 0.05 + seed[2 + i]).collect();
        let total: f64 = w.iter().sum();
        let mut rho = vec![rho1];
        for wi in w {
            let last = *rho.last().unwrap();
            rho.push(last + span * wi / total);
        }
        let last = rho.len() - 1;
        rho[last] = rho[last].min(2.0 * rho1);
        stack(&rho)
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling_matrix(&stack(&[1.0])).to_rows(), vec![vec![1.0]]);
        assert_eq!(
            coupling_matrix(&stack(&[1.0, 2.0, 3.0])).to_rows(),
            vec![vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 2.0], vec![1.0, 2.0, 3.0]]
        );
        let rho = [1.03, 1.0375, 1.045, 1.0525, 1.06];
        let a = coupling_matrix(&stack(&rho));
        assert!(a.is_symmetric(0.0));
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a.get(i, j), rho[i.min(j)]);
            }
        }
        let last_row: f64 = (0..5).map(|j| a.get(4, j)).sum();
        assert!((last_row - rho.iter().sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn inverse_examples() {
        let c = coupling_inverse(&stack(&[1.0, 2.0, 3.0]));
        assert_eq!(c.diag, vec![2.0, 2.0, 1.0]);
        assert_eq!(c.offdiag, vec![-1.0, -1.0]);
        let c1 = coupling_inverse(&stack(&[2.0]));
        assert_eq!(c1.diag, vec![0.5]);
        assert!(c1.offdiag.is_empty());
    }

    #[test]
    fn ldlt_examples() {
        let c = CouplingInverse {
            diag: vec![2.0, 2.0, 1.0],
            offdiag: vec![-1.0, -1.0],
        };
        let f = ldlt(&c).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(&f.sub, &[-0.5, -2.0 / 3.0]));
        assert!(close(&f.d, &[2.0, 1.5, 1.0 / 3.0]));
        let s = ldlt(&CouplingInverse {
            diag: vec![4.0],
            offdiag: vec![],
        })
        .unwrap();
        assert_eq!(s.d, vec![4.0]);
        assert!(s.sub.is_empty());
        let bad = CouplingInverse {
            diag: vec![1.0, 1.0],
            offdiag: vec![-2.0],
        };
        assert!(matches!(ldlt(&bad), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn spectral_examples() {
        let b = spectral_bounds(&stack(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(b.lambda_1_bracket, (3.0, 6.0));
        assert!(b.violations().is_empty());

        // 2×2 characteristic polynomial of [[1,1],[1,2]]
        let b = spectral_bounds(&stack(&[1.0, 2.0])).unwrap();
        let exact = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((b.lambda_n - exact).abs() < 1e-10);
        assert_eq!(b.lambda_n_lower, Some(0.25));
        assert!(b.lambda_n >= 0.25);

        let s = LayerStack::equidistributed(6, 1.03, 1.06).unwrap();
        let b = spectral_bounds(&s).unwrap();
        assert!(b.lambda_n >= 0.0015 && b.lambda_n <= 0.0018, "{}", b.lambda_n);
        assert!(b.violations().is_empty());
    }

    #[test]
    fn single_layer_bounds() {
        let b = spectral_bounds(&stack(&[1.7])).unwrap();
        assert!((b.lambda_1 - 1.7).abs() < 1e-14);
        assert!((b.lambda_n - 1.7).abs() < 1e-14);
        assert!(b.lambda_n_lower.is_none() && b.lambda_n_upper.is_none());
    }

    #[test]
    fn stack_validation() {
        assert!(LayerStack::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(LayerStack::new(vec![1.0, 0.9], vec![1.0, 1.0]).is_err());
        assert!(LayerStack::new(vec![1.0, 2.5], vec![1.0, 1.0]).is_err());
        assert!(LayerStack::new(vec![1.0, 1.5], vec![1.0, 0.0]).is_err());
        assert!(LayerStack::new(vec![], vec![]).is_err());
        assert!(LayerStack::new(vec![-1.0], vec![1.0]).is_err());
        assert!(LayerStack::new(vec![1.0, 2.0, 3.0], vec![1.0; 3]).is_err());
        assert!(LayerStack::new_unbounded_ratio(vec![1.0, 2.0, 3.0], vec![1.0; 3]).is_ok());
        assert!(LayerStack::new_unbounded_ratio(vec![1.0, 1.0], vec![1.0; 2]).is_err());
        let s = LayerStack::new(vec![1.0, 1.5], vec![2.0, 0.5]).unwrap();
        assert_eq!(s.mu(0), ScalarField::Constant(0.5));
        assert_eq!(s.mu(1), ScalarField::Constant(3.0));
        assert_eq!(s.min_mu(), 0.5);
        let s = s
            .with_bottom_thickness(ScalarField::PerCell(vec![1.0, 3.0]))
            .unwrap();
        assert_eq!(s.mu(1), ScalarField::PerCell(vec![1.5, 0.5]));
    }

    #[test]
    fn kron_examples() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let lifted = kron_lift(&DenseMatrix::identity(2), &m);
        assert_eq!(lifted.to_dense(), CsrMatrix::block_diag(&[&m, &m]).to_dense());
        let small = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]);
        let k = kron_lift(&small, &CsrMatrix::from_dense(&[vec![2.0]]));
        assert_eq!(k.to_dense(), vec![vec![2.0, 2.0], vec![2.0, 4.0]]);
    }

    #[test]
    fn kron_acts_on_separable_vectors() {
        let a = coupling_matrix(&stack(&[1.0, 1.2, 1.5]));
        let e = CsrMatrix::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let big = kron_lift(&a, &e);
        let x = [0.3, -1.1, 0.7];
        let ex = e.spmv(&x).unwrap();
        for j in 0..3 {
            let mut v = vec![0.0; 9];
            v[3 * j..3 * j + 3].copy_from_slice(&x);
            let got = big.spmv(&v).unwrap();
            for i in 0..3 {
                for r in 0..3 {
                    assert!((got[3 * i + r] - a.get(i, j) * ex[r]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn transformed_mass_is_tridiagonal() {
        let s = stack(&[1.0, 1.1, 1.3, 1.35, 1.6]);
        let f = ldlt(&coupling_inverse(&s)).unwrap();
        let l = f.l_dense();
        let m = DenseMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 });
        let t = l.transpose().matmul(&m).matmul(&l);
        for i in 0..5usize {
            for j in 0..5 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(t.get(i, j), 0.0);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn inverse_identity(n in 1usize..=50, seed in proptest::collection::vec(0.0f64..1.0, 52)) {
            let s = random_stack(n, &seed);
            let prod = coupling_inverse(&s).to_dense().matmul(&coupling_matrix(&s));
            prop_assert!(prod.max_abs_diff(&DenseMatrix::identity(n)) < 1e-12 * n as f64);
        }

        #[test]
        fn ldlt_reconstructs(n in 1usize..=20, seed in proptest::collection::vec(0.0f64..1.0, 22)) {
            let s = random_stack(n, &seed);
            let c = coupling_inverse(&s);
            let f = ldlt(&c).unwrap();
            prop_assert!(f.d.iter().all(|&d| d > 0.0));
            prop_assert!(f.reconstruct().max_abs_diff(&c.to_dense()) <= 1e-13 * c.diag.iter().fold(1.0f64, |m, d| m.max(d.abs())));
        }

        #[test]
        fn eigen_brackets(n in 1usize..=30, seed in proptest::collection::vec(0.0f64..1.0, 32)) {
            let s = random_stack(n, &seed);
            let b = spectral_bounds(&s).unwrap();
            prop_assert!(b.violations().is_empty(), "{:?}", b.violations());
            let c = coupling_inverse(&s);
            let top = sturm_eigenvalue(&c.diag, &c.offdiag, n - 1);
            prop_assert!((1.0 / b.lambda_n - top).abs() <= 1e-8 * top);
        }
    }
}
