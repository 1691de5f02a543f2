//! Numerical checks of the stability and equivalence estimates.
//!
//! Extremal generalized eigenvalues are found with Lanczos iteration on the
//! pencil `(K, B)` in the `B` inner product, with full reorthogonalization.
//! That is power iteration with every earlier iterate kept, so the Ritz
//! values converge to the ends of the spectrum much faster than the plain
//! Rayleigh quotient would; both ends come out of one run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::BoundaryCondition;
use crate::layers::{spectral_bounds, tridiagonal_extremes, LayerStack};
use crate::mesh::Mesh;
use crate::precond::{layer_decoupled_blocks, weighted_norm_matrix};
use crate::sparse::dense::{axpy, dot};
use crate::sparse::{direct_factor, CsrMatrix, DirectFactors};
use crate::system::{assemble_block_system_with_bc, BlockSystem, PhysicalParams};

/// Relative slack for comparisons between computed eigenvalues and bounds.
pub const BRACKET_RTOL: f64 = 1e-9;
const LANCZOS_TOL: f64 = 1e-13;
const LANCZOS_MAX_STEPS: usize = 600;

/// One verified claim.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct TheoryReport {
    /// `max{2, 1 + k/ε + kB*/C_ℳ²}`.
    pub continuity_constant: Option<f64>,
    pub infsup_floor: Option<f64>,
    pub inverse_constant: Option<f64>,
    pub q: Option<f64>,
    pub chi_0: Option<f64>,
    pub chi_1: Option<f64>,
    pub lambda_1: Option<f64>,
    pub lambda_n: Option<f64>,
    /// Extremal generalized Rayleigh quotients of `(C, Ĉ)`.
    pub quotient_range: Option<(f64, f64)>,
    /// Largest `â(x, y) / (‖x‖ ‖y‖)` seen over random pairs.
    pub continuity_max_ratio: Option<f64>,
    /// Smallest constructive inf-sup ratio seen.
    pub infsup_min_ratio: Option<f64>,
    pub checks: Vec<Check>,
}

impl TheoryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out
    }
}

/// Smallest and largest eigenvalue of `K x = λ B x` with `B` SPD and `K`
/// symmetric.
pub fn pencil_extremes(
    n: usize,
    apply_k: impl Fn(&[f64]) -> Vec<f64>,
    apply_b: impl Fn(&[f64]) -> Vec<f64>,
    solve_b: impl Fn(&[f64]) -> Vec<f64>,
    seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("empty eigenproblem".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut bq = apply_b(&q);
    let nrm = dot(&q, &bq).sqrt();
    q.iter_mut().for_each(|v| *v /= nrm);
    bq.iter_mut().for_each(|v| *v /= nrm);

    let mut basis = vec![q];
    let mut bbasis = vec![bq];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    let max_steps = LANCZOS_MAX_STEPS.min(n);
    for j in 0..max_steps {
        let kq = apply_k(&basis[j]);
        let a = dot(&kq, &basis[j]);
        alpha.push(a);
        let mut w = solve_b(&kq);
        for _ in 0..2 {
            for (v, bv) in basis.iter().zip(&bbasis) {
                let c = dot(&w, bv);
                axpy(-c, v, &mut w);
            }
        }
        let bw = apply_b(&w);
        let b = dot(&w, &bw).max(0.0).sqrt();

        let done = j + 1 == max_steps || b <= 1e-12 * a.abs().max(f64::MIN_POSITIVE);
        if j % 5 == 4 || done {
            let ext = tridiagonal_extremes(&alpha, &beta);
            let settled = (ext.0 - last.0).abs() <= LANCZOS_TOL * ext.0.abs().max(ext.1.abs())
                && (ext.1 - last.1).abs() <= LANCZOS_TOL * ext.1.abs();
            if settled || done {
                if !settled && j + 1 < n && b > 1e-12 * a.abs() {
                    return Err(Error::NoConvergence {
                        what: "Lanczos extremal eigenvalues",
                        iterations: j + 1,
                    });
                }
                return Ok(ext);
            }
            last = ext;
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v / b).collect());
        bbasis.push(bw.iter().map(|v| v / b).collect());
    }
    unreachable!("loop returns on its final step")
}

/// `C_I = h √λ_max` for the pencil `(I ⊗ E, M^V)`.
pub fn inverse_constant(sys: &BlockSystem) -> Result<f64> {
    let nv = sys.nv();
    let e = &sys.single.divdiv;
    let mass = direct_factor(&sys.mass_v)?;
    let apply_k = |x: &[f64]| -> Vec<f64> {
        x.chunks(nv).flat_map(|c| e.spmv(c).expect("layer block")).collect()
    };
    let (_, lmax) = pencil_extremes(
        sys.n_velocity(),
        apply_k,
        |x| sys.mass_v.spmv(x).expect("velocity space"),
        |x| mass.solve(x),
        17,
    )?;
    Ok(sys.h * lmax.max(0.0).sqrt())
}

/// Inverse constant on the closed-basin velocity space of `mesh` with the
/// `μ` weights of `stack`.
pub fn measure_inverse_constant(mesh: &Mesh, stack: &LayerStack) -> Result<f64> {
    let params = PhysicalParams::new(1.0, 0.0, 1.0, stack.n_layers());
    let sys = assemble_block_system_with_bc(mesh, stack, &params, BoundaryCondition::NormalTraceZero)?;
    inverse_constant(&sys)
}

/// `max{2, 1 + k/ε + k B* / C_ℳ²}` with `C_ℳ² = min μ`.
pub fn continuity_constant(sys: &BlockSystem) -> f64 {
    let p = &sys.params;
    let c_m2 = sys.stack.min_mu();
    (1.0 + p.k * p.rossby_inv + p.k * p.damping_bound() / c_m2).max(2.0)
}

/// Discrete forms `â` and `b̂` over `(u, η)` pairs.
struct Forms<'a> {
    sys: &'a BlockSystem,
}

impl Forms<'_> {
    fn a_hat(&self, (u, eta): (&[f64], &[f64]), (v, w): (&[f64], &[f64])) -> f64 {
        let s = self.sys;
        let p = &s.params;
        let fr2 = p.froude * p.froude;
        let du = s.div_a.spmv(u).expect("shape");
        let dv = s.div_a.spmv(v).expect("shape");
        s.a11.bilinear(v, u) - fr2 * p.k * dot(eta, &dv) + fr2 * s.elevation_inner(w, eta) + fr2 * p.k * dot(w, &du)
    }

    fn b_hat(&self, (u, eta): (&[f64], &[f64])) -> f64 {
        let s = self.sys;
        let fr2 = s.params.froude * s.params.froude;
        s.mass_v.bilinear(u, u) + s.divdiv_weight() * s.divdiv_a.bilinear(u, u) + fr2 * s.elevation_inner(eta, eta)
    }

    /// `η + k ∇·u` as DG0 coefficients.
    fn infsup_test_elevation(&self, u: &[f64], eta: &[f64]) -> Vec<f64> {
        let s = self.sys;
        let nw = s.nw();
        let nv = s.nv();
        let mut w = eta.to_vec();
        for (layer, chunk) in u.chunks(nv).enumerate() {
            let div = s.single.div.spmv(chunk).expect("shape");
            for c in 0..nw {
                w[layer * nw + c] += s.params.k * div[c] / s.single.mass_w[c];
            }
        }
        w
    }
}

/// Random-trial check of the continuity bound and the constructive inf-sup
/// bound for `â` in the `b̂` norm.
pub fn verify_infsup_continuity(sys: &BlockSystem, trials: usize, seed: u64) -> TheoryReport {
    let forms = Forms { sys };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let c = continuity_constant(sys);
    let floor = 1.0 / (2.0 * 3f64.sqrt());
    let mut report = TheoryReport {
        continuity_constant: Some(c),
        infsup_floor: Some(floor),
        ..Default::default()
    };

    let (mut worst_cont, mut worst_infsup) = (0.0f64, f64::INFINITY);
    let (mut cont_fail, mut coercive_fail, mut bound_fail) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..trials {
        let u = random(sys.n_velocity());
        let eta = random(sys.n_elevation());
        let v = random(sys.n_velocity());
        let w = random(sys.n_elevation());
        let nx = forms.b_hat((&u, &eta));
        let ny = forms.b_hat((&v, &w));
        let ratio = forms.a_hat((&u, &eta), (&v, &w)).abs() / (nx * ny).sqrt();
        worst_cont = worst_cont.max(ratio);
        if ratio > c * (1.0 + 1e-12) {
            cont_fail.push(t);
        }

        let wt = forms.infsup_test_elevation(&u, &eta);
        let a = forms.a_hat((&u, &eta), (&u, &wt));
        let nt = forms.b_hat((&u, &wt));
        if a < 0.5 * nx * (1.0 - 1e-12) {
            coercive_fail.push(t);
        }
        if nt > 3.0 * nx * (1.0 + 1e-12) {
            bound_fail.push(t);
        }
        worst_infsup = worst_infsup.min(a / (nx * nt).sqrt());
    }
    report.continuity_max_ratio = Some(worst_cont);
    report.infsup_min_ratio = Some(worst_infsup);
    report.check(
        "continuity",
        cont_fail.is_empty(),
        format!("max ratio {worst_cont:.6} vs C = {c:.6} over {trials} trials; failing trials {cont_fail:?}"),
    );
    report.check(
        "inf-sup coercivity on test pair",
        coercive_fail.is_empty(),
        format!("a >= |x|^2/2 violated in trials {coercive_fail:?}"),
    );
    report.check(
        "inf-sup test-pair norm",
        bound_fail.is_empty(),
        format!("|y|^2 <= 3|x|^2 violated in trials {bound_fail:?}"),
    );
    report.check(
        "inf-sup ratio",
        worst_infsup >= floor - 1e-12,
        format!("min ratio {worst_infsup:.6} vs floor {floor:.6}"),
    );
    report
}

/// Extremal generalized Rayleigh quotients of `(C, Ĉ)`, checked against
/// `[λ_N, λ₁]` and against `[χ₀, χ₁]` built from the measured inverse constant.
pub fn verify_chi_window(sys: &BlockSystem) -> Result<TheoryReport> {
    let c = weighted_norm_matrix(sys);
    let blocks = layer_decoupled_blocks(sys);
    let factors: Vec<DirectFactors> = blocks.iter().map(direct_factor).collect::<Result<_>>()?;
    let nv = sys.nv();
    let chat_apply = |x: &[f64]| -> Vec<f64> {
        x.chunks(nv)
            .zip(&blocks)
            .flat_map(|(xc, b): (&[f64], &CsrMatrix)| b.spmv(xc).expect("layer block"))
            .collect()
    };
    let chat_solve = |x: &[f64]| -> Vec<f64> {
        let mut y = x.to_vec();
        for (f, chunk) in factors.iter().zip(y.chunks_mut(nv)) {
            f.solve_in_place(chunk);
        }
        y
    };
    let (qmin, qmax) = pencil_extremes(
        sys.n_velocity(),
        |x| c.spmv(x).expect("velocity space"),
        chat_apply,
        chat_solve,
        29,
    )?;

    let bounds = spectral_bounds(&sys.stack)?;
    let (l1, ln) = (bounds.lambda_1, bounds.lambda_n);
    let ci = inverse_constant(sys)?;
    let h = sys.h;
    let q = ci * sys.params.k * sys.params.froude;
    let (q2, h2) = (q * q, h * h);
    let chi_0 = (ln * q2 + h2) / (q2 + h2);
    let chi_1 = (l1 * q2 + h2) / (q2 + h2);

    let mut report = TheoryReport {
        inverse_constant: Some(ci),
        q: Some(q),
        chi_0: Some(chi_0),
        chi_1: Some(chi_1),
        lambda_1: Some(l1),
        lambda_n: Some(ln),
        quotient_range: Some((qmin, qmax)),
        ..Default::default()
    };
    let tol = BRACKET_RTOL;
    // divergence-free fields give quotient 1, so the windows always contain 1;
    // this only matters when lambda_N > 1 (a single layer denser than 1)
    let (lo, hi) = (ln.min(1.0), l1.max(1.0));
    report.check(
        "quotients within [lambda_N, lambda_1]",
        qmin >= lo * (1.0 - tol) && qmax <= hi * (1.0 + tol),
        format!("[{qmin:.9}, {qmax:.9}] in [{lo:.9}, {hi:.9}]"),
    );
    let (lo, hi) = (chi_0.min(1.0), chi_1.max(1.0));
    report.check(
        "quotients within [chi_0, chi_1]",
        qmin >= lo * (1.0 - tol) && qmax <= hi * (1.0 + tol),
        format!("[{qmin:.9}, {qmax:.9}] in [{lo:.9}, {hi:.9}] (C_I = {ci:.6}, q = {q:.6})"),
    );
    let strict = if sys.n_layers() > 1 || l1 != 1.0 { chi_1 < l1 } else { chi_1 <= l1 };
    report.check("chi_1 < lambda_1", strict, format!("{chi_1:.9} vs {l1:.9}"));
    let floor = h2 / (q2 + h2);
    report.check(
        "chi_0 >= h^2/(q^2+h^2)",
        chi_0 >= floor * (1.0 - 1e-14),
        format!("{chi_0:.9} vs {floor:.9}"),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;
    use crate::system::assemble_block_system;

    fn system(n: usize, layers: usize, k: f64, rossby_inv: f64, damping: f64) -> BlockSystem {
        let mesh = build_unit_square_mesh(n, n).unwrap();
        let stack = LayerStack::equidistributed(layers, 1.03, 1.06).unwrap();
        let p = PhysicalParams::new(1.0, rossby_inv, k, layers).with_bottom_damping(damping);
        assemble_block_system(&mesh, &stack, &p).unwrap()
    }

    #[test]
    fn tridiagonal_extremes_match_closed_form() {
        // tridiag(-1, 2, -1) of size n: 2 - 2cos(jπ/(n+1))
        let n = 12;
        let (lo, hi) = tridiagonal_extremes(&vec![2.0; n], &vec![-1.0; n - 1]);
        let th = std::f64::consts::PI / (n + 1) as f64;
        assert!((lo - (2.0 - 2.0 * th.cos())).abs() < 1e-13);
        assert!((hi - (2.0 + 2.0 * th.cos())).abs() < 1e-13);
    }

    #[test]
    fn pencil_on_diagonal_matrices() {
        let k = CsrMatrix::from_diagonal(&[1.0, 4.0, 9.0, 2.0, 3.0]);
        let b = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0, 1.0, 0.5]);
        let (lo, hi) = pencil_extremes(
            5,
            |x| k.spmv(x).unwrap(),
            |x| b.spmv(x).unwrap(),
            |x| x.iter().zip(b.diagonal()).map(|(v, d)| v / d).collect(),
            1,
        )
        .unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 6.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_constant_refinement_stable() {
        let stack = LayerStack::equidistributed(2, 1.03, 1.06).unwrap();
        let c4 = measure_inverse_constant(&build_unit_square_mesh(4, 4).unwrap(), &stack).unwrap();
        let c8 = measure_inverse_constant(&build_unit_square_mesh(8, 8).unwrap(), &stack).unwrap();
        assert!(c4 > 0.0 && c8 > 0.0);
        assert!((c4 - c8).abs() <= 0.25 * c4.max(c8), "{c4} {c8}");
    }

    #[test]
    fn inverse_constant_bounds_random_fields() {
        let sys = system(4, 2, 0.1, 1.0, 0.0);
        let ci = inverse_constant(&sys).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = crate::sparse::kron(&crate::sparse::DenseMatrix::identity(2), &sys.single.divdiv);
        for _ in 0..20 {
            let u: Vec<f64> = (0..sys.n_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let quotient = e.bilinear(&u, &u) / sys.mass_v.bilinear(&u, &u);
            assert!(quotient <= (ci / sys.h).powi(2) * (1.0 + 1e-10));
        }
    }

    #[test]
    fn continuity_constant_formula() {
        let sys = system(2, 2, 0.3, 0.0, 0.0);
        assert_eq!(continuity_constant(&sys), 2.0);
        let sys = system(2, 2, 0.5, 4.0, 1.0);
        let expected = 1.0 + 0.5 * 4.0 + 0.5 * 1.0 / 1.03;
        assert!((continuity_constant(&sys) - expected).abs() < 1e-14);
    }

    #[test]
    fn infsup_trials_pass() {
        let sys = system(4, 3, 0.1, 1.0, 0.0);
        let r = verify_infsup_continuity(&sys, 50, 3);
        assert!(r.passed(), "{}", r.render());
        assert!(r.infsup_min_ratio.unwrap() >= 1.0 / (2.0 * 3f64.sqrt()));
    }

    #[test]
    fn chi_window_single_unit_layer() {
        let mesh = build_unit_square_mesh(4, 4).unwrap();
        let stack = LayerStack::new(vec![1.0], vec![1.0]).unwrap();
        let sys = assemble_block_system(&mesh, &stack, &PhysicalParams::new(1.0, 1.0, 0.125, 1)).unwrap();
        let r = verify_chi_window(&sys).unwrap();
        let (lo, hi) = r.quotient_range.unwrap();
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
        assert!(r.chi_0.unwrap() <= 1.0 + 1e-14 && r.chi_1.unwrap() >= 1.0 - 1e-14);
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn chi_window_multilayer() {
        let sys = system(4, 3, 0.125, 1.0, 0.0);
        let r = verify_chi_window(&sys).unwrap();
        assert!(r.passed(), "{}", r.render());
    }
}
