//! Dense kernels shared by every reducer: symmetric top-k eigenpairs,
//! thin-QR orthonormalization and a projected-gradient step on the
//! Stiefel manifold.
//!
//! Eigenvectors follow one sign convention everywhere: the entry of largest
//! magnitude is positive (first such index on exact ties). Under repeated
//! eigenvalues only the spanned subspace is meaningful; individual vectors
//! keep the solver's order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SdrError};

const SYMMETRY_TOL: f64 = 1e-10;
const EIGEN_MAX_ITERS: usize = 10_000;
/// Relative gap below which two eigenvalues are treated as tied.
pub const TIE_TOL: f64 = 1e-9;

/// A finite, symmetric square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry (absolute tolerance 1e-10, scaled by the largest
    /// entry when that exceeds one) and finiteness, then symmetrizes exactly.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(SdrError::contract(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("symmetric matrix"));
        }
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(SdrError::contract(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix(sym))
    }

    /// `XᵀX`, assembled so the result is exactly symmetric.
    pub fn gram(x: &DMatrix<f64>) -> Self {
        let mut g = x.tr_mul(x);
        symmetrize_in_place(&mut g);
        SymMatrix(g)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenvalues in descending order with matching column eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Flips `v` so its largest-magnitude entry is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Applies [`fix_sign`] to every column.
pub fn fix_sign_columns(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mut col = m.column(j).clone_owned();
        fix_sign(&mut col);
        m.set_column(j, &col);
    }
}

/// Every eigenpair of `s`, sorted descending (stable with respect to
/// solver order) and sign-normalized.
pub fn sym_eig_full(s: &SymMatrix) -> Result<EigenPairs> {
    let n = s.dim();
    if n == 0 {
        return Ok(EigenPairs {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(s.0.clone(), f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or(SdrError::IterationLimit {
            iterations: EIGEN_MAX_ITERS,
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = eig.eigenvectors.select_columns(&order);
    fix_sign_columns(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// The `k` largest eigenpairs of `s`.
pub fn sym_eig_topk(s: &SymMatrix, k: usize) -> Result<EigenPairs> {
    check_k(k, s.dim())?;
    let full = sym_eig_full(s)?;
    Ok(truncate(full, k))
}

fn truncate(full: EigenPairs, k: usize) -> EigenPairs {
    EigenPairs {
        values: full.values.rows(0, k).clone_owned(),
        vectors: full.vectors.columns(0, k).clone_owned(),
    }
}

fn check_k(k: usize, p: usize) -> Result<()> {
    if k == 0 || k > p {
        return Err(SdrError::contract(format!(
            "target dimension k={k} must lie in [1, {p}]"
        )));
    }
    Ok(())
}

/// Top-`k` eigenpairs where a tie straddling the cut (λ_k ≈ λ_{k+1}) is
/// resolved by the `tie_breakers`, applied in order: within the tied
/// eigenspace `W`, the directions maximizing `WᵀTW` are kept. Falls back to
/// solver order when every tie-breaker is flat too.
pub fn sym_eig_topk_tiebreak(
    s: &SymMatrix,
    k: usize,
    tie_breakers: &[&DMatrix<f64>],
) -> Result<EigenPairs> {
    check_k(k, s.dim())?;
    let full = sym_eig_full(s)?;
    let p = full.len();
    if k == p {
        return Ok(full);
    }
    let tol = TIE_TOL * full.values[0].abs().max(1.0);
    let cut = full.values[k - 1];
    if (cut - full.values[k]).abs() > tol {
        return Ok(truncate(full, k));
    }
    let lo = (0..k)
        .find(|&i| (full.values[i] - cut).abs() <= tol)
        .unwrap_or(k - 1);
    let hi = (k..p)
        .take_while(|&i| (full.values[i] - cut).abs() <= tol)
        .last()
        .unwrap_or(k);
    let mut block = full.vectors.columns(lo, hi - lo + 1).clone_owned();
    let mut need = k - lo;
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(need);

    for t in tie_breakers {
        let reduced = SymMatrix::new(block.tr_mul(&(*t * &block)))?;
        let sub = sym_eig_full(&reduced)?;
        let rotated = &block * &sub.vectors;
        let m = sub.len();
        if need == m {
            block = rotated;
            break;
        }
        let stol = TIE_TOL * sub.values[0].abs().max(1.0);
        let scut = sub.values[need - 1];
        if (scut - sub.values[need]).abs() > stol {
            block = rotated.columns(0, need).clone_owned();
            break;
        }
        // Directions strictly preferred by this tie-breaker are kept; the
        // remaining tied cluster goes to the next one.
        let slo = (0..need)
            .find(|&i| (sub.values[i] - scut).abs() <= stol)
            .unwrap_or(need - 1);
        let shi = (need..m)
            .take_while(|&i| (sub.values[i] - scut).abs() <= stol)
            .last()
            .unwrap_or(need);
        chosen.extend((0..slo).map(|i| rotated.column(i).clone_owned()));
        need -= slo;
        block = rotated.columns(slo, shi - slo + 1).clone_owned();
    }
    chosen.extend((0..need).map(|i| block.column(i).clone_owned()));

    let mut vectors = DMatrix::zeros(p, k);
    vectors
        .columns_mut(0, lo)
        .copy_from(&full.vectors.columns(0, lo));
    let mut tail = DMatrix::from_columns(&chosen);
    fix_sign_columns(&mut tail);
    vectors.columns_mut(lo, k - lo).copy_from(&tail);
    let values = DVector::from_fn(k, |i, _| {
        let v = vectors.column(i);
        (v.transpose() * s.as_matrix() * v)[(0, 0)]
    });
    Ok(EigenPairs { values, vectors })
}

/// A `P×K` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint(DMatrix<f64>);

impl StiefelPoint {
    pub const FEASIBILITY_TOL: f64 = 1e-8;

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let err = stiefel_error(&m);
        if err > Self::FEASIBILITY_TOL {
            return Err(SdrError::contract(format!(
                "columns are not orthonormal (‖UᵀU − I‖_F = {err:.3e})"
            )));
        }
        Ok(StiefelPoint(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// `‖UᵀU − I‖_F`.
pub fn stiefel_error(u: &DMatrix<f64>) -> f64 {
    let k = u.ncols();
    (u.tr_mul(u) - DMatrix::<f64>::identity(k, k)).norm()
}

/// Thin-QR factor of `m` with a nonnegative diagonal in `R`.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<StiefelPoint> {
    let (p, k) = m.shape();
    if k > p {
        return Err(SdrError::RankDeficient { column: p });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SdrError::NonFinite("orthonormalize input"));
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    let scale = m
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for j in 0..k {
        let d = r[(j, j)];
        if d.abs() <= 1e-12 * scale {
            return Err(SdrError::RankDeficient { column: j });
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(StiefelPoint(q))
}

/// Projects `g` onto the tangent space at `u`: `G − U·sym(UᵀG)`.
pub fn tangent_projection(u: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let utg = u.tr_mul(g);
    let sym = (&utg + utg.transpose()) * 0.5;
    g - u * sym
}

/// One projected-gradient step followed by a QR retraction.
pub fn stiefel_step(u: &StiefelPoint, g: &DMatrix<f64>, step: f64) -> Result<StiefelPoint> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(SdrError::contract(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    if u.0.shape() != g.shape() {
        return Err(SdrError::contract(format!(
            "gradient shape {:?} does not match point shape {:?}",
            g.shape(),
            u.0.shape()
        )));
    }
    let xi = tangent_projection(&u.0, g);
    if xi.iter().all(|v| *v == 0.0) {
        return Ok(u.clone());
    }
    orthonormalize(&(&u.0 - xi * step))
}

/// `‖AAᵀ − BBᵀ‖_F` for column-orthonormal `A`, `B`.
pub fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * a.transpose() - b * b.transpose()).norm()
}

/// Solves `A x = b` for symmetric positive semi-definite `A`, falling back
/// to a minimum-norm pseudo-inverse when Cholesky fails.
pub(crate) fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = a.clone().cholesky() {
        return ch.solve(b);
    }
    let svd = a.clone().svd(true, true);
    let eps = f64::EPSILON * a.nrows() as f64 * svd.singular_values.max();
    svd.solve(b, eps).unwrap_or_else(|_| DMatrix::zeros(b.nrows(), b.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    #[test]
    fn diagonal_top1() {
        let s = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        let e = sym_eig_topk(&s, 1).unwrap();
        assert!(close(e.values[0], 3.0, 1e-14));
        assert!(close(e.vectors[(0, 0)], 1.0, 1e-14));
        assert!(close(e.vectors[(1, 0)], 0.0, 1e-14));
    }

    #[test]
    fn two_by_two_closed_form() {
        let s = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let e = sym_eig_topk(&s, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(e.values[0], 3.0, 1e-12));
        assert!(close(e.values[1], 1.0, 1e-12));
        assert!(close(e.vectors[(0, 0)], h, 1e-12));
        assert!(close(e.vectors[(1, 0)], h, 1e-12));
        // (1,-1)/√2: tie on magnitude, lowest index made positive
        assert!(close(e.vectors[(0, 1)], h, 1e-12));
        assert!(close(e.vectors[(1, 1)], -h, 1e-12));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(SdrError::Contract(_))));
    }

    #[test]
    fn rejects_bad_k() {
        let s = SymMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert!(sym_eig_topk(&s, 0).is_err());
        assert!(sym_eig_topk(&s, 4).is_err());
    }

    #[test]
    fn sign_rule_idempotent() {
        let mut v = DVector::from_vec(vec![0.3, -0.9, 0.2]);
        fix_sign(&mut v);
        assert_eq!(v[1], 0.9);
        let once = v.clone();
        fix_sign(&mut v);
        assert_eq!(v, once);
    }

    #[test]
    fn orthonormalize_identity_columns() {
        let m = DMatrix::<f64>::identity(4, 2);
        let q = orthonormalize(&m).unwrap();
        assert!((q.as_matrix() - &m).norm() < 1e-15);
    }

    #[test]
    fn orthonormalize_removes_scaling() {
        let m = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let q = orthonormalize(&m).unwrap();
        let want = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((q.as_matrix() - want).norm() < 1e-15);
    }

    #[test]
    fn orthonormalize_names_deficient_column() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        match orthonormalize(&m) {
            Err(SdrError::RankDeficient { column }) => assert_eq!(column, 1),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn stiefel_fixed_points() {
        let u = orthonormalize(&DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 0.2, 0.5, 1.0, -0.3, 0.4],
        ))
        .unwrap();
        let zero = DMatrix::zeros(3, 2);
        assert_eq!(stiefel_step(&u, &zero, 0.5).unwrap(), u);
        let normal = u.as_matrix().clone();
        let moved = stiefel_step(&u, &normal, 3.0).unwrap();
        assert!((moved.as_matrix() - u.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn stiefel_rejects_nonpositive_step() {
        let u = StiefelPoint::new(DMatrix::identity(3, 1)).unwrap();
        let g = DMatrix::zeros(3, 1);
        assert!(stiefel_step(&u, &g, 0.0).is_err());
        assert!(stiefel_step(&u, &g, -1.0).is_err());
    }

    #[test]
    fn tiebreak_resolves_degenerate_cut() {
        // Eigenvalues (5, 1, 1, 1): the cut at k=2 is inside a tied block.
        let mut s = DMatrix::identity(4, 4);
        s[(0, 0)] = 5.0;
        let s = SymMatrix::new(s).unwrap();
        let mut t = DMatrix::zeros(4, 4);
        t[(2, 2)] = 1.0;
        let e = sym_eig_topk_tiebreak(&s, 2, &[&t]).unwrap();
        assert!((e.vectors[(2, 1)] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
    }
}
