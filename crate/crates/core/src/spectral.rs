//! Dense symmetric linear algebra: eigendecompositions, block views of a
//! matrix relative to a subspace, Schur splits, tail statistics and
//! principal angles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, RsrError};
use crate::tol;

/// A real symmetric matrix.
///
/// Construction through [`SymMatrix::new`] checks symmetry; internal results
/// are symmetrized with [`SymMatrix::symmetrize`] so round-off never breaks
/// the invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl TryFrom<DMatrix<f64>> for SymMatrix {
    type Error = RsrError;
    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        SymMatrix::new(m)
    }
}

impl From<SymMatrix> for DMatrix<f64> {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(RsrError::InvalidMatrix(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.nrows() == 0 {
            return Err(RsrError::InvalidMatrix("empty matrix".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(RsrError::InvalidMatrix("non-finite entry".into()));
        }
        let scale = 1.0 + m.amax();
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > tol::SYMMETRY_REL * scale {
                    return Err(RsrError::InvalidMatrix(format!(
                        "asymmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// Returns `(M + Mᵀ)/2` without validation.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// `Σ λ_i v_i v_iᵀ` for the columns `v_i` of `vectors`.
    pub fn from_spectrum(vectors: &DMatrix<f64>, values: &[f64]) -> Self {
        let mut scaled = vectors.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        Self::symmetrize(scaled * vectors.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix(&self.0 * s)
    }

    /// Rescales to unit trace. Fails when the trace is not positive.
    pub fn trace_normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 0.0) || !t.is_finite() {
            return Err(RsrError::InvalidMatrix(format!("cannot normalize trace {t}")));
        }
        Ok(self.scaled(1.0 / t))
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    /// `A M Aᵀ`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrize(a * &self.0 * a.transpose())
    }

    /// Eigenvalues in non-increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Largest absolute eigenvalue, i.e. the spectral norm.
    pub fn spectral_norm(&self) -> f64 {
        self.0.clone().symmetric_eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Fails with `NotPsd` when the smallest eigenvalue is below `−PSD_REL·(1+‖M‖)`.
    pub fn check_psd(&self) -> Result<()> {
        let ev = self.eigenvalues();
        let top = ev[0].abs().max(ev[ev.len() - 1].abs());
        let min = ev[ev.len() - 1];
        if min < -tol::PSD_REL * (1.0 + top) {
            return Err(RsrError::NotPsd { min_eigenvalue: min });
        }
        Ok(())
    }

    /// Fails with `NotPd` unless the smallest eigenvalue exceeds `PD_REL·‖M‖`.
    pub fn check_pd(&self) -> Result<()> {
        let ev = self.eigenvalues();
        let min = ev[ev.len() - 1];
        if !(min > tol::PD_REL * ev[0].abs()) || ev[0] <= 0.0 {
            return Err(RsrError::NotPd { min_eigenvalue: min });
        }
        Ok(())
    }
}

/// Orthonormal basis of a `d`-dimensional subspace of ℝ^D, `1 ≤ d < D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis(DMatrix<f64>);

impl TryFrom<DMatrix<f64>> for SubspaceBasis {
    type Error = RsrError;
    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        SubspaceBasis::new(m)
    }
}

impl From<SubspaceBasis> for DMatrix<f64> {
    fn from(s: SubspaceBasis) -> Self {
        s.0
    }
}

impl SubspaceBasis {
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        Self::check_shape(&cols)?;
        let gram = cols.transpose() * &cols;
        let dev = (gram - DMatrix::<f64>::identity(cols.ncols(), cols.ncols())).amax();
        if !(dev <= tol::ORTHONORMAL) {
            return Err(RsrError::InvalidMatrix(format!("basis is not orthonormal (max deviation {dev:e})")));
        }
        Ok(SubspaceBasis(cols))
    }

    /// Orthonormalizes arbitrary full-column-rank columns (thin QR with a
    /// positive diagonal in R).
    pub fn orthonormalize(cols: DMatrix<f64>) -> Result<Self> {
        Self::check_shape(&cols)?;
        if cols.iter().any(|v| !v.is_finite()) {
            return Err(RsrError::InvalidMatrix("non-finite entry".into()));
        }
        let d = cols.ncols();
        let qr = cols.qr();
        let r = qr.r();
        let mut q = qr.q();
        let rmax = r.diagonal().amax();
        for j in 0..d {
            let rjj = r[(j, j)];
            if !(rjj.abs() > 1e-12 * rmax.max(f64::MIN_POSITIVE)) {
                return Err(RsrError::InvalidMatrix("columns are rank deficient".into()));
            }
            if rjj < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        Ok(SubspaceBasis(reorthonormalize(q)))
    }

    /// The span of the first `d` standard basis vectors of ℝ^D.
    pub fn standard(ambient: usize, d: usize) -> Result<Self> {
        let mut m = DMatrix::zeros(ambient, d);
        for j in 0..d.min(ambient) {
            m[(j, j)] = 1.0;
        }
        Self::new(m)
    }

    fn check_shape(cols: &DMatrix<f64>) -> Result<()> {
        let (rows, d) = cols.shape();
        if d == 0 || d >= rows {
            return Err(RsrError::DimensionError(format!(
                "subspace dimension must satisfy 1 <= d < D, got d={d}, D={rows}"
            )));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `U Uᵀ`.
    pub fn projector(&self) -> SymMatrix {
        SymMatrix::symmetrize(&self.0 * self.0.transpose())
    }

    /// The same subspace with basis `U R` for a `d×d` orthogonal `R`.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<Self> {
        if r.shape() != (self.dim(), self.dim()) {
            return Err(RsrError::DimensionError("rotation must be d x d".into()));
        }
        Self::new(&self.0 * r)
    }
}

/// Two Gram-Schmidt sweeps over the columns; keeps the input span.
fn reorthonormalize(mut q: DMatrix<f64>) -> DMatrix<f64> {
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let ck = q.column(k).clone_owned();
                q.column_mut(j).axpy(-proj, &ck, 1.0);
            }
            let n = q.column(j).norm();
            q.column_mut(j).unscale_mut(n);
        }
    }
    q
}

/// Eigenvalues in non-increasing order with paired orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Top-`d` eigenvectors as a subspace basis.
    pub fn top_subspace(&self, d: usize) -> Result<SubspaceBasis> {
        SubspaceBasis::new(self.vectors.columns(0, d).clone_owned())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_spectrum(&self.vectors, self.values.as_slice())
    }
}

/// Symmetric eigendecomposition with a deterministic ordering and sign policy.
///
/// Values are non-increasing. Each eigenvector has its largest-magnitude
/// entry positive (ties go to the lowest index). Eigenvalues within
/// `EIGEN_TIE_REL·(1+max|σ|)` of their neighbour form a tie group whose
/// vectors are ordered by first differing coordinate, larger first.
pub fn eigh(m: &SymMatrix) -> Result<EigenSystem> {
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(RsrError::InvalidMatrix("non-finite entry".into()));
    }
    let n = m.dim();
    let se = SymmetricEigen::new(m.0.clone());
    let mut vecs = se.eigenvectors;
    for j in 0..n {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..n {
            let a = vecs[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if vecs[(best, j)] < 0.0 {
            vecs.column_mut(j).neg_mut();
        }
    }
    let vals = se.eigenvalues;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let tie = tol::EIGEN_TIE_REL * (1.0 + vals.amax());
    let lex_desc = |a: &usize, b: &usize| {
        for i in 0..n {
            let (x, y) = (vecs[(i, *a)], vecs[(i, *b)]);
            if x != y {
                return y.total_cmp(&x);
            }
        }
        std::cmp::Ordering::Equal
    };
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[order[end - 1]] - vals[order[end]] <= tie {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by(lex_desc);
        }
        start = end;
    }

    let values = DVector::from_iterator(n, order.iter().map(|&k| vals[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vectors.set_column(j, &vecs.column(k));
    }
    Ok(EigenSystem { values, vectors })
}

/// Applies `f` to the eigenvalues of `m`.
pub fn matrix_function(m: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    let es = eigh(m)?;
    let vals: Vec<f64> = es.values.iter().map(|&v| f(v)).collect();
    Ok(SymMatrix::from_spectrum(&es.vectors, &vals))
}

/// Principal square root of a PSD matrix; negative round-off is clamped to 0.
pub fn sqrtm(m: &SymMatrix) -> Result<SymMatrix> {
    matrix_function(m, |v| v.max(0.0).sqrt())
}

/// `M^{-1/2}` for a PD matrix.
pub fn inv_sqrtm(m: &SymMatrix) -> Result<SymMatrix> {
    m.check_pd()?;
    matrix_function(m, |v| 1.0 / v.sqrt())
}

/// `M^{-1}` for a PD matrix.
pub fn inverse(m: &SymMatrix) -> Result<SymMatrix> {
    m.check_pd()?;
    matrix_function(m, |v| 1.0 / v)
}

/// Largest singular value of a general matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().amax()
}

/// Orthonormal basis of the orthogonal complement of `U`.
///
/// Greedy Gram-Schmidt over the standard basis: at each step the vector
/// `e_i` with the largest residual after projecting out `U` and the columns
/// chosen so far is taken (lowest `i` on ties), and orthogonalized twice.
/// The result depends only on the entries of `U`.
pub fn complement_basis(u: &SubspaceBasis) -> SubspaceBasis {
    let big_d = u.ambient_dim();
    let k = big_d - u.dim();
    let mut q: Vec<DVector<f64>> = (0..u.dim()).map(|j| u.0.column(j).clone_owned()).collect();
    let mut out = DMatrix::zeros(big_d, k);
    let mut used = vec![false; big_d];
    for col in 0..k {
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for i in 0..big_d {
            if used[i] {
                continue;
            }
            let mut r = DVector::zeros(big_d);
            r[i] = 1.0;
            for _ in 0..2 {
                for b in &q {
                    let p = b.dot(&r);
                    r.axpy(-p, b, 1.0);
                }
            }
            let nr = r.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| nr > *bn) {
                best = Some((i, r, nr));
            }
        }
        let (i, r, nr) = best.expect("complement has remaining candidates");
        used[i] = true;
        let v = r / nr;
        out.set_column(col, &v);
        q.push(v);
    }
    SubspaceBasis(out)
}

/// Blocks `Σ_{L₁,L₂} = U_{L₁}ᵀ M U_{L₂}` for `L` and its complement `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub sigma_ll: DMatrix<f64>,
    pub sigma_lp: DMatrix<f64>,
    pub sigma_pl: DMatrix<f64>,
    pub sigma_pp: DMatrix<f64>,
    pub basis: SubspaceBasis,
    pub complement: SubspaceBasis,
}

impl BlockDecomposition {
    /// Rebuilds `M = [U|W] [[LL, LP],[PL, PP]] [U|W]ᵀ`.
    pub fn reassemble(&self) -> SymMatrix {
        let d = self.basis.dim();
        let n = self.basis.ambient_dim();
        let mut q = DMatrix::zeros(n, n);
        q.columns_mut(0, d).copy_from(self.basis.columns());
        q.columns_mut(d, n - d).copy_from(self.complement.columns());
        let mut b = DMatrix::zeros(n, n);
        b.view_mut((0, 0), (d, d)).copy_from(&self.sigma_ll);
        b.view_mut((0, d), (d, n - d)).copy_from(&self.sigma_lp);
        b.view_mut((d, 0), (n - d, d)).copy_from(&self.sigma_pl);
        b.view_mut((d, d), (n - d, n - d)).copy_from(&self.sigma_pp);
        SymMatrix::symmetrize(&q * b * q.transpose())
    }
}

fn check_dims(m: &SymMatrix, u: &SubspaceBasis) -> Result<()> {
    if m.dim() != u.ambient_dim() {
        return Err(RsrError::DimensionError(format!(
            "matrix is {0}x{0} but basis lives in R^{1}",
            m.dim(),
            u.ambient_dim()
        )));
    }
    Ok(())
}

pub fn blocks(m: &SymMatrix, u: &SubspaceBasis) -> Result<BlockDecomposition> {
    check_dims(m, u)?;
    let w = complement_basis(u);
    let (uu, ww) = (u.columns(), w.columns());
    let mu = &m.0 * uu;
    let mw = &m.0 * ww;
    let sigma_ll = SymMatrix::symmetrize(uu.transpose() * &mu).0;
    let sigma_pp = SymMatrix::symmetrize(ww.transpose() * &mw).0;
    let sigma_lp = uu.transpose() * &mw;
    let sigma_pl = sigma_lp.transpose();
    Ok(BlockDecomposition { sigma_ll, sigma_lp, sigma_pl, sigma_pp, basis: u.clone(), complement: w })
}

/// `Σ_LL − Σ_LP Σ_PP⁻¹ Σ_PL` in `L`-coordinates (a `d×d` matrix).
///
/// `Σ_PP` is inverted after clamping its eigenvalues from below at
/// `max(floor, SCHUR_FLOOR_REL·σ₁(Σ_PP))`. A zero `Σ_PP` contributes nothing.
///
/// When every eigenvalue of the whole matrix exceeds that clamp the result is
/// computed as `((M⁻¹)_LL)⁻¹`, which is the same matrix without the
/// cancellation of the subtraction.
pub fn schur_complement_block(b: &BlockDecomposition, floor: f64) -> Result<DMatrix<f64>> {
    let pp = SymMatrix::symmetrize(b.sigma_pp.clone());
    let es = eigh(&pp)?;
    let top = es.values[0].max(0.0);
    let fl = floor.max(tol::SCHUR_FLOOR_REL * top);
    if !(fl > 0.0) {
        return Ok(b.sigma_ll.clone());
    }
    let d = b.basis.dim();
    let n = b.basis.ambient_dim();
    let mut local = DMatrix::zeros(n, n);
    local.view_mut((0, 0), (d, d)).copy_from(&b.sigma_ll);
    local.view_mut((0, d), (d, n - d)).copy_from(&b.sigma_lp);
    local.view_mut((d, 0), (n - d, d)).copy_from(&b.sigma_pl);
    local.view_mut((d, d), (n - d, n - d)).copy_from(&b.sigma_pp);
    let full = eigh(&SymMatrix::symmetrize(local))?;
    if full.values[n - 1] > fl {
        let inv: Vec<f64> = full.values.iter().map(|&v| 1.0 / v).collect();
        let minv = SymMatrix::from_spectrum(&full.vectors, &inv);
        let ll = SymMatrix::symmetrize(minv.matrix().view((0, 0), (d, d)).clone_owned());
        let lle = eigh(&ll)?;
        let back: Vec<f64> = lle.values.iter().map(|&v| 1.0 / v).collect();
        return Ok(SymMatrix::from_spectrum(&lle.vectors, &back).0);
    }
    let inv: Vec<f64> = es.values.iter().map(|&v| 1.0 / v.max(fl)).collect();
    let pinv = SymMatrix::from_spectrum(&es.vectors, &inv);
    let corr = &b.sigma_lp * pinv.matrix() * &b.sigma_pl;
    Ok(SymMatrix::symmetrize(&b.sigma_ll - corr).0)
}

/// `g₁` and `g₂ = M − g₁` of a PSD matrix relative to `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurSplit {
    pub g1: SymMatrix,
    pub g2: SymMatrix,
}

/// Splits a PSD matrix into `g₁`, supported on the `(L,L)` block and equal
/// to the Schur complement there, and `g₂ = M − g₁`.
pub fn schur_split(m: &SymMatrix, u: &SubspaceBasis, floor: f64) -> Result<SchurSplit> {
    check_dims(m, u)?;
    if !(floor >= 0.0) {
        return Err(RsrError::InvalidConfig(format!("floor must be >= 0, got {floor}")));
    }
    m.check_psd()?;
    let b = blocks(m, u)?;
    let s = schur_complement_block(&b, floor)?;
    let g1 = SymMatrix::symmetrize(u.columns() * s * u.columns().transpose());
    let g2 = m.sub(&g1);
    Ok(SchurSplit { g1, g2 })
}

/// Mean of the `D−d` smallest eigenvalues.
pub fn tail_mean(m: &SymMatrix, d: usize) -> Result<f64> {
    let n = m.dim();
    if d == 0 || d >= n {
        return Err(RsrError::DimensionError(format!("need 1 <= d < D, got d={d}, D={n}")));
    }
    let ev = m.eigenvalues();
    Ok(ev[d..].iter().sum::<f64>() / (n - d) as f64)
}

/// Nearest rank-`d` part `Π_d` and the projector onto the remaining eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub pi_d: SymMatrix,
    pub p_tail: SymMatrix,
    pub eigen: EigenSystem,
    /// `σ_d = σ_{d+1}` within tolerance: the top-`d` subspace is ill-defined.
    pub degenerate_spectrum: bool,
}

pub fn rank_d_truncation(m: &SymMatrix, d: usize) -> Result<Truncation> {
    let n = m.dim();
    if d == 0 || d >= n {
        return Err(RsrError::DimensionError(format!("need 1 <= d < D, got d={d}, D={n}")));
    }
    let es = eigh(m)?;
    let top = es.vectors.columns(0, d).clone_owned();
    let tail = es.vectors.columns(d, n - d).clone_owned();
    let pi_d = SymMatrix::from_spectrum(&top, &es.values.as_slice()[..d]);
    let p_tail = SymMatrix::symmetrize(&tail * tail.transpose());
    let gap = es.values[d - 1] - es.values[d];
    let degenerate_spectrum = gap <= tol::DEGENERATE_GAP_REL * es.values[0].abs().max(f64::MIN_POSITIVE);
    Ok(Truncation { pi_d, p_tail, eigen: es, degenerate_spectrum })
}

/// Principal angles between two equal-dimensional subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    /// `θ₁ ≥ … ≥ θ_d`, in radians.
    pub angles: Vec<f64>,
    /// `sin θ₁`, computed directly from the sines so it is accurate near 0.
    pub sin_largest: f64,
}

/// Angles via `atan2(sin, cos)`: sines are the singular values of
/// `U₂ − U₁U₁ᵀU₂` (descending) and cosines those of `U₁ᵀU₂` (ascending).
pub fn principal_angles(u1: &SubspaceBasis, u2: &SubspaceBasis) -> Result<PrincipalAngles> {
    if u1.ambient_dim() != u2.ambient_dim() || u1.dim() != u2.dim() {
        return Err(RsrError::DimensionError(format!(
            "bases are {}x{} and {}x{}",
            u1.ambient_dim(),
            u1.dim(),
            u2.ambient_dim(),
            u2.dim()
        )));
    }
    let c = u1.columns().transpose() * u2.columns();
    let resid = u2.columns() - u1.columns() * &c;
    let mut cos: Vec<f64> = c.singular_values().iter().map(|v| v.min(1.0)).collect();
    let mut sin: Vec<f64> = resid.singular_values().iter().map(|v| v.min(1.0)).collect();
    cos.sort_by(|a, b| a.total_cmp(b));
    sin.sort_by(|a, b| b.total_cmp(a));
    let angles: Vec<f64> = sin.iter().zip(&cos).map(|(s, c)| s.atan2(*c)).collect();
    Ok(PrincipalAngles { sin_largest: sin[0], angles })
}

/// `sin θ₁` between two subspaces.
pub fn sin_largest_angle(u1: &SubspaceBasis, u2: &SubspaceBasis) -> Result<f64> {
    Ok(principal_angles(u1, u2)?.sin_largest)
}

/// Matrix geometric mean `A#B = A^{1/2}(A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`.
pub fn geometric_mean(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    if a.dim() != b.dim() {
        return Err(RsrError::DimensionError("geometric mean needs equal sizes".into()));
    }
    a.check_pd()?;
    b.check_pd()?;
    let ah = sqrtm(a)?;
    let aih = inv_sqrtm(a)?;
    let inner = b.congruence(aih.matrix());
    let ih = sqrtm(&inner)?;
    Ok(ih.congruence(ah.matrix()))
}
