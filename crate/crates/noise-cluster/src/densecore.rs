//! Dense complex linear algebra on small square matrices.
//!
//! Everything here works on [`CMatrix`], a row-major square matrix. Qubit 1
//! is always the most significant factor of a Kronecker product.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.re.len() != m.im.len() {
            return Err(Error::InvalidInput("re/im lengths differ".into()));
        }
        let data = m.re.iter().zip(&m.im).map(|(&r, &i)| C64::new(r, i)).collect();
        CMatrix::from_vec(m.dim, data)
    }
}

impl From<CMatrix> for MatrixJson {
    fn from(m: CMatrix) -> Self {
        MatrixJson {
            dim: m.dim,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimMismatch { expected: dim * dim, got: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(CMatrix { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        CMatrix { dim, data }
    }

    /// Build from real rows, handy for literals.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// |ψ⟩⟨φ|
    pub fn outer(psi: &[C64], phi: &[C64]) -> Self {
        assert_eq!(psi.len(), phi.len());
        Self::from_fn(psi.len(), |i, j| psi[i] * phi[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let orow = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        CMatrix { dim: n, data: out }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix: vᵀ·A.
    pub fn vecmat(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        let mut out = vec![ZERO; n];
        for (k, &vk) in v.iter().enumerate() {
            if vk == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(k)) {
                *o += vk * a;
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    pub fn unitary_residual(&self) -> f64 {
        (&self.adjoint().matmul(self) - &CMatrix::identity(self.dim)).max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual() <= tol
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> CMatrix {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Solve A·X = B by LU with partial pivoting.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        let n = self.dim;
        if rhs.dim != n {
            return Err(Error::DimMismatch { expected: n, got: rhs.dim });
        }
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (piv, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= scale * 1e-300 {
                return Err(Error::Singular);
            }
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                    b.swap(piv * n + k, col * n + k);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == ZERO {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
                for k in 0..n {
                    let v = b[col * n + k];
                    b[r * n + k] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for k in 0..n {
                let mut s = b[col * n + k];
                for j in col + 1..n {
                    s -= a[col * n + j] * b[j * n + k];
                }
                b[col * n + k] = s / d;
            }
        }
        Ok(CMatrix { dim: n, data: b })
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve(&CMatrix::identity(self.dim))
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> CMatrix {
        let n = m.nrows();
        CMatrix::from_fn(n, |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// Eigenvalues plus eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: CMatrix,
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = vec![ZERO; n * n];
    for i in 0..na {
        for j in 0..na {
            let aij = a.data[i * na + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                let row = (i * nb + k) * n + j * nb;
                for l in 0..nb {
                    out[row + l] = aij * b.data[k * nb + l];
                }
            }
        }
    }
    CMatrix { dim: n, data: out }
}

/// Kronecker product of a list, first entry most significant.
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    let mut it = factors.iter();
    let first = it.next().expect("kron_all needs at least one factor").clone();
    it.fold(first, |acc, f| kron(&acc, f))
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    let g = a.adjoint().matmul(a);
    eigvalsh(&g).into_iter().fold(0.0, f64::max).max(0.0).sqrt()
}

fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite matrix entry".into()))
    }
}

const PADE_B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_LOW: [f64; 4] = [1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1, 2.097847961257068e0];
const THETA_13: f64 = 5.371920351148152;

fn axpy_identity(m: &mut CMatrix, s: f64) {
    for i in 0..m.dim {
        m.data[i * m.dim + i] += s;
    }
}

fn lincomb(terms: &[(f64, &CMatrix)], dim: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim);
    for (c, m) in terms {
        for (o, v) in out.data.iter_mut().zip(&m.data) {
            *o += v * c;
        }
    }
    out
}

fn pade_low(a: &CMatrix, b: &[f64]) -> Result<CMatrix> {
    let n = a.dim;
    let a2 = a.matmul(a);
    let mut powers = vec![CMatrix::identity(n), a2.clone()];
    while powers.len() < b.len() / 2 {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }
    let mut u = CMatrix::zeros(n);
    let mut v = CMatrix::zeros(n);
    for (k, p) in powers.iter().enumerate() {
        u += &p.scale_re(b[2 * k + 1]);
        v += &p.scale_re(b[2 * k]);
    }
    let u = a.matmul(&u);
    (&v - &u).solve(&(&v + &u))
}

/// Matrix exponential by scaling and squaring with diagonal Padé approximants.
pub fn mat_exp(a: &CMatrix) -> Result<CMatrix> {
    ensure_finite(a)?;
    let n = a.dim;
    let norm = a.norm_1();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    for (theta, b) in THETA_LOW.iter().zip([&PADE_B3[..], &PADE_B5[..], &PADE_B7[..], &PADE_B9[..]]) {
        if norm <= *theta {
            return pade_low(a, b);
        }
    }
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
    let a = a.scale_re(0.5f64.powi(s));
    let b = &PADE_B13;
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let mut inner_u = a6.matmul(&lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n));
    inner_u += &lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], n);
    axpy_identity(&mut inner_u, b[1]);
    let u = a.matmul(&inner_u);
    let mut v = a6.matmul(&lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n));
    v += &lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], n);
    axpy_identity(&mut v, b[0]);
    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// Complex Schur form A = Q·T·Q† with T upper triangular.
pub fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    ensure_finite(a)?;
    let s = nalgebra::linalg::Schur::try_new(a.to_nalgebra(), 1e-15, 100_000)
        .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
    let (q, t) = s.unpack();
    let mut t = CMatrix::from_nalgebra(&t);
    let n = t.dim;
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Ok((CMatrix::from_nalgebra(&q), t))
}

fn sqrt_upper(t: &CMatrix) -> CMatrix {
    let n = t.dim;
    let mut r = CMatrix::zeros(n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for j in 0..n {
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Solve U·X = B for upper-triangular U.
fn solve_upper(u: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = u.dim;
    let mut x = b.clone();
    for col in 0..n {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= u[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / u[(i, i)];
        }
    }
    x
}

const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];
const LOG_THETA: f64 = 0.25;

/// log(I + X) for upper-triangular X with small norm (Gauss-Legendre Padé form).
fn log1p_upper(x: &CMatrix) -> CMatrix {
    let n = x.dim;
    let mut acc = CMatrix::zeros(n);
    for (node, w) in GL8 {
        let t = 0.5 * (node + 1.0);
        let mut m = x.scale_re(t);
        axpy_identity(&mut m, 1.0);
        acc += &solve_upper(&m, x).scale_re(0.5 * w);
    }
    acc
}

fn check_branch(lambda: C64) -> Result<()> {
    if lambda.norm() <= 1e-12 || (lambda.re <= 0.0 && lambda.im.abs() <= 1e-12) {
        return Err(Error::BranchCut { eigenvalue: lambda });
    }
    Ok(())
}

fn rel_frob(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius_norm(&(a - b)) / frobenius_norm(b).max(f64::MIN_POSITIVE)
}

/// Principal matrix logarithm via inverse scaling and squaring on the Schur form.
///
/// Falls back to an eigendecomposition when the Schur route fails its
/// round-trip check and the eigenvector matrix has condition number below 1e8.
pub fn mat_log_principal(a: &CMatrix) -> Result<CMatrix> {
    ensure_finite(a)?;
    let n = a.dim;
    let (q, t) = schur(a)?;
    for i in 0..n {
        check_branch(t[(i, i)])?;
    }
    let mut r = t.clone();
    let mut s = 0;
    let id = CMatrix::identity(n);
    while (&r - &id).norm_1() > LOG_THETA && s < 60 {
        r = sqrt_upper(&r);
        s += 1;
    }
    let mut l = log1p_upper(&(&r - &id)).scale_re(2f64.powi(s));
    for i in 0..n {
        l[(i, i)] = t[(i, i)].ln();
    }
    let out = q.matmul(&l).matmul(&q.adjoint());
    if rel_frob(&mat_exp(&out)?, a) <= 1e-9 {
        return Ok(out);
    }
    let spec = spectrum_from_schur(&q, &t);
    let v = &spec.eigenvectors;
    let vinv = v.inverse()?;
    let cond = v.norm_1() * vinv.norm_1();
    if cond < 1e8 {
        let logs: Vec<C64> = spec.eigenvalues.iter().map(|z| z.ln()).collect();
        let alt = v.matmul(&CMatrix::diag(&logs)).matmul(&vinv);
        if rel_frob(&mat_exp(&alt)?, a) < rel_frob(&mat_exp(&out)?, a) {
            return Ok(alt);
        }
    }
    Ok(out)
}

fn spectrum_from_schur(q: &CMatrix, t: &CMatrix) -> Spectrum {
    let n = t.dim;
    let eigenvalues: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = t.max_abs().max(f64::MIN_POSITIVE);
    let mut vt = CMatrix::zeros(n);
    for k in 0..n {
        let lam = eigenvalues[k];
        vt[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * vt[(j, k)];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < 1e-14 * scale {
                d = C64::new(1e-14 * scale, 0.0);
            }
            vt[(i, k)] = -s / d;
        }
    }
    let mut v = q.matmul(&vt);
    for k in 0..n {
        let norm = (0..n).map(|i| v[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            v[(i, k)] /= norm;
        }
    }
    Spectrum { eigenvalues, eigenvectors: v }
}

/// General eigendecomposition (eigenvectors normalized to unit length).
pub fn eig(a: &CMatrix) -> Result<Spectrum> {
    let (q, t) = schur(a)?;
    Ok(spectrum_from_schur(&q, &t))
}

/// Eigenvalues of a general matrix.
pub fn eigvals(a: &CMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(a)?;
    Ok((0..t.dim).map(|i| t[(i, i)]).collect())
}

/// Hermitian eigendecomposition, eigenvalues ascending, eigenvectors as columns.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let e = SymmetricEigen::new(a.hermitian_part().to_nalgebra());
    let mut idx: Vec<usize> = (0..a.dim).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(a.dim, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = a.hermitian_part().to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_CLAMP: f64 = -1e-10;

/// Square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in [−1e-10, 0) are clamped to zero; anything lower is an error.
pub fn mat_sqrt_psd(a: &CMatrix) -> Result<CMatrix> {
    ensure_finite(a)?;
    let res = a.hermitian_residual();
    if res > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { residual: res });
    }
    let (vals, vecs) = eigh(a);
    if let Some(&lo) = vals.first() {
        if lo < PSD_CLAMP {
            return Err(Error::NotPsd { eigenvalue: lo });
        }
    }
    let n = a.dim;
    let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = ZERO;
            for k in 0..n {
                s += vecs[(i, k)] * roots[k] * vecs[(j, k)].conj();
            }
            out[(i, j)] = s;
        }
    }
    Ok(out.hermitian_part())
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_vec(2, vec![ZERO, -I, I, ZERO]).unwrap()
}

/// σ_z = |0⟩⟨0| − |1⟩⟨1|
pub fn pauli_z() -> CMatrix {
    CMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// σ₊ = |1⟩⟨0|
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_real(&[&[0.0, 0.0], &[1.0, 0.0]])
}

/// σ₋ = |0⟩⟨1|
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
}

/// I, X, Y, Z by index.
pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => CMatrix::identity(2),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Embed a single-site operator on `site` (0-based, most significant first) of `n` sites.
pub fn embed_site(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    let d = op.dim;
    let factors: Vec<CMatrix> =
        (0..n).map(|q| if q == site { op.clone() } else { CMatrix::identity(d) }).collect();
    kron_all(&factors)
}
