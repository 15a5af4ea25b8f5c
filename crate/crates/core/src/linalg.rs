//! Dense complex matrices and the general (non-Hermitian) eigensolver.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Backward-error bound enforced on every returned eigenpair, relative to the
/// Frobenius norm of the matrix.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Relative separation below which eigenvalues are treated as one degenerate
/// cluster when forming projections.
pub const CLUSTER_TOLERANCE: f64 = 1e-7;

/// Square dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn trace_mean(&self) -> C64 {
        if self.n == 0 {
            return C64::new(0.0, 0.0);
        }
        (0..self.n).map(|i| self.get(i, i)).sum::<C64>() / self.n as f64
    }

    /// Copy into faer storage with `shift` removed from the diagonal.
    fn to_faer_shifted(&self, shift: C64) -> Mat<C64> {
        Mat::from_fn(self.n, self.n, |i, j| {
            let v = self.get(i, j);
            if i == j {
                v - shift
            } else {
                v
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub energy: C64,
    /// Normalized so that the sum of squared moduli is one.
    pub vector: Vec<C64>,
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_input(h: &ComplexMatrix) -> Result<()> {
    if h.dim() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !h.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// All eigenpairs of a general complex matrix, sorted by real part.
///
/// The mean diagonal is removed before the decomposition and restored after,
/// which keeps large constant energy offsets from eating into the precision of
/// small widths.
pub fn eigensolve(h: &ComplexMatrix) -> Result<Vec<Eigenpair>> {
    check_input(h)?;
    let n = h.dim();
    let shift = h.trace_mean();
    let evd = h
        .to_faer_shifted(shift)
        .eigen()
        .map_err(|e| Error::Solver(format!("eigendecomposition of {n}x{n} matrix: {e:?}")))?;
    let values = evd.S().column_vector();
    let vectors = evd.U();
    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let energy = values[k] + shift;
        let mut vector: Vec<C64> = (0..n).map(|i| vectors[(i, k)]).collect();
        let len = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(len > 0.0) {
            return Err(Error::Solver(format!("eigenvector {k} has zero length")));
        }
        vector.iter_mut().for_each(|z| *z /= len);
        let hv = h.matvec(&vector);
        let residual = hv
            .iter()
            .zip(&vector)
            .map(|(a, b)| (a - energy * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(residual <= RESIDUAL_TOLERANCE * norm) {
            return Err(Error::Solver(format!(
                "residual {residual:.3e} for eigenvalue {energy} exceeds {:.1e} x norm {norm:.3e}",
                RESIDUAL_TOLERANCE
            )));
        }
        pairs.push(Eigenpair { energy, vector });
    }
    pairs.sort_by(|a, b| sort_key(&a.energy, &b.energy));
    Ok(pairs)
}

/// Eigenvalues only, sorted by real part.
pub fn eigenvalues(h: &ComplexMatrix) -> Result<Vec<C64>> {
    check_input(h)?;
    let shift = h.trace_mean();
    let mut values = h
        .to_faer_shifted(shift)
        .eigenvalues()
        .map_err(|e| Error::Solver(format!("eigenvalues of {0}x{0} matrix: {e:?}", h.dim())))?;
    values.iter_mut().for_each(|z| *z += shift);
    values.sort_by(sort_key);
    Ok(values)
}

/// Groups eigenpair indices whose eigenvalues coincide within
/// `CLUSTER_TOLERANCE` times the spread of the spectrum (single linkage).
pub fn degenerate_clusters(pairs: &[Eigenpair]) -> Vec<Vec<usize>> {
    let n = pairs.len();
    if n == 0 {
        return Vec::new();
    }
    let center = pairs.iter().map(|p| p.energy).sum::<C64>() / n as f64;
    let spread = pairs
        .iter()
        .map(|p| (p.energy - center).norm())
        .fold(0.0_f64, f64::max);
    let tol = CLUSTER_TOLERANCE * spread.max(f64::MIN_POSITIVE);

    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (pairs[i].energy - pairs[j].energy).norm() <= tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

/// Squared modulus of component `k` of every eigenvector, after each
/// degenerate cluster has been replaced by an orthonormal basis of its span.
///
/// Inside a degenerate eigenspace the individual vectors are arbitrary, so the
/// per-vector weights are only meaningful for an orthonormal choice. The total
/// weight of a cluster then equals the squared length of the orthogonal
/// projection of the unit vector `e_k` onto that eigenspace.
pub fn component_weights(pairs: &[Eigenpair], k: usize) -> Result<Vec<f64>> {
    let mut weights = vec![0.0; pairs.len()];
    for cluster in degenerate_clusters(pairs) {
        if cluster.len() == 1 {
            let i = cluster[0];
            weights[i] = pairs[i].vector[k].norm_sqr();
            continue;
        }
        let basis = orthonormalize(cluster.iter().map(|&i| pairs[i].vector.as_slice()))?;
        for (&i, q) in cluster.iter().zip(&basis) {
            weights[i] = q[k].norm_sqr();
        }
    }
    Ok(weights)
}

/// Component `k` squared of every eigenvector after c-normalization
/// (Σ_j C_j² = 1, no conjugation). Degenerate clusters are first made
/// c-orthonormal so the weights do not depend on the solver's basis choice.
pub fn c_component_weights(pairs: &[Eigenpair], k: usize) -> Result<Vec<C64>> {
    let mut weights = vec![C64::new(0.0, 0.0); pairs.len()];
    for cluster in degenerate_clusters(pairs) {
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for &i in &cluster {
            let mut w = pairs[i].vector.clone();
            for q in &basis {
                let c: C64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            let self_product: C64 = w.iter().map(|z| z * z).sum();
            if self_product.norm() < 1e-12 {
                return Err(Error::DegenerateNormalization(format!(
                    "eigenvector for {} is self-orthogonal",
                    pairs[i].energy
                )));
            }
            let scale = self_product.sqrt().inv();
            w.iter_mut().for_each(|z| *z *= scale);
            weights[i] = w[k] * w[k];
            basis.push(w);
        }
    }
    Ok(weights)
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
fn orthonormalize<'a>(vectors: impl Iterator<Item = &'a [C64]>) -> Result<Vec<Vec<C64>>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let len = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if len < 1e-8 {
            return Err(Error::Solver(
                "eigenvectors of a degenerate cluster are linearly dependent (defective matrix)"
                    .into(),
            ));
        }
        w.iter_mut().for_each(|z| *z /= len);
        basis.push(w);
    }
    Ok(basis)
}
