//! Signed magnetic Laplacians and the propagation operator of the spectral
//! convolution layer.
//!
//! Every operator here is stored as a [`HermitianMatrix`]: a CSR matrix whose
//! strictly-upper entries are computed once and mirrored as conjugates, so
//! `entry(u, v) == conj(entry(v, u))` holds bit for bit.
//!
//! Sign and direction live entirely in the phase matrix. The symmetrised
//! adjacency is built from *unsigned* connectivity, so
//! `A_s(u, v) = (A_uv + A_vu) / 2 ∈ {0, ½, 1}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{Sign, SignedDiGraph};

/// Default denominator guard of the phase matrix.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Largest dimension accepted by [`dense_eigendecomposition`] by default.
pub const DEFAULT_DENSE_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpec {
    pub q: f64,
    pub epsilon: f64,
}

impl PhaseSpec {
    pub fn new(q: f64) -> Self {
        Self {
            q,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5 * PI).contains(&self.q) {
            return Err(Error::Config(format!("q = {} outside [0, π/2]", self.q)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Complex node features stored as separate real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFeatures {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

impl ComplexFeatures {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            re: Array2::zeros((rows, cols)),
            im: Array2::zeros((rows, cols)),
        }
    }

    pub fn from_real(re: Array2<f64>) -> Self {
        let im = Array2::zeros(re.raw_dim());
        Self { re, im }
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.re[[row, col]], self.im[[row, col]])
    }
}

/// Sparse conjugate-symmetric complex matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Assembles a matrix from real diagonal values and strictly-upper
    /// entries `(u, v, value)` with `u < v`; the lower triangle is the
    /// conjugate mirror. Zero diagonal values are not stored.
    pub fn from_upper(n: usize, diagonal: &[f64], upper: &[(usize, usize, Complex64)]) -> Self {
        assert_eq!(diagonal.len(), n, "diagonal length");
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for (i, &d) in diagonal.iter().enumerate() {
            if d != 0.0 {
                rows[i].push((i, Complex64::new(d, 0.0)));
            }
        }
        for &(u, v, value) in upper {
            assert!(u < v && v < n, "upper entry ({u}, {v}) out of place");
            rows[u].push((v, value));
            rows[v].push((u, value.conj()));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, &vec![1.0; n], &[])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    /// Exact conjugate symmetry and a real diagonal.
    pub fn is_hermitian(&self) -> bool {
        self.iter().all(|(r, c, v)| {
            let mirror = self.entry(c, r);
            if r == c {
                v.im == 0.0
            } else {
                v.re == mirror.re && v.im == -mirror.im
            }
        })
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(Error::Shape(format!(
                "operator is {0}x{0}, vector has length {1}",
                self.n,
                x.len()
            )));
        }
        Ok((0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.values[k] * x[self.cols[k]])
                    .sum()
            })
            .collect())
    }

    /// Sparse times dense complex product `M · X`, accumulated row by row in
    /// column order.
    pub fn spmm(&self, x: &ComplexFeatures) -> Result<ComplexFeatures> {
        if x.nrows() != self.n || x.im.dim() != x.re.dim() {
            return Err(Error::Shape(format!(
                "operator is {0}x{0}, features are {1:?}/{2:?}",
                self.n,
                x.re.dim(),
                x.im.dim()
            )));
        }
        let f = x.ncols();
        let mut out = ComplexFeatures::zeros(self.n, f);
        let xr = x.re.as_standard_layout();
        let xi = x.im.as_standard_layout();
        let xr = xr.as_slice().expect("standard layout");
        let xi = xi.as_slice().expect("standard layout");
        let or = out.re.as_slice_mut().expect("fresh array");
        let oi = out.im.as_slice_mut().expect("fresh array");
        for r in 0..self.n {
            let (out_r, out_i) = (&mut or[r * f..(r + 1) * f], &mut oi[r * f..(r + 1) * f]);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.values[k];
                let c = self.cols[k];
                let (in_r, in_i) = (&xr[c * f..(c + 1) * f], &xi[c * f..(c + 1) * f]);
                for j in 0..f {
                    out_r[j] += v.re * in_r[j] - v.im * in_i[j];
                    out_i[j] += v.re * in_i[j] + v.im * in_r[j];
                }
            }
        }
        Ok(out)
    }

    /// Writes `row col real imag` lines for every stored entry.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (r, c, v) in self.iter() {
            writeln!(out, "{r} {c} {:e} {:e}", v.re, v.im).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Symmetrised unsigned adjacency, stored by unordered pair `(u < v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricAdjacency {
    n: usize,
    upper: BTreeMap<(usize, usize), f64>,
}

impl SymmetricAdjacency {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let key = (u.min(v), u.max(v));
        self.upper.get(&key).copied().unwrap_or(0.0)
    }

    /// Connected pairs `(u, v, A_s(u, v))` with `u < v`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.upper.iter().map(|(&(u, v), &w)| (u, v, w))
    }
}

pub fn symmetrize_adjacency(graph: &SignedDiGraph) -> SymmetricAdjacency {
    let mut upper = BTreeMap::new();
    for e in graph.edges() {
        let key = (e.src.min(e.dst), e.src.max(e.dst));
        *upper.entry(key).or_insert(0.0) += 0.5;
    }
    SymmetricAdjacency {
        n: graph.num_nodes(),
        upper,
    }
}

/// Diagonal of the symmetric degree matrix, `D_s(i,i) = Σ_j A_s(i,j)`.
pub fn degree_matrix(adjacency: &SymmetricAdjacency) -> Vec<f64> {
    let mut degree = vec![0.0; adjacency.dim()];
    for (u, v, w) in adjacency.pairs() {
        degree[u] += w;
        degree[v] += w;
    }
    degree
}

/// Phase matrix entry `P^q(u, v)`.
///
/// The forward phase uses `(u, v)` edge indicators and the backward phase
/// uses `(v, u)` ones: `Θ = q·E⁺_uv + (π+q)·E⁻_uv`,
/// `Θ̄ = −q·E⁺_vu + (π−q)·E⁻_vu`. The rotation by π is applied as an exact
/// negation, so `q = 0` gives real entries and opposite-sign reciprocal
/// pairs cancel to exactly zero.
pub fn phase_entry(u: usize, v: usize, graph: &SignedDiGraph, spec: &PhaseSpec) -> Complex64 {
    let rotation = Complex64::from_polar(1.0, spec.q);
    let signed = |sign: Option<Sign>, z: Complex64| match sign {
        Some(Sign::Positive) => z,
        Some(Sign::Negative) => -z,
        None => Complex64::new(0.0, 0.0),
    };
    let (forward, backward) = (graph.sign(u, v), graph.sign(v, u));
    if forward.is_none() && backward.is_none() {
        return Complex64::new(0.0, 0.0);
    }
    let numerator = signed(forward, rotation) + signed(backward, rotation.conj());
    numerator / (numerator.norm() + spec.epsilon)
}

/// `(u, v, A_s(u,v), P^q(u,v))` for every connected pair with `u < v`.
fn phased_pairs(
    graph: &SignedDiGraph,
    spec: &PhaseSpec,
) -> (SymmetricAdjacency, Vec<(usize, usize, f64, Complex64)>) {
    let adjacency = symmetrize_adjacency(graph);
    let pairs = adjacency
        .pairs()
        .map(|(u, v, w)| (u, v, w, phase_entry(u, v, graph, spec)))
        .collect();
    (adjacency, pairs)
}

/// `H^q = A_s ⊙ P^q`.
pub fn hermitian_adjacency(graph: &SignedDiGraph, spec: &PhaseSpec) -> HermitianMatrix {
    let n = graph.num_nodes();
    let (_, pairs) = phased_pairs(graph, spec);
    let upper: Vec<_> = pairs.into_iter().map(|(u, v, w, p)| (u, v, p * w)).collect();
    HermitianMatrix::from_upper(n, &vec![0.0; n], &upper)
}

/// `L^q_U = D_s − H^q`.
pub fn laplacian_unnormalized(graph: &SignedDiGraph, spec: &PhaseSpec) -> HermitianMatrix {
    let (adjacency, pairs) = phased_pairs(graph, spec);
    let degree = degree_matrix(&adjacency);
    let upper: Vec<_> = pairs.into_iter().map(|(u, v, w, p)| (u, v, -(p * w))).collect();
    HermitianMatrix::from_upper(graph.num_nodes(), &degree, &upper)
}

fn inv_sqrt_or_zero(d: f64) -> f64 {
    if d > 0.0 {
        1.0 / d.sqrt()
    } else {
        0.0
    }
}

/// `L^q_N = I − (D_s^{-½} A_s D_s^{-½}) ⊙ P^q`, with `D_s^{-½}` taken as 0 on
/// isolated nodes so their rows reduce to identity rows.
pub fn laplacian_normalized(graph: &SignedDiGraph, spec: &PhaseSpec) -> HermitianMatrix {
    let (adjacency, pairs) = phased_pairs(graph, spec);
    let scale: Vec<f64> = degree_matrix(&adjacency).into_iter().map(inv_sqrt_or_zero).collect();
    let upper: Vec<_> = pairs
        .into_iter()
        .map(|(u, v, w, p)| (u, v, -(p * (w * scale[u] * scale[v]))))
        .collect();
    HermitianMatrix::from_upper(graph.num_nodes(), &vec![1.0; graph.num_nodes()], &upper)
}

/// `D̃_s^{-½} Ã_s D̃_s^{-½} ⊙ P^q` with `Ã_s = A_s + I`. The added self-loops
/// carry no sign or direction, so their phase is 1.
pub fn renormalized_propagation(graph: &SignedDiGraph, spec: &PhaseSpec) -> HermitianMatrix {
    let (adjacency, pairs) = phased_pairs(graph, spec);
    let scale: Vec<f64> = degree_matrix(&adjacency)
        .into_iter()
        .map(|d| 1.0 / (d + 1.0).sqrt())
        .collect();
    let diagonal: Vec<f64> = scale.iter().map(|s| s * s).collect();
    let upper: Vec<_> = pairs
        .into_iter()
        .map(|(u, v, w, p)| (u, v, p * (w * scale[u] * scale[v])))
        .collect();
    HermitianMatrix::from_upper(graph.num_nodes(), &diagonal, &upper)
}

/// Real eigenvalues in ascending order with matching unitary eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    /// `U Λ U†`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            for r in 0..n {
                scaled[(r, k)] *= lambda;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }
}

pub fn dense_eigendecomposition(matrix: &HermitianMatrix) -> Result<Spectrum> {
    dense_eigendecomposition_with_cap(matrix, DEFAULT_DENSE_CAP)
}

pub fn dense_eigendecomposition_with_cap(matrix: &HermitianMatrix, cap: usize) -> Result<Spectrum> {
    let n = matrix.dim();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(matrix.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// `Σ_k θ'_k T_k(L̃) x` with `L̃ = L_N − I` (largest eigenvalue taken as 2)
/// and `T_k = 2 L̃ T_{k−1} − T_{k−2}`.
pub fn chebyshev_apply(
    laplacian: &HermitianMatrix,
    x: &[Complex64],
    coeffs: &[f64],
) -> Result<Vec<Complex64>> {
    if coeffs.is_empty() {
        return Err(Error::Empty("Chebyshev coefficients"));
    }
    let scaled = |v: &[Complex64]| -> Result<Vec<Complex64>> {
        let lv = laplacian.apply(v)?;
        Ok(lv.iter().zip(v).map(|(a, b)| a - b).collect())
    };
    let mut prev: Vec<Complex64> = x.to_vec();
    let mut out: Vec<Complex64> = prev.iter().map(|v| v * coeffs[0]).collect();
    if coeffs.len() == 1 {
        return Ok(out);
    }
    let mut cur = scaled(x)?;
    for (o, c) in out.iter_mut().zip(&cur) {
        *o += c * coeffs[1];
    }
    for &theta in &coeffs[2..] {
        let next: Vec<Complex64> = scaled(&cur)?
            .iter()
            .zip(&prev)
            .map(|(l, p)| l * 2.0 - p)
            .collect();
        for (o, c) in out.iter_mut().zip(&next) {
            *o += c * theta;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_from_edges, EdgeRecord};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn edge(u: usize, v: usize, s: i64) -> EdgeRecord {
        EdgeRecord::new(u, v, Sign::from_i64(s).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn symmetrized_adjacency_values() {
        let g = graph_from_edges(3, &[edge(0, 1, 1)]).unwrap();
        let a = symmetrize_adjacency(&g);
        assert_eq!((a.get(0, 1), a.get(1, 0)), (0.5, 0.5));
        let g = graph_from_edges(3, &[edge(0, 1, 1), edge(1, 0, -1)]).unwrap();
        assert_eq!(symmetrize_adjacency(&g).get(0, 1), 1.0);
        assert_eq!(symmetrize_adjacency(&SignedDiGraph::empty(3)).pairs().count(), 0);
    }

    #[test]
    fn degrees() {
        let g = graph_from_edges(3, &[edge(0, 1, 1)]).unwrap();
        assert_eq!(degree_matrix(&symmetrize_adjacency(&g)), vec![0.5, 0.5, 0.0]);
        let mut star = Vec::new();
        for leaf in 1..=4 {
            star.push(edge(0, leaf, 1));
            star.push(edge(leaf, 0, -1));
        }
        let g = graph_from_edges(5, &star).unwrap();
        assert_eq!(degree_matrix(&symmetrize_adjacency(&g))[0], 4.0);
    }

    #[test]
    fn phase_entries_match_hand_values() {
        let q = 0.2 * PI;
        let spec = PhaseSpec { q, epsilon: 1e-15 };
        let g = graph_from_edges(2, &[edge(0, 1, 1)]).unwrap();
        let p = phase_entry(0, 1, &g, &spec);
        assert!(close(p, c(0.809_016_994_374_947_5, 0.587_785_252_292_473_1), 1e-12));
        assert!(close(phase_entry(1, 0, &g, &spec), p.conj(), 1e-15));

        let g = graph_from_edges(2, &[edge(0, 1, 1), edge(1, 0, 1)]).unwrap();
        assert!(close(phase_entry(0, 1, &g, &spec), c(1.0, 0.0), 1e-12));

        let g = graph_from_edges(2, &[edge(0, 1, 1), edge(1, 0, -1)]).unwrap();
        assert!(close(phase_entry(0, 1, &g, &spec), c(0.0, 1.0), 1e-12));
        assert!(close(phase_entry(1, 0, &g, &spec), c(0.0, -1.0), 1e-12));

        assert_eq!(phase_entry(0, 1, &SignedDiGraph::empty(2), &spec), c(0.0, 0.0));
    }

    #[test]
    fn hermitian_adjacency_hand_values() {
        let spec = PhaseSpec { q: 0.2 * PI, epsilon: 1e-15 };
        let g = graph_from_edges(2, &[edge(0, 1, 1)]).unwrap();
        let h = hermitian_adjacency(&g, &spec);
        assert!(close(h.entry(0, 1), c(0.404_508_497_187_473_7, 0.293_892_626_146_236_5), 1e-12));
        assert!(h.is_hermitian());
        let g = graph_from_edges(2, &[edge(0, 1, -1)]).unwrap();
        let h = hermitian_adjacency(&g, &spec);
        assert!(close(h.entry(0, 1), c(-0.404_508_497_187_473_7, -0.293_892_626_146_236_5), 1e-12));
    }

    #[test]
    fn single_edge_laplacians() {
        let g = graph_from_edges(2, &[edge(0, 1, 1)]).unwrap();
        let spec = PhaseSpec::new(0.0);
        let lu = laplacian_unnormalized(&g, &spec);
        assert!(close(lu.entry(0, 0), c(0.5, 0.0), 1e-15));
        assert!(close(lu.entry(0, 1), c(-0.5, 0.0), 1e-12));
        let ev = dense_eigendecomposition(&lu).unwrap().eigenvalues;
        assert!((ev[0] - 0.0).abs() < 1e-10 && (ev[1] - 1.0).abs() < 1e-10, "{ev:?}");

        let ev = dense_eigendecomposition(&laplacian_normalized(&g, &spec)).unwrap().eigenvalues;
        assert!((ev[0] - 0.0).abs() < 1e-10 && (ev[1] - 2.0).abs() < 1e-10, "{ev:?}");
        assert_eq!(laplacian_unnormalized(&SignedDiGraph::empty(3), &spec).nnz(), 0);
    }

    #[test]
    fn isolated_node_is_identity_row() {
        let g = graph_from_edges(3, &[edge(0, 1, -1)]).unwrap();
        let l = laplacian_normalized(&g, &PhaseSpec::new(0.3 * PI));
        assert_eq!(l.entry(2, 2), c(1.0, 0.0));
        assert_eq!(l.entry(2, 0), c(0.0, 0.0));
        assert_eq!(l.entry(2, 1), c(0.0, 0.0));
    }

    #[test]
    fn propagation_hand_values() {
        assert_eq!(
            renormalized_propagation(&SignedDiGraph::empty(4), &PhaseSpec::new(0.1 * PI)),
            HermitianMatrix::identity(4)
        );
        let g = graph_from_edges(2, &[edge(0, 1, 1)]).unwrap();
        let y = renormalized_propagation(&g, &PhaseSpec::new(0.0));
        assert!(close(y.entry(0, 0), c(2.0 / 3.0, 0.0), 1e-15));
        assert!(close(y.entry(1, 1), c(2.0 / 3.0, 0.0), 1e-15));
        assert!(close(y.entry(0, 1), c(1.0 / 3.0, 0.0), 1e-12));
        assert!(close(y.entry(1, 0), c(1.0 / 3.0, 0.0), 1e-12));
    }

    #[test]
    fn spmm_identity_and_zero() {
        let x = ComplexFeatures {
            re: Array2::from_shape_fn((3, 2), |(i, j)| (i * 2 + j) as f64),
            im: Array2::from_shape_fn((3, 2), |(i, j)| (i + j) as f64 * -0.5),
        };
        assert_eq!(HermitianMatrix::identity(3).spmm(&x).unwrap(), x);
        let zero = HermitianMatrix::from_upper(3, &[0.0; 3], &[]);
        assert_eq!(zero.spmm(&x).unwrap(), ComplexFeatures::zeros(3, 2));
        let bad = ComplexFeatures::zeros(2, 2);
        assert!(matches!(zero.spmm(&bad), Err(Error::Shape(_))));
    }

    #[test]
    fn eigen_diagonal_and_cap() {
        let m = HermitianMatrix::from_upper(3, &[3.0, -1.0, 2.0], &[]);
        let s = dense_eigendecomposition(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 2.0, 3.0]);
        assert!(matches!(
            dense_eigendecomposition_with_cap(&m, 2),
            Err(Error::DenseCapExceeded { n: 3, cap: 2 })
        ));
    }

    #[test]
    fn chebyshev_constant_term() {
        let g = graph_from_edges(3, &[edge(0, 1, 1), edge(2, 1, -1)]).unwrap();
        let l = laplacian_normalized(&g, &PhaseSpec::new(0.2 * PI));
        let x = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        assert_eq!(chebyshev_apply(&l, &x, &[1.0]).unwrap(), x);
        assert!(chebyshev_apply(&l, &x, &[]).is_err());
    }

    #[test]
    fn operator_dump_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("op.txt");
        let g = graph_from_edges(2, &[edge(0, 1, 1)]).unwrap();
        renormalized_propagation(&g, &PhaseSpec::new(0.0)).write_text(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let fields: Vec<f64> = lines[1].split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(fields[0..2], [0.0, 1.0]);
        assert!((fields[2] - 1.0 / 3.0).abs() < 1e-12);
    }
}
