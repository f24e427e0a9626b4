//! Order zero maps φ = hπ from a finite-dimensional algebra ⊕ M_{n_i} into M_N.
//!
//! A map is stored as multiplicities m_i together with commutant blocks H_i, and
//! acts by φ(a) = ⊕ H_i ⊗ a_i. Diagonal maps use exact rationals; general maps use
//! `f64` with an eigenvalue cutoff of 1e-10.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use thiserror::Error;

use crate::monoid_kernel::{ExtNat, Q};
use crate::multiplicity::{mf_leq, MultiplicityFunction, SpaceModel};

/// Eigenvalues at or below this count as zero in general mode.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Tolerance for positivity and norm checks in general mode.
pub const PSD_TOL: f64 = 1e-10;
/// Orthogonality threshold for ‖φ(a)φ(b)‖.
pub const ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OzError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not positive: {0}")]
    NotPositive(String),
    #[error("norm exceeds one: {0}")]
    NormExceedsOne(String),
    #[error("domain is not commutative")]
    NonCommutativeDomain,
    #[error("maps are defined on different spaces")]
    SpaceMismatch,
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("a is not dominated by b")]
    NotDominated,
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    InvalidEpsilon(Q),
    #[error("invalid document: {0}")]
    Schema(String),
}

pub fn qf(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// ⊕ M_{n_i}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinDimAlgebra {
    block_sizes: Vec<usize>,
}

impl FinDimAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<FinDimAlgebra, OzError> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(OzError::DimensionMismatch(format!("block sizes {block_sizes:?}")));
        }
        Ok(FinDimAlgebra { block_sizes })
    }

    /// ℂ^k.
    pub fn commutative(k: usize) -> FinDimAlgebra {
        FinDimAlgebra {
            block_sizes: vec![1; k.max(1)],
        }
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn is_commutative(&self) -> bool {
        self.block_sizes.iter().all(|&n| n == 1)
    }

    pub fn unit(&self) -> Vec<DMatrix<f64>> {
        self.block_sizes.iter().map(|&n| DMatrix::identity(n, n)).collect()
    }

    /// The matrix units of every block, tagged with their block index.
    pub fn matrix_units(&self) -> Vec<(usize, Vec<DMatrix<f64>>)> {
        let mut out = Vec::new();
        for (i, &n) in self.block_sizes.iter().enumerate() {
            for r in 0..n {
                for s in 0..n {
                    let mut a: Vec<DMatrix<f64>> =
                        self.block_sizes.iter().map(|&k| DMatrix::zeros(k, k)).collect();
                    a[i][(r, s)] = 1.0;
                    out.push((i, a));
                }
            }
        }
        out
    }

    fn check_element(&self, a: &[DMatrix<f64>]) -> Result<(), OzError> {
        if a.len() != self.block_sizes.len()
            || a.iter().zip(&self.block_sizes).any(|(x, &n)| x.shape() != (n, n))
        {
            return Err(OzError::ShapeMismatch("element does not match the domain".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Blocks {
    /// Diagonals of the H_i, exact.
    Diagonal(Vec<Vec<Q>>),
    /// Dense H_i in double precision.
    General(Vec<DMatrix<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderZeroMap {
    domain: FinDimAlgebra,
    target_dim: usize,
    mult: Vec<usize>,
    blocks: Blocks,
    /// First target row used by the image; rows before it are zero.
    offset: usize,
}

/// Anything that maps domain elements to matrices.
pub trait CpMap {
    fn domain(&self) -> &FinDimAlgebra;
    fn apply(&self, a: &[DMatrix<f64>]) -> DMatrix<f64>;
}

fn psd_check(h: &DMatrix<f64>, what: &str) -> Result<(), OzError> {
    if (h - h.transpose()).amax() > PSD_TOL {
        return Err(OzError::NotPositive(format!("{what} is not symmetric")));
    }
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    if eig.iter().any(|&l| l < -PSD_TOL) {
        return Err(OzError::NotPositive(format!("{what} has a negative eigenvalue")));
    }
    if eig.iter().any(|&l| l > 1.0 + PSD_TOL) {
        return Err(OzError::NormExceedsOne(what.to_string()));
    }
    Ok(())
}

fn rank_f64(h: &DMatrix<f64>) -> usize {
    if h.nrows() == 0 {
        return 0;
    }
    let s = 0.5 * (h + h.transpose());
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .filter(|&&l| l > RANK_CUTOFF)
        .count()
}

/// (M − ε)₊ through the spectral decomposition of a symmetric matrix.
pub fn eps_cut_matrix(m: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    spectral_map(m, |l| (l - eps).max(0.0))
}

pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    spectral_map(m, |l| l.max(0.0).sqrt())
}

fn spectral_map<F: Fn(f64) -> f64>(m: &DMatrix<f64>, f: F) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let e = SymmetricEigen::new(0.5 * (m + m.transpose()));
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Largest singular value; symmetric matrices use their spectrum, and power
/// iteration on MᵀM is the fallback when the SVD does not converge.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.is_square() && (m - m.transpose()).amax() <= 1e-14 * m.amax().max(1.0) {
        return SymmetricEigen::new(m.clone()).eigenvalues.amax();
    }
    if let Some(svd) = m.clone().try_svd(false, false, 1e-14, 1000) {
        return svd.singular_values.max();
    }
    let g = m.transpose() * m;
    let mut v = DVector::from_element(g.ncols(), 1.0 / (g.ncols() as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = &g * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / nw;
        if (next - lambda).abs() <= 1e-12 * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

impl OrderZeroMap {
    /// Validates the data of φ = ⊕ H_i ⊗ (·)_i into M_N.
    pub fn new(
        domain: FinDimAlgebra,
        mult: Vec<usize>,
        blocks: Blocks,
        target_dim: usize,
    ) -> Result<OrderZeroMap, OzError> {
        Self::with_offset(domain, mult, blocks, target_dim, 0)
    }

    pub fn with_offset(
        domain: FinDimAlgebra,
        mult: Vec<usize>,
        blocks: Blocks,
        target_dim: usize,
        offset: usize,
    ) -> Result<OrderZeroMap, OzError> {
        let k = domain.block_sizes.len();
        let nb = match &blocks {
            Blocks::Diagonal(d) => d.len(),
            Blocks::General(g) => g.len(),
        };
        if mult.len() != k || nb != k {
            return Err(OzError::DimensionMismatch(format!(
                "{k} domain blocks, {} multiplicities, {nb} commutant blocks",
                mult.len()
            )));
        }
        let used: usize = mult.iter().zip(&domain.block_sizes).map(|(m, n)| m * n).sum();
        if used + offset > target_dim {
            return Err(OzError::DimensionMismatch(format!(
                "image needs {} rows but target has {target_dim}",
                used + offset
            )));
        }
        match &blocks {
            Blocks::Diagonal(d) => {
                for (i, (h, &m)) in d.iter().zip(&mult).enumerate() {
                    if h.len() != m {
                        return Err(OzError::DimensionMismatch(format!(
                            "block {i} has {} entries, multiplicity {m}",
                            h.len()
                        )));
                    }
                    if let Some(x) = h.iter().find(|x| **x < Q::zero()) {
                        return Err(OzError::NotPositive(format!("block {i} entry {x}")));
                    }
                    if let Some(x) = h.iter().find(|x| **x > Q::one()) {
                        return Err(OzError::NormExceedsOne(format!("block {i} entry {x}")));
                    }
                }
            }
            Blocks::General(g) => {
                for (i, (h, &m)) in g.iter().zip(&mult).enumerate() {
                    if h.shape() != (m, m) {
                        return Err(OzError::DimensionMismatch(format!(
                            "block {i} is {:?}, multiplicity {m}",
                            h.shape()
                        )));
                    }
                    psd_check(h, &format!("block {i}"))?;
                }
            }
        }
        Ok(OrderZeroMap {
            domain,
            target_dim,
            mult,
            blocks,
            offset,
        })
    }

    /// A commutative-domain diagonal map from the diagonals of its H_i, into the
    /// smallest target that holds it.
    pub fn diagonal(blocks: Vec<Vec<Q>>) -> Result<OrderZeroMap, OzError> {
        let mult: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let n = mult.iter().sum();
        Self::new(FinDimAlgebra::commutative(blocks.len()), mult, Blocks::Diagonal(blocks), n)
    }

    pub fn zero(domain: FinDimAlgebra, target_dim: usize) -> OrderZeroMap {
        let k = domain.block_sizes.len();
        OrderZeroMap {
            domain,
            target_dim,
            mult: vec![0; k],
            blocks: Blocks::Diagonal(vec![Vec::new(); k]),
            offset: 0,
        }
    }

    pub fn domain(&self) -> &FinDimAlgebra {
        &self.domain
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.mult
    }

    pub fn blocks(&self) -> &Blocks {
        &self.blocks
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.blocks, Blocks::Diagonal(_))
    }

    /// Rows of the target actually used by the image.
    pub fn used_dim(&self) -> usize {
        self.mult.iter().zip(&self.domain.block_sizes).map(|(m, n)| m * n).sum()
    }

    fn block_start(&self, i: usize) -> usize {
        self.offset
            + self.mult[..i]
                .iter()
                .zip(&self.domain.block_sizes)
                .map(|(m, n)| m * n)
                .sum::<usize>()
    }

    /// H_i as a dense matrix.
    pub fn block_matrix(&self, i: usize) -> DMatrix<f64> {
        match &self.blocks {
            Blocks::Diagonal(d) => {
                DMatrix::from_diagonal(&DVector::from_iterator(d[i].len(), d[i].iter().map(|&q| qf(q))))
            }
            Blocks::General(g) => g[i].clone(),
        }
    }

    /// The same map in general (floating point) mode.
    pub fn to_general(&self) -> OrderZeroMap {
        let k = self.mult.len();
        OrderZeroMap {
            blocks: Blocks::General((0..k).map(|i| self.block_matrix(i)).collect()),
            ..self.clone()
        }
    }

    /// The positive element h = ⊕ H_i ⊗ 1_{n_i}.
    pub fn h(&self) -> DMatrix<f64> {
        self.apply(&self.domain.unit())
    }

    /// The support homomorphism π(a) = ⊕ 1_{m_i} ⊗ a_i.
    pub fn pi(&self, a: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.target_dim, self.target_dim);
        for (i, ai) in a.iter().enumerate() {
            let m = self.mult[i];
            let blk = DMatrix::<f64>::identity(m, m).kronecker(ai);
            let s = self.block_start(i);
            out.view_mut((s, s), blk.shape()).copy_from(&blk);
        }
        out
    }

    /// ‖φ‖ = ‖h‖.
    pub fn norm(&self) -> f64 {
        match &self.blocks {
            Blocks::Diagonal(d) => d.iter().flatten().map(|&q| qf(q)).fold(0.0, f64::max),
            Blocks::General(g) => g.iter().map(op_norm).fold(0.0, f64::max),
        }
    }

    /// φ(a) computed exactly for diagonal maps and diagonal elements, given as
    /// the diagonals of the a_i; returns the diagonal of φ(a).
    pub fn apply_diag(&self, a: &[Vec<Q>]) -> Result<Vec<Q>, OzError> {
        let Blocks::Diagonal(d) = &self.blocks else {
            return Err(OzError::PreconditionViolated("exact evaluation needs a diagonal map".into()));
        };
        if a.len() != d.len() || a.iter().zip(&self.domain.block_sizes).any(|(x, &n)| x.len() != n) {
            return Err(OzError::ShapeMismatch("element does not match the domain".into()));
        }
        let mut out = vec![Q::zero(); self.target_dim];
        for (i, (h, ai)) in d.iter().zip(a).enumerate() {
            let s = self.block_start(i);
            for (j, hj) in h.iter().enumerate() {
                for (l, al) in ai.iter().enumerate() {
                    out[s + j * ai.len() + l] = hj * al;
                }
            }
        }
        Ok(out)
    }

    /// φ ⊗ id on M_R(A): for x_i ∈ M_R ⊗ M_{n_i}, returns ⊕ H_i ⊗ x_i.
    pub fn apply_amplified(&self, x: &[DMatrix<f64>]) -> Result<DMatrix<f64>, OzError> {
        if x.len() != self.mult.len() || x.iter().any(|xi| !xi.is_square()) {
            return Err(OzError::ShapeMismatch("amplified element does not match the domain".into()));
        }
        let blocks: Vec<DMatrix<f64>> =
            x.iter().enumerate().map(|(i, xi)| self.block_matrix(i).kronecker(xi)).collect();
        let n: usize = blocks.iter().map(|b| b.nrows()).sum();
        let mut out = DMatrix::zeros(n, n);
        let mut s = 0;
        for b in blocks {
            out.view_mut((s, s), b.shape()).copy_from(&b);
            s += b.nrows();
        }
        Ok(out)
    }

    /// Rank of H_i, exact in diagonal mode.
    pub fn block_rank(&self, i: usize) -> usize {
        match &self.blocks {
            Blocks::Diagonal(d) => d[i].iter().filter(|q| !q.is_zero()).count(),
            Blocks::General(g) => rank_f64(&g[i]),
        }
    }
}

impl CpMap for OrderZeroMap {
    fn domain(&self) -> &FinDimAlgebra {
        &self.domain
    }

    fn apply(&self, a: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.target_dim, self.target_dim);
        for (i, ai) in a.iter().enumerate() {
            if self.mult[i] == 0 {
                continue;
            }
            let blk = self.block_matrix(i).kronecker(ai);
            let s = self.block_start(i);
            out.view_mut((s, s), blk.shape()).copy_from(&blk);
        }
        out
    }
}

/// a ↦ h^{1/2} π(a) h^{1/2} for an arbitrary positive h, which need not commute
/// with π. Only an order zero map when it does.
#[derive(Debug, Clone)]
pub struct SandwichMap {
    pub pi: OrderZeroMap,
    pub h: DMatrix<f64>,
}

impl CpMap for SandwichMap {
    fn domain(&self) -> &FinDimAlgebra {
        &self.pi.domain
    }

    fn apply(&self, a: &[DMatrix<f64>]) -> DMatrix<f64> {
        let r = psd_sqrt(&self.h);
        &r * self.pi.pi(a) * &r
    }
}

/// Outcome of a randomized orthogonality test.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderZeroCheck {
    pub pass: bool,
    pub trials: usize,
    /// Largest ‖φ(a)φ(b)‖ seen over orthogonal pairs.
    pub worst: f64,
}

fn random_corner(rng: &mut ChaCha8Rng, n: usize, rows: &[usize]) -> DMatrix<f64> {
    let mut x = DMatrix::<f64>::zeros(n, n);
    for &r in rows {
        for c in 0..n {
            x[(r, c)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let p = &x * x.transpose();
    let nrm = op_norm(&p);
    if nrm > 0.0 {
        p / nrm
    } else {
        p
    }
}

/// Tests φ(a)φ(b) = 0 on random orthogonal positive pairs a, b supported on
/// complementary corners of each block. Diagonal maps are checked exactly on
/// diagonal elements as well.
pub fn oz_check_order_zero<M: CpMap>(phi: &M, trials: usize, seed: u64) -> OrderZeroCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = phi.domain().block_sizes().to_vec();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut a = Vec::with_capacity(sizes.len());
        let mut b = Vec::with_capacity(sizes.len());
        for &n in &sizes {
            let (mut sa, mut sb) = (Vec::new(), Vec::new());
            for r in 0..n {
                match rng.gen_range(0..3) {
                    0 => sa.push(r),
                    1 => sb.push(r),
                    _ => {}
                }
            }
            a.push(random_corner(&mut rng, n, &sa));
            b.push(random_corner(&mut rng, n, &sb));
        }
        let prod = phi.apply(&a) * phi.apply(&b);
        worst = worst.max(op_norm(&prod));
    }
    OrderZeroCheck {
        pass: worst <= ORTHO_TOL,
        trials,
        worst,
    }
}

/// Exact orthogonality check for diagonal maps over diagonal elements with
/// disjoint supports: every pair of domain basis projections.
pub fn oz_check_order_zero_exact(phi: &OrderZeroMap) -> Result<bool, OzError> {
    let sizes = phi.domain.block_sizes.clone();
    let basis: Vec<Vec<Vec<Q>>> = sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| {
            let sizes = sizes.clone();
            (0..n).map(move |l| {
                let mut e: Vec<Vec<Q>> = sizes.iter().map(|&k| vec![Q::zero(); k]).collect();
                e[i][l] = Q::one();
                e
            })
        })
        .collect();
    for (x, ex) in basis.iter().enumerate() {
        let px = phi.apply_diag(ex)?;
        for ey in &basis[x + 1..] {
            let py = phi.apply_diag(ey)?;
            if px.iter().zip(&py).any(|(u, v)| !(u * v).is_zero()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_eps(eps: Q) -> Result<(), OzError> {
    if eps <= Q::zero() || eps >= Q::one() {
        return Err(OzError::InvalidEpsilon(eps));
    }
    Ok(())
}

/// φ_ε = f_ε(φ): the blocks H_i replaced by (H_i − ε)₊.
pub fn oz_eps_cut(phi: &OrderZeroMap, eps: Q) -> Result<OrderZeroMap, OzError> {
    check_eps(eps)?;
    let blocks = match &phi.blocks {
        Blocks::Diagonal(d) => Blocks::Diagonal(
            d.iter()
                .map(|h| h.iter().map(|&x| (x - eps).max(Q::zero())).collect())
                .collect(),
        ),
        Blocks::General(g) => Blocks::General(g.iter().map(|h| eps_cut_matrix(h, qf(eps))).collect()),
    };
    Ok(OrderZeroMap {
        blocks,
        ..phi.clone()
    })
}

/// ν_φ on the points x1, …, xk of a commutative domain: ν(x_i) = rank H_i.
pub fn oz_multiplicity(phi: &OrderZeroMap) -> Result<MultiplicityFunction, OzError> {
    if !phi.domain.is_commutative() {
        return Err(OzError::NonCommutativeDomain);
    }
    let k = phi.mult.len();
    let vals: Vec<ExtNat> = (0..k).map(|i| ExtNat::Fin(phi.block_rank(i) as u64)).collect();
    MultiplicityFunction::from_values(SpaceModel::numbered(k), &vals)
        .map_err(|e| OzError::PreconditionViolated(e.to_string()))
}

fn same_commutative_domain(phi: &OrderZeroMap, psi: &OrderZeroMap) -> Result<(), OzError> {
    if !phi.domain.is_commutative() || !psi.domain.is_commutative() {
        return Err(OzError::NonCommutativeDomain);
    }
    if phi.domain != psi.domain {
        return Err(OzError::SpaceMismatch);
    }
    Ok(())
}

/// φ ≲ ψ for commutative domains, decided by comparing multiplicity functions.
pub fn oz_cuntz_leq_commutative(phi: &OrderZeroMap, psi: &OrderZeroMap) -> Result<bool, OzError> {
    same_commutative_domain(phi, psi)?;
    mf_leq(&oz_multiplicity(phi)?, &oz_multiplicity(psi)?).map_err(|_| OzError::SpaceMismatch)
}

/// A point where φ has larger rank than ψ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankCertificate {
    pub point: usize,
    pub rank_phi: usize,
    pub rank_psi: usize,
}

pub fn oz_rank_certificate(
    phi: &OrderZeroMap,
    psi: &OrderZeroMap,
) -> Result<Option<RankCertificate>, OzError> {
    same_commutative_domain(phi, psi)?;
    Ok((0..phi.mult.len())
        .map(|i| RankCertificate {
            point: i,
            rank_phi: phi.block_rank(i),
            rank_psi: psi.block_rank(i),
        })
        .find(|c| c.rank_phi > c.rank_psi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    /// Maps the target of φ into the target of ψ (N_ψ × N_φ).
    pub witness: DMatrix<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Nonzero eigenpairs of H_i, each eigenvector embedded in the target.
fn eigen_embedded(phi: &OrderZeroMap, i: usize) -> Vec<(f64, DVector<f64>)> {
    let s = phi.block_start(i);
    let m = phi.mult[i];
    let mut out = Vec::new();
    match &phi.blocks {
        Blocks::Diagonal(d) => {
            for (j, &x) in d[i].iter().enumerate() {
                if !x.is_zero() {
                    let mut v = DVector::zeros(phi.target_dim);
                    v[s + j] = 1.0;
                    out.push((qf(x), v));
                }
            }
        }
        Blocks::General(g) => {
            let e = SymmetricEigen::new(g[i].clone());
            let mut pairs: Vec<usize> = (0..m).filter(|&j| e.eigenvalues[j] > RANK_CUTOFF).collect();
            pairs.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
            for j in pairs {
                let mut v = DVector::zeros(phi.target_dim);
                v.rows_mut(s, m).copy_from(&e.eigenvectors.column(j));
                out.push((e.eigenvalues[j], v));
            }
        }
    }
    out
}

/// Builds b with bᵀψ(a)b = φ(a) by pairing eigenvectors of H_i^φ and H_i^ψ at
/// each point and rescaling by sqrt(λ/μ).
pub fn oz_construct_witness(
    phi: &OrderZeroMap,
    psi: &OrderZeroMap,
    tol: f64,
) -> Result<WitnessReport, OzError> {
    if !oz_cuntz_leq_commutative(phi, psi)? {
        return Err(OzError::PreconditionViolated("φ is not subequivalent to ψ".into()));
    }
    let mut b = DMatrix::zeros(psi.target_dim, phi.target_dim);
    for i in 0..phi.mult.len() {
        let src = eigen_embedded(phi, i);
        let dst = eigen_embedded(psi, i);
        for ((lam, v), (mu, w)) in src.iter().zip(&dst) {
            b += (lam / mu).sqrt() * w * v.transpose();
        }
    }
    oz_verify_witness(phi, psi, &b, tol)
}

struct GeneratorImages {
    phi: Vec<DMatrix<f64>>,
    psi: Vec<DMatrix<f64>>,
    block: Vec<usize>,
}

fn generator_images(phi: &OrderZeroMap, psi: &OrderZeroMap) -> GeneratorImages {
    let units = phi.domain.matrix_units();
    GeneratorImages {
        phi: units.iter().map(|(_, a)| phi.apply(a)).collect(),
        psi: units.iter().map(|(_, a)| psi.apply(a)).collect(),
        block: units.iter().map(|(i, _)| *i).collect(),
    }
}

/// max over matrix units e of ‖bᵀψ(e)b − φ(e)‖.
pub fn oz_verify_witness(
    phi: &OrderZeroMap,
    psi: &OrderZeroMap,
    b: &DMatrix<f64>,
    tol: f64,
) -> Result<WitnessReport, OzError> {
    if phi.domain != psi.domain {
        return Err(OzError::DomainMismatch("φ and ψ have different domains".into()));
    }
    if b.shape() != (psi.target_dim, phi.target_dim) {
        return Err(OzError::ShapeMismatch(format!(
            "witness is {:?}, expected {:?}",
            b.shape(),
            (psi.target_dim, phi.target_dim)
        )));
    }
    let g = generator_images(phi, psi);
    let bt = b.transpose();
    let residual = g
        .phi
        .iter()
        .zip(&g.psi)
        .map(|(fp, fs)| op_norm(&(&bt * fs * b - fp)))
        .fold(0.0, f64::max);
    Ok(WitnessReport {
        witness: b.clone(),
        residual,
        tolerance: tol,
        pass: residual < tol,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub samples: usize,
    pub best_residual: f64,
}

/// Samples random b and returns the smallest residual found. Generators at the
/// point of a rank certificate are evaluated first so that hopeless samples are
/// discarded after one cheap lower bound.
pub fn oz_random_witness_search(
    phi: &OrderZeroMap,
    psi: &OrderZeroMap,
    samples: usize,
    seed: u64,
) -> Result<SearchReport, OzError> {
    if phi.domain != psi.domain {
        return Err(OzError::DomainMismatch("φ and ψ have different domains".into()));
    }
    let g = generator_images(phi, psi);
    let first = if phi.domain.is_commutative() {
        oz_rank_certificate(phi, psi)?.map(|c| c.point)
    } else {
        None
    };
    let mut order: Vec<usize> = (0..g.phi.len()).collect();
    order.sort_by_key(|&k| Some(g.block[k]) != first);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (np, nf) = (psi.target_dim, phi.target_dim);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let scale: f64 = rng.gen_range(0.0..2.0) / (np.max(1) as f64).sqrt();
        let b = DMatrix::<f64>::from_fn(np, nf, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let bt = b.transpose();
        let mut worst: f64 = 0.0;
        for &k in &order {
            let x = &bt * &g.psi[k] * &b - &g.phi[k];
            let lower = x.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
            if lower >= best {
                worst = f64::INFINITY;
                break;
            }
            worst = worst.max(op_norm(&x));
            if worst >= best {
                break;
            }
        }
        best = best.min(worst);
    }
    Ok(SearchReport {
        samples,
        best_residual: best,
    })
}

/// Ranks of both sides of (φ(a) − ε)₊ ≲ φ((a − ε)₊).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsRankReport {
    pub left_rank: usize,
    pub right_rank: usize,
}

impl EpsRankReport {
    pub fn holds(&self) -> bool {
        self.left_rank <= self.right_rank
    }
}

/// Exact version for diagonal maps and diagonal a (given by the diagonals of a_i).
pub fn oz_eps_rank_inequality_diag(
    phi: &OrderZeroMap,
    a: &[Vec<Q>],
    eps: Q,
) -> Result<EpsRankReport, OzError> {
    check_eps(eps)?;
    if let Some(x) = a.iter().flatten().find(|x| **x < Q::zero() || **x > Q::one()) {
        return Err(OzError::NotPositive(format!("entry {x} of a is outside [0,1]")));
    }
    let left = phi.apply_diag(a)?.into_iter().filter(|&x| x > eps).count();
    let cut: Vec<Vec<Q>> = a
        .iter()
        .map(|ai| ai.iter().map(|&x| (x - eps).max(Q::zero())).collect())
        .collect();
    let right = phi.apply_diag(&cut)?.into_iter().filter(|x| !x.is_zero()).count();
    Ok(EpsRankReport {
        left_rank: left,
        right_rank: right,
    })
}

/// Floating point version for arbitrary maps and positive contractions a.
pub fn oz_eps_rank_inequality(
    phi: &OrderZeroMap,
    a: &[DMatrix<f64>],
    eps: Q,
) -> Result<EpsRankReport, OzError> {
    check_eps(eps)?;
    phi.domain.check_element(a)?;
    for ai in a {
        psd_check(ai, "a")?;
    }
    let e = qf(eps);
    let left = rank_f64(&eps_cut_matrix(&phi.apply(a), e));
    let cut: Vec<DMatrix<f64>> = a.iter().map(|ai| eps_cut_matrix(ai, e)).collect();
    let right = rank_f64(&phi.apply(&cut));
    Ok(EpsRankReport {
        left_rank: left,
        right_rank: right,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandelmanReport {
    pub z: DMatrix<f64>,
    pub norm: f64,
    /// ‖z b^{1/2} − a^{1/2}‖.
    pub deviation: f64,
}

/// z_n = a^{1/2} b^{1/2} (b + 1/n)^{-1} for 0 ≤ a ≤ b.
pub fn oz_handelman(a: &DMatrix<f64>, b: &DMatrix<f64>, n: u64) -> Result<HandelmanReport, OzError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(OzError::ShapeMismatch("a and b must be square of equal size".into()));
    }
    if n == 0 {
        return Err(OzError::PreconditionViolated("n must be positive".into()));
    }
    let min_eig = |m: &DMatrix<f64>| {
        if m.nrows() == 0 {
            0.0
        } else {
            SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues.min()
        }
    };
    if min_eig(a) < -PSD_TOL {
        return Err(OzError::NotPositive("a".into()));
    }
    if min_eig(&(b - a)) < -PSD_TOL {
        return Err(OzError::NotDominated);
    }
    let d = a.nrows();
    let ra = psd_sqrt(a);
    let rb = psd_sqrt(b);
    let shifted = b + DMatrix::identity(d, d) / n as f64;
    let inv = spectral_map(&shifted, |l| 1.0 / l);
    let z = &ra * &rb * inv;
    let norm = op_norm(&z);
    let deviation = op_norm(&(&z * &rb - &ra));
    Ok(HandelmanReport { z, norm, deviation })
}

/// φ ⊕̂ ψ on a shared domain: the commutant blocks are stacked, which realizes
/// φ(a) ⊕ ψ(a) up to a permutation of the target basis.
pub fn oz_direct_sum_hat(phi: &OrderZeroMap, psi: &OrderZeroMap) -> Result<OrderZeroMap, OzError> {
    if phi.domain != psi.domain {
        return Err(OzError::DomainMismatch("⊕̂ needs a shared domain".into()));
    }
    let mult: Vec<usize> = phi.mult.iter().zip(&psi.mult).map(|(a, b)| a + b).collect();
    let blocks = match (&phi.blocks, &psi.blocks) {
        (Blocks::Diagonal(x), Blocks::Diagonal(y)) => {
            Blocks::Diagonal(x.iter().zip(y).map(|(u, v)| [u.as_slice(), v.as_slice()].concat()).collect())
        }
        _ => Blocks::General(
            (0..mult.len())
                .map(|i| {
                    let (u, v) = (phi.block_matrix(i), psi.block_matrix(i));
                    let mut h = DMatrix::zeros(mult[i], mult[i]);
                    h.view_mut((0, 0), u.shape()).copy_from(&u);
                    h.view_mut(u.shape(), v.shape()).copy_from(&v);
                    h
                })
                .collect(),
        ),
    };
    OrderZeroMap::new(phi.domain.clone(), mult, blocks, phi.target_dim + psi.target_dim)
}

/// Restricts φ on A₁ ⊕ A₂ (split before domain block `at`) to its two summands.
/// Both parts keep the original target; the second is placed after the first.
pub fn oz_split_direct_sum(phi: &OrderZeroMap, at: usize) -> Result<(OrderZeroMap, OrderZeroMap), OzError> {
    let k = phi.mult.len();
    if at == 0 || at >= k {
        return Err(OzError::DomainMismatch(format!("cannot split {k} blocks at {at}")));
    }
    let part = |r: std::ops::Range<usize>, offset: usize| -> OrderZeroMap {
        let blocks = match &phi.blocks {
            Blocks::Diagonal(d) => Blocks::Diagonal(d[r.clone()].to_vec()),
            Blocks::General(g) => Blocks::General(g[r.clone()].to_vec()),
        };
        OrderZeroMap {
            domain: FinDimAlgebra {
                block_sizes: phi.domain.block_sizes[r.clone()].to_vec(),
            },
            target_dim: phi.target_dim,
            mult: phi.mult[r].to_vec(),
            blocks,
            offset,
        }
    };
    let first = part(0..at, phi.offset);
    let second = part(at..k, phi.block_start(at));
    Ok((first, second))
}

/// Inverse of [`oz_split_direct_sum`].
pub fn oz_join(first: &OrderZeroMap, second: &OrderZeroMap) -> Result<OrderZeroMap, OzError> {
    if first.target_dim != second.target_dim || second.offset != first.offset + first.used_dim() {
        return Err(OzError::DomainMismatch("parts are not adjacent in a common target".into()));
    }
    let blocks = match (&first.blocks, &second.blocks) {
        (Blocks::Diagonal(x), Blocks::Diagonal(y)) => Blocks::Diagonal([x.clone(), y.clone()].concat()),
        (Blocks::General(x), Blocks::General(y)) => Blocks::General([x.clone(), y.clone()].concat()),
        _ => return Err(OzError::DomainMismatch("parts use different modes".into())),
    };
    let domain = FinDimAlgebra::new([first.domain.block_sizes.clone(), second.domain.block_sizes.clone()].concat())?;
    OrderZeroMap::with_offset(
        domain,
        [first.mult.clone(), second.mult.clone()].concat(),
        blocks,
        first.target_dim,
        first.offset,
    )
}

/// rank(h_φ ⊗ h_ψ) for maps out of ℂ.
pub fn oz_kronecker_rank(phi: &OrderZeroMap, psi: &OrderZeroMap) -> Result<ExtNat, OzError> {
    if phi.domain.block_sizes != [1] || psi.domain.block_sizes != [1] {
        return Err(OzError::DomainMismatch("both domains must be ℂ".into()));
    }
    let r = match (&phi.blocks, &psi.blocks) {
        (Blocks::Diagonal(x), Blocks::Diagonal(y)) => x[0]
            .iter()
            .flat_map(|u| y[0].iter().map(move |v| u * v))
            .filter(|p| !p.is_zero())
            .count(),
        _ => rank_f64(&phi.block_matrix(0).kronecker(&psi.block_matrix(0))),
    };
    Ok(ExtNat::Fin(r as u64))
}

/// Values {0} ∪ {k/d : 1 ≤ k ≤ d ≤ 8}, so nonzero eigenvalues are at least 1/8.
pub fn random_entry(rng: &mut impl Rng) -> Q {
    if rng.gen_bool(0.3) {
        return Q::zero();
    }
    let d = rng.gen_range(1..=8i64);
    Q::new(rng.gen_range(1..=d), d)
}

/// A random diagonal map on ℂ^k whose total multiplicity is at most `max_dim`.
pub fn random_commutative_diag(rng: &mut impl Rng, k: usize, max_dim: usize) -> OrderZeroMap {
    let mut left = max_dim;
    let mut blocks = Vec::with_capacity(k);
    for _ in 0..k {
        let cap = left.min(max_dim / k.max(1)).min(4);
        let m = rng.gen_range(0..=cap);
        left -= m;
        blocks.push((0..m).map(|_| random_entry(rng)).collect());
    }
    OrderZeroMap::diagonal(blocks).expect("generated map is valid")
}

fn q_json(q: Q) -> Value {
    json!(q.to_string())
}

fn parse_q(v: &Value) -> Result<Q, OzError> {
    match v {
        Value::String(s) => s.trim().parse().map_err(|_| OzError::Schema(format!("bad rational {s:?}"))),
        Value::Number(n) => n
            .as_i64()
            .map(Q::from_integer)
            .ok_or_else(|| OzError::Schema(format!("non-integer number {n}; write rationals as \"n/d\""))),
        other => Err(OzError::Schema(format!("bad rational {other}"))),
    }
}

fn parse_f(v: &Value) -> Result<f64, OzError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| OzError::Schema(format!("bad number {n}"))),
        _ => parse_q(v).map(qf),
    }
}

fn usize_list(v: Option<&Value>, what: &str) -> Result<Vec<usize>, OzError> {
    v.and_then(Value::as_array)
        .ok_or_else(|| OzError::Schema(format!("missing {what}")))?
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| OzError::Schema(format!("{what} entries are nonnegative integers")))
        })
        .collect()
}

impl OrderZeroMap {
    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = match &self.blocks {
            Blocks::Diagonal(d) => d
                .iter()
                .map(|h| {
                    let m = h.len();
                    Value::Array(
                        (0..m)
                            .map(|r| {
                                Value::Array(
                                    (0..m).map(|c| q_json(if r == c { h[r] } else { Q::zero() })).collect(),
                                )
                            })
                            .collect(),
                    )
                })
                .collect(),
            Blocks::General(g) => g
                .iter()
                .map(|h| {
                    Value::Array(h.row_iter().map(|row| Value::Array(row.iter().map(|x| json!(x)).collect())).collect())
                })
                .collect(),
        };
        let mut doc = json!({
            "schema": crate::SCHEMA,
            "domain": self.domain.block_sizes,
            "target_dim": self.target_dim,
            "mult": self.mult,
            "blocks": blocks,
            "mode": if self.is_diagonal() { "diag" } else { "general" },
        });
        if self.offset != 0 {
            doc["offset"] = json!(self.offset);
        }
        doc
    }

    pub fn from_json(v: &Value) -> Result<OrderZeroMap, OzError> {
        if let Some(s) = v.get("schema") {
            if s != crate::SCHEMA {
                return Err(OzError::Schema(format!("unsupported schema {s}")));
            }
        }
        let domain = FinDimAlgebra::new(usize_list(v.get("domain"), "domain")?)?;
        let mult = usize_list(v.get("mult"), "mult")?;
        let target_dim = v
            .get("target_dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| OzError::Schema("missing target_dim".into()))? as usize;
        let offset = v.get("offset").and_then(Value::as_u64).unwrap_or(0) as usize;
        let raw = v
            .get("blocks")
            .and_then(Value::as_array)
            .ok_or_else(|| OzError::Schema("missing blocks".into()))?;
        let mut rows_of = Vec::with_capacity(raw.len());
        for (i, b) in raw.iter().enumerate() {
            let rows = b
                .as_array()
                .ok_or_else(|| OzError::Schema(format!("block {i} is not a matrix")))?;
            let rows: Vec<&Vec<Value>> = rows
                .iter()
                .map(|r| r.as_array().ok_or_else(|| OzError::Schema(format!("block {i} row is not a list"))))
                .collect::<Result<_, _>>()?;
            if rows.iter().any(|r| r.len() != rows.len()) {
                return Err(OzError::DimensionMismatch(format!("block {i} is not square")));
            }
            rows_of.push(rows);
        }
        let blocks = match v.get("mode").and_then(Value::as_str).unwrap_or("diag") {
            "diag" => {
                let mut d = Vec::with_capacity(rows_of.len());
                for (i, rows) in rows_of.iter().enumerate() {
                    let mut diag = Vec::with_capacity(rows.len());
                    for (r, row) in rows.iter().enumerate() {
                        for (c, x) in row.iter().enumerate() {
                            let q = parse_q(x)?;
                            if r == c {
                                diag.push(q);
                            } else if !q.is_zero() {
                                return Err(OzError::Schema(format!("block {i} is not diagonal; use mode \"general\"")));
                            }
                        }
                    }
                    d.push(diag);
                }
                Blocks::Diagonal(d)
            }
            "general" => {
                let mut g = Vec::with_capacity(rows_of.len());
                for rows in &rows_of {
                    let m = rows.len();
                    let mut h = DMatrix::zeros(m, m);
                    for (r, row) in rows.iter().enumerate() {
                        for (c, x) in row.iter().enumerate() {
                            h[(r, c)] = parse_f(x)?;
                        }
                    }
                    g.push(h);
                }
                Blocks::General(g)
            }
            other => return Err(OzError::Schema(format!("unknown mode {other:?}"))),
        };
        OrderZeroMap::with_offset(domain, mult, blocks, target_dim, offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn new_examples() {
        let phi = OrderZeroMap::new(
            FinDimAlgebra::new(vec![1]).unwrap(),
            vec![2],
            Blocks::Diagonal(vec![vec![q(1, 1), q(1, 2)]]),
            2,
        )
        .unwrap();
        let img = phi.apply_diag(&[vec![q(3, 1)]]).unwrap();
        assert_eq!(img, vec![q(3, 1), q(3, 2)]);

        let hom = OrderZeroMap::diagonal(vec![vec![q(1, 1)], vec![q(1, 1)]]).unwrap();
        let img = hom.apply_diag(&[vec![q(2, 1)], vec![q(5, 1)]]).unwrap();
        assert_eq!(img, vec![q(2, 1), q(5, 1)]);

        let half = OrderZeroMap::new(
            FinDimAlgebra::new(vec![2]).unwrap(),
            vec![1],
            Blocks::Diagonal(vec![vec![q(1, 2)]]),
            2,
        )
        .unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(half.apply(&[a.clone()]), a / 2.0);

        let bad = |blocks, n| OrderZeroMap::new(FinDimAlgebra::commutative(1), vec![1], blocks, n);
        assert!(matches!(bad(Blocks::Diagonal(vec![vec![q(1, 1)]]), 0), Err(OzError::DimensionMismatch(_))));
        assert!(matches!(bad(Blocks::Diagonal(vec![vec![q(-1, 2)]]), 1), Err(OzError::NotPositive(_))));
        assert!(matches!(bad(Blocks::Diagonal(vec![vec![q(3, 2)]]), 1), Err(OzError::NormExceedsOne(_))));
        let g = DMatrix::from_element(1, 1, 1.5);
        assert!(matches!(bad(Blocks::General(vec![g]), 1), Err(OzError::NormExceedsOne(_))));
    }

    fn corrupted() -> SandwichMap {
        let pi = OrderZeroMap::diagonal(vec![vec![q(1, 1)], vec![q(1, 1)]]).unwrap();
        SandwichMap {
            pi,
            h: DMatrix::from_element(2, 2, 0.5),
        }
    }

    #[test]
    fn order_zero_checks() {
        let phi = OrderZeroMap::new(
            FinDimAlgebra::new(vec![2, 1]).unwrap(),
            vec![2, 1],
            Blocks::General(vec![
                DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5]),
                DMatrix::from_element(1, 1, 0.3),
            ]),
            6,
        )
        .unwrap();
        assert!(oz_check_order_zero(&phi, 50, 1).pass);
        assert!(oz_check_order_zero(&OrderZeroMap::zero(FinDimAlgebra::commutative(2), 3), 20, 0).pass);
        let diag = OrderZeroMap::diagonal(vec![vec![q(1, 2), q(1, 3)], vec![q(1, 1)]]).unwrap();
        assert!(oz_check_order_zero_exact(&diag).unwrap());

        // φ(e₁)φ(e₂) = (P/2)(P/2) = P/4 for the projection P = h
        let bad = corrupted();
        let e1 = vec![DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1)];
        let e2 = vec![DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0)];
        let prod = bad.apply(&e1) * bad.apply(&e2);
        assert!(close(op_norm(&prod), 0.25));
        assert!(!oz_check_order_zero(&bad, 50, 3).pass);
    }

    #[test]
    fn eps_cut_examples() {
        let phi = OrderZeroMap::diagonal(vec![vec![q(1, 1), q(1, 2)]]).unwrap();
        let cut = oz_eps_cut(&phi, q(1, 2)).unwrap();
        assert_eq!(cut.blocks(), &Blocks::Diagonal(vec![vec![q(1, 2), q(0, 1)]]));
        let gone = oz_eps_cut(&phi, q(99, 100)).unwrap();
        assert_eq!(oz_multiplicity(&gone).unwrap().values().unwrap(), vec![ExtNat::Fin(1)]);
        let small = OrderZeroMap::diagonal(vec![vec![q(1, 3), q(1, 2)]]).unwrap();
        assert!(oz_multiplicity(&oz_eps_cut(&small, q(1, 2)).unwrap()).unwrap().is_zero());
        assert!(oz_eps_cut(&phi, q(0, 1)).is_err());
        assert!(oz_eps_cut(&phi, q(1, 1)).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        let phi = OrderZeroMap::diagonal(vec![vec![q(1, 1), q(1, 2)], vec![q(0, 1)]]).unwrap();
        assert_eq!(oz_multiplicity(&phi).unwrap().values().unwrap(), vec![ExtNat::Fin(2), ExtNat::ZERO]);
        assert!(oz_multiplicity(&OrderZeroMap::zero(FinDimAlgebra::commutative(2), 0))
            .unwrap()
            .is_zero());
        let psi = OrderZeroMap::diagonal(vec![vec![q(1, 3)], vec![q(1, 1); 3]]).unwrap();
        assert_eq!(oz_multiplicity(&psi).unwrap().values().unwrap(), vec![ExtNat::Fin(1), ExtNat::Fin(3)]);
        let nc = OrderZeroMap::zero(FinDimAlgebra::new(vec![2]).unwrap(), 2);
        assert_eq!(oz_multiplicity(&nc), Err(OzError::NonCommutativeDomain));
    }

    #[test]
    fn comparison_and_witness() {
        let one = OrderZeroMap::diagonal(vec![vec![q(1, 2)]]).unwrap();
        let two = OrderZeroMap::new(
            FinDimAlgebra::commutative(1),
            vec![2],
            Blocks::Diagonal(vec![vec![q(1, 1), q(0, 1)]]),
            2,
        )
        .unwrap();
        let rank2 = OrderZeroMap::diagonal(vec![vec![q(1, 1), q(1, 1)]]).unwrap();
        assert!(oz_cuntz_leq_commutative(&one, &rank2).unwrap());
        assert!(!oz_cuntz_leq_commutative(&rank2, &one).unwrap());

        // b = sqrt(1/2) e₁ gives bᵀψ(1)b = 1/2
        let w = oz_construct_witness(&one, &two, 1e-6).unwrap();
        assert!(close(w.witness[(0, 0)], 0.5f64.sqrt()));
        assert!(w.residual < 1e-15);

        let same = oz_construct_witness(&rank2, &rank2, 1e-6).unwrap();
        assert_eq!(same.residual, 0.0);
        let id = DMatrix::identity(2, 2);
        assert_eq!(oz_verify_witness(&rank2, &rank2, &id, 1e-6).unwrap().residual, 0.0);
        let z = oz_verify_witness(&one, &two, &DMatrix::zeros(2, 1), 1e-6).unwrap();
        assert!(close(z.residual, 0.5) && !z.pass);
        assert!(matches!(
            oz_verify_witness(&one, &two, &DMatrix::zeros(1, 1), 1e-6),
            Err(OzError::ShapeMismatch(_))
        ));
        assert!(matches!(
            oz_construct_witness(&rank2, &one, 1e-6),
            Err(OzError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn unmatched_point_resists_search() {
        let phi = OrderZeroMap::diagonal(vec![vec![q(1, 1)], vec![q(1, 1)]]).unwrap();
        let psi = OrderZeroMap::diagonal(vec![vec![q(1, 1); 3], vec![]]).unwrap();
        assert!(!oz_cuntz_leq_commutative(&phi, &psi).unwrap());
        let cert = oz_rank_certificate(&phi, &psi).unwrap().unwrap();
        assert_eq!((cert.point, cert.rank_phi, cert.rank_psi), (1, 1, 0));
        let s = oz_random_witness_search(&phi, &psi, 10_000, 0).unwrap();
        assert!(s.best_residual > 0.1, "{}", s.best_residual);
    }

    #[test]
    fn general_mode_witness() {
        let h = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5]);
        let phi = OrderZeroMap::new(FinDimAlgebra::commutative(1), vec![2], Blocks::General(vec![h]), 2).unwrap();
        let psi = OrderZeroMap::diagonal(vec![vec![q(1, 1), q(1, 3), q(1, 5)]]).unwrap();
        let w = oz_construct_witness(&phi, &psi, 1e-6).unwrap();
        assert!(w.pass, "{}", w.residual);
    }

    #[test]
    fn eps_rank_examples() {
        let id = OrderZeroMap::diagonal(vec![vec![q(1, 1)]]).unwrap();
        for (a, e) in [(q(1, 2), q(1, 4)), (q(1, 1), q(1, 2)), (q(1, 5), q(1, 2))] {
            let r = oz_eps_rank_inequality_diag(&id, &[vec![a]], e).unwrap();
            assert_eq!(r.left_rank, r.right_rank);
        }
        // (1/2 − 3/4)₊ = 0 on the left, (1 − 3/4)·1/2 = 1/8 ≠ 0 on the right
        let h = OrderZeroMap::diagonal(vec![vec![q(1, 2)]]).unwrap();
        let r = oz_eps_rank_inequality_diag(&h, &[vec![q(1, 1)]], q(3, 4)).unwrap();
        assert_eq!((r.left_rank, r.right_rank), (0, 1));
        assert!(r.holds());
        let g = oz_eps_rank_inequality(&h, &[DMatrix::from_element(1, 1, 1.0)], q(3, 4)).unwrap();
        assert_eq!(g, r);
        assert!(oz_eps_rank_inequality_diag(&h, &[vec![q(-1, 2)]], q(1, 4)).is_err());
    }

    #[test]
    fn handelman_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        let r = oz_handelman(&id, &id, 1000).unwrap();
        assert!((r.deviation - (1.0 - 1.0 / 1.001)).abs() < 1e-12);
        let r = oz_handelman(&DMatrix::zeros(3, 3), &id, 10).unwrap();
        assert_eq!(r.z, DMatrix::zeros(3, 3));
        assert_eq!(r.deviation, 0.0);
        assert_eq!(oz_handelman(&id, &(0.5 * &id), 10).unwrap_err(), OzError::NotDominated);
    }

    #[test]
    fn direct_sums() {
        let phi = OrderZeroMap::diagonal(vec![vec![q(1, 2)], vec![q(1, 1), q(1, 3)]]).unwrap();
        let psi = OrderZeroMap::diagonal(vec![vec![q(1, 1), q(0, 1)], vec![q(1, 4)]]).unwrap();
        let s = oz_direct_sum_hat(&phi, &psi).unwrap();
        let ranks = oz_multiplicity(&s).unwrap().values().unwrap();
        assert_eq!(ranks, vec![ExtNat::Fin(2), ExtNat::Fin(3)]);

        let zero = OrderZeroMap::zero(phi.domain().clone(), 0);
        let pz = oz_direct_sum_hat(&phi, &zero).unwrap();
        assert!(oz_cuntz_leq_commutative(&pz, &phi).unwrap());
        assert!(oz_cuntz_leq_commutative(&phi, &pz).unwrap());

        let (a, b) = oz_split_direct_sum(&phi, 1).unwrap();
        assert_eq!(b.offset(), 1);
        assert_eq!(oz_join(&a, &b).unwrap(), phi);
        assert!(oz_split_direct_sum(&phi, 0).is_err());
    }

    #[test]
    fn kronecker_examples() {
        let two = OrderZeroMap::diagonal(vec![vec![q(1, 1), q(1, 2)]]).unwrap();
        let three = OrderZeroMap::diagonal(vec![vec![q(1, 3); 3]]).unwrap();
        assert_eq!(oz_kronecker_rank(&two, &three).unwrap(), ExtNat::Fin(6));
        let zero = OrderZeroMap::zero(FinDimAlgebra::commutative(1), 2);
        assert_eq!(oz_kronecker_rank(&zero, &three).unwrap(), ExtNat::ZERO);
    }

    #[test]
    fn json_round_trip() {
        let phi = OrderZeroMap::new(
            FinDimAlgebra::commutative(2),
            vec![2, 1],
            Blocks::Diagonal(vec![vec![q(1, 1), q(1, 2)], vec![q(1, 1)]]),
            3,
        )
        .unwrap();
        let doc = phi.to_json();
        assert_eq!(doc["blocks"][0][1][1], "1/2");
        assert_eq!(OrderZeroMap::from_json(&doc).unwrap(), phi);
        let g = phi.to_general();
        assert_eq!(OrderZeroMap::from_json(&g.to_json()).unwrap(), g);
        let bad = json!({"domain":[1],"target_dim":1,"mult":[1],"blocks":[[["1","1"],["1","1"]]]});
        assert!(OrderZeroMap::from_json(&bad).is_err());
    }
}
