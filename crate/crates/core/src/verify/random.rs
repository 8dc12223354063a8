//! Seeded generators for random nonexpansive and monotone instances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numeric::{orthonormal_range_basis, spectral_norm, Matrix, Vector};
use crate::operators::{MonotoneAffine, Operator};

pub type InstanceRng = ChaCha8Rng;

/// Per-instance seed derived from a base seed and an instance index.
pub fn instance_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_vector(rng: &mut InstanceRng, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut InstanceRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn uniform_vector(rng: &mut InstanceRng, dim: usize, scale: f64) -> Vector {
    Vector::from_fn(dim, |_, _| rng.gen_range(-scale..scale))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q).
pub fn random_orthogonal(rng: &mut InstanceRng, dim: usize) -> Matrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Gaussian matrix rescaled to the given spectral norm.
pub fn random_contraction(rng: &mut InstanceRng, dim: usize, norm: f64) -> Matrix {
    let g = gaussian_matrix(rng, dim, dim);
    let s = spectral_norm(&g);
    g * (norm / s)
}

/// `G Gᵀ` with `G` of size `dim × rank`.
pub fn random_psd(rng: &mut InstanceRng, dim: usize, rank: usize) -> Matrix {
    let g = gaussian_matrix(rng, dim, rank);
    &g * g.transpose()
}

pub fn random_psd_operator(rng: &mut InstanceRng, dim: usize) -> MonotoneAffine {
    let rank = rng.gen_range(1..=dim);
    let q = random_psd(rng, dim, rank) * rng.gen_range(0.2..2.0);
    MonotoneAffine::new(q, gaussian_vector(rng, dim)).expect("PSD matrix is monotone")
}

/// Averaged affine map `x ↦ Mx + b` with `‖M‖₂ = 0.95`.
pub fn contraction_operator(rng: &mut InstanceRng, dim: usize) -> Operator {
    let m = random_contraction(rng, dim, 0.95);
    Operator::affine(m, gaussian_vector(rng, dim)).expect("contraction is nonexpansive")
}

/// Affine maps sharing a common fixed subspace `W` of their linear parts.
///
/// Every displacement range then lies in a translate of `W^⊥`, so ranges
/// are proper subspaces and minimal displacement vectors are nonzero.
#[derive(Debug, Clone)]
pub struct SharedFixedSpace {
    dim: usize,
    fixed_projector: Matrix,
    complement: Matrix,
}

impl SharedFixedSpace {
    pub fn new(rng: &mut InstanceRng, dim: usize, fixed_dim: usize) -> Self {
        assert!(fixed_dim < dim, "fixed subspace must be proper");
        let q = random_orthogonal(rng, dim);
        let fixed = q.columns(0, fixed_dim).into_owned();
        let complement = q.columns(fixed_dim, dim - fixed_dim).into_owned();
        Self { dim, fixed_projector: &fixed * fixed.transpose(), complement }
    }

    pub fn random(rng: &mut InstanceRng, dim: usize) -> Self {
        let fixed_dim = rng.gen_range(0..=(dim.saturating_sub(2)).min(2));
        Self::new(rng, dim, fixed_dim)
    }

    fn complement_dim(&self) -> usize {
        self.complement.ncols()
    }

    /// `P_W + V C Vᵀ` for a block `C` on `W^⊥` in a random basis `V`.
    fn lift(&self, rng: &mut InstanceRng, block: &Matrix) -> Matrix {
        let c = self.complement_dim();
        let v = &self.complement * random_orthogonal(rng, c);
        &self.fixed_projector + &v * block * v.transpose()
    }

    /// `(1−α)I + αN` where `N` fixes `W`, possibly some extra directions,
    /// and contracts the rest by 0.9.
    pub fn averaged(&self, rng: &mut InstanceRng) -> Operator {
        let c = self.complement_dim();
        let extra_fixed = rng.gen_range(0..c);
        let mut block = Matrix::zeros(c, c);
        for i in 0..extra_fixed {
            block[(i, i)] = 1.0;
        }
        let rest = c - extra_fixed;
        if rest > 0 {
            let g = random_contraction(rng, rest, 0.9);
            block.view_mut((extra_fixed, extra_fixed), (rest, rest)).copy_from(&g);
        }
        let n = self.lift(rng, &block);
        let alpha = rng.gen_range(0.2..0.8);
        let m = Matrix::identity(self.dim, self.dim) * (1.0 - alpha) + n * alpha;
        Operator::affine(m, gaussian_vector(rng, self.dim)).expect("averaged map is nonexpansive")
    }

    /// Orthogonal map fixing `W` and rotating `W^⊥` in planes by angles in
    /// `[0.6, π − 0.1]`; an odd leftover direction is reflected. Nonexpansive
    /// with spectral norm exactly one, never averaged.
    pub fn orthogonal(&self, rng: &mut InstanceRng) -> Operator {
        let c = self.complement_dim();
        let mut block = Matrix::zeros(c, c);
        let mut i = 0;
        while i + 1 < c {
            let theta = rng.gen_range(0.6..(std::f64::consts::PI - 0.1));
            let (s, co) = theta.sin_cos();
            block[(i, i)] = co;
            block[(i, i + 1)] = -s;
            block[(i + 1, i)] = s;
            block[(i + 1, i + 1)] = co;
            i += 2;
        }
        if i < c {
            block[(i, i)] = -1.0;
        }
        let m = self.lift(rng, &block);
        Operator::affine(m, gaussian_vector(rng, self.dim)).expect("orthogonal map is nonexpansive")
    }
}

/// Orthonormal basis of a random `k`-dimensional subspace.
pub fn random_subspace_basis(rng: &mut InstanceRng, dim: usize, k: usize) -> Vec<Vector> {
    orthonormal_range_basis(&gaussian_matrix(rng, dim, k), 1e-10).expect("finite Gaussian matrix")
}

/// `k` random weights in `(0,1)` summing to one.
pub fn random_weights(rng: &mut InstanceRng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    // absorb rounding in the last weight so the sum is 1 to machine precision
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

/// Uniformly random permutation of `0..m` (Fisher–Yates).
pub fn random_permutation(rng: &mut InstanceRng, m: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}
