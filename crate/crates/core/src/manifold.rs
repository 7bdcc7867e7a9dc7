//! Constraint sets for weight matrices.
//!
//! Each [`Manifold`] supplies a tangent-space projection of an ambient
//! gradient and a retraction that maps a tangent step back onto the set:
//!
//! | kind      | constraint          | projection            | retraction              |
//! |-----------|---------------------|-----------------------|-------------------------|
//! | Euclidean | none                | `g`                   | `w + ξ`                 |
//! | Stiefel   | `WᵀW = I_p`         | `g − W·sym(Wᵀg)`      | `qf(w + ξ)`             |
//! | Oblique   | unit-norm columns   | `g − W·ddiag(Wᵀg)`    | column renormalization  |
//!
//! The Stiefel projection is the embedded (Frobenius) metric gradient.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_nt, matmul_tn, qf, sym, thin_svd, Matrix};

/// Default tolerance on the constraint defect for runtime checks.
pub const FEASIBILITY_TOL: f64 = 1e-8;

const POLAR_RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Euclidean,
    Stiefel,
    Oblique,
}

impl ManifoldKind {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Euclidean => "euclidean",
            ManifoldKind::Stiefel => "stiefel",
            ManifoldKind::Oblique => "oblique",
        }
    }

    pub fn is_constrained(self) -> bool {
        self != ManifoldKind::Euclidean
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which constraint set an `n × p` parameter lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifold {
    kind: ManifoldKind,
    n: usize,
    p: usize,
}

/// Result of [`Manifold::check_feasible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub defect: f64,
    pub feasible: bool,
}

impl Manifold {
    pub fn new(kind: ManifoldKind, n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::dim("Manifold::new", "n and p must be positive"));
        }
        if kind.is_constrained() && p > n {
            return Err(Error::dim(
                "Manifold::new",
                format!("{kind} needs p <= n, got n={n}, p={p}"),
            ));
        }
        Ok(Self { kind, n, p })
    }

    pub fn euclidean(n: usize, p: usize) -> Self {
        Self::new(ManifoldKind::Euclidean, n, p).expect("positive shape")
    }

    pub fn stiefel(n: usize, p: usize) -> Result<Self> {
        Self::new(ManifoldKind::Stiefel, n, p)
    }

    pub fn oblique(n: usize, p: usize) -> Result<Self> {
        Self::new(ManifoldKind::Oblique, n, p)
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    fn require_shape(&self, m: &Matrix, op: &'static str) -> Result<()> {
        if m.shape() != (self.n, self.p) {
            return Err(Error::dim(
                op,
                format!(
                    "{:?} on a {} manifold of shape {:?}",
                    m.shape(),
                    self.kind,
                    (self.n, self.p)
                ),
            ));
        }
        Ok(())
    }

    /// Constraint defect: `‖WᵀW − I‖_F` for Stiefel, the largest
    /// `|‖w_j‖ − 1|` for Oblique, zero for Euclidean.
    pub fn defect(&self, w: &Matrix) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => 0.0,
            ManifoldKind::Stiefel => stiefel_defect(w),
            ManifoldKind::Oblique => (0..w.cols())
                .map(|j| (w.column_norm(j) - 1.0).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn check_feasible(&self, w: &Matrix, tol: f64) -> Result<Feasibility> {
        self.require_shape(w, "check_feasible")?;
        let defect = self.defect(w);
        Ok(Feasibility {
            defect,
            feasible: defect <= tol,
        })
    }

    fn require_feasible(&self, w: &Matrix, op: &'static str) -> Result<()> {
        self.require_shape(w, op)?;
        let defect = self.defect(w);
        if defect > FEASIBILITY_TOL || defect.is_nan() {
            return Err(Error::Infeasible {
                manifold: self.kind.name(),
                defect,
                tol: FEASIBILITY_TOL,
            });
        }
        Ok(())
    }

    /// Projects an ambient direction `g` onto the tangent space at `w`.
    pub fn tangent_project(&self, w: &Matrix, g: &Matrix) -> Result<Matrix> {
        self.require_feasible(w, "tangent_project")?;
        self.require_shape(g, "tangent_project")?;
        match self.kind {
            ManifoldKind::Euclidean => Ok(g.clone()),
            ManifoldKind::Stiefel => {
                let s = sym(&matmul_tn(w, g)?)?;
                g.sub(&matmul(w, &s)?)
            }
            ManifoldKind::Oblique => {
                let radial: Vec<f64> = (0..w.cols())
                    .map(|j| (0..w.rows()).map(|i| w.get(i, j) * g.get(i, j)).sum())
                    .collect();
                g.sub(&w.scale_columns(&radial)?)
            }
        }
    }

    /// Maps the tangent step `xi` at `w` back onto the manifold.
    pub fn retract(&self, w: &Matrix, xi: &Matrix) -> Result<Matrix> {
        self.require_shape(w, "retract")?;
        self.require_shape(xi, "retract")?;
        let moved = w.add(xi)?;
        match self.kind {
            ManifoldKind::Euclidean => Ok(moved),
            ManifoldKind::Stiefel => qf(&moved).map_err(|e| Error::Retraction(e.to_string())),
            ManifoldKind::Oblique => {
                normalize_columns(&moved).map_err(|e| Error::Retraction(e.to_string()))
            }
        }
    }

    /// Metric projection of an arbitrary ambient point onto the set: the polar
    /// factor for Stiefel, column normalization for Oblique.
    pub fn project(&self, a: &Matrix) -> Result<Matrix> {
        self.require_shape(a, "project")?;
        match self.kind {
            ManifoldKind::Euclidean => Ok(a.clone()),
            ManifoldKind::Stiefel => pgd_project_stiefel(a),
            ManifoldKind::Oblique => {
                normalize_columns(a).map_err(|e| Error::Projection(e.to_string()))
            }
        }
    }

    /// Cancels accumulated rounding drift on a point that is already close to
    /// the manifold.
    pub fn refeasibilize(&self, w: &Matrix) -> Result<Matrix> {
        self.require_shape(w, "refeasibilize")?;
        match self.kind {
            ManifoldKind::Euclidean => Ok(w.clone()),
            ManifoldKind::Stiefel => qf(w),
            ManifoldKind::Oblique => normalize_columns(w),
        }
    }

    /// A deterministic random point on the manifold.
    pub fn random_point(&self, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.kind {
            ManifoldKind::Euclidean => {
                Matrix::random_normal(self.n, self.p, 1.0 / (self.n as f64).sqrt(), &mut rng)
            }
            ManifoldKind::Stiefel => loop {
                // A Gaussian draw is full rank with probability one.
                let g = Matrix::random_normal(self.n, self.p, 1.0, &mut rng);
                if let Ok(q) = qf(&g) {
                    break q;
                }
            },
            ManifoldKind::Oblique => loop {
                let g = Matrix::random_normal(self.n, self.p, 1.0, &mut rng);
                if let Ok(q) = normalize_columns(&g) {
                    break q;
                }
            },
        }
    }

    /// Intrinsic dimension of the manifold.
    pub fn dim(&self) -> usize {
        let (n, p) = (self.n, self.p);
        match self.kind {
            ManifoldKind::Euclidean => n * p,
            ManifoldKind::Stiefel => n * p - p * (p + 1) / 2,
            ManifoldKind::Oblique => (n - 1) * p,
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.n, self.p)
    }
}

pub fn stiefel_defect(w: &Matrix) -> f64 {
    let gram = matmul_tn(w, w).expect("square gram");
    gram.sub(&Matrix::identity(w.cols()))
        .expect("same shape")
        .frobenius_norm()
}

fn normalize_columns(a: &Matrix) -> Result<Matrix> {
    let norms: Vec<f64> = (0..a.cols()).map(|j| a.column_norm(j)).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        return Err(Error::RankDeficient {
            column: j,
            norm: norms[j],
        });
    }
    let inv: Vec<f64> = norms.iter().map(|v| 1.0 / v).collect();
    a.scale_columns(&inv)
}

/// Nearest matrix with orthonormal columns in Frobenius norm: the polar
/// factor `U·Vᵀ` of `a = U·diag(s)·Vᵀ`.
pub fn pgd_project_stiefel(a: &Matrix) -> Result<Matrix> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::dim(
            "pgd_project_stiefel",
            format!("needs rows >= cols, got {n}x{p}"),
        ));
    }
    let svd = thin_svd(a, p)?;
    // Singular values from the Gram route are resolved to about sqrt(eps)
    // relative to the largest, so anything below that is treated as zero.
    let smallest = svd.s[p - 1];
    if smallest <= POLAR_RANK_TOL * svd.s[0] || smallest == 0.0 {
        return Err(Error::Projection(format!(
            "input is rank deficient (smallest singular value {smallest:e})"
        )));
    }
    matmul_nt(&svd.u, &svd.v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn stiefel_self_gradient_annihilates() {
        let m = Manifold::stiefel(5, 3).unwrap();
        let w = m.random_point(1);
        let t = m.tangent_project(&w, &w).unwrap();
        assert!(t.max_abs() < 1e-14);
    }

    #[test]
    fn stiefel_projection_single_column() {
        let m = Manifold::stiefel(2, 1).unwrap();
        let w = Matrix::column_vector(&[1.0, 0.0]);
        let g = Matrix::column_vector(&[0.7, -2.5]);
        let t = m.tangent_project(&w, &g).unwrap();
        assert_eq!(t.as_slice(), &[0.0, -2.5]);
    }

    #[test]
    fn euclidean_is_identity_and_addition() {
        let m = Manifold::euclidean(3, 2);
        let mut r = rng(2);
        let w = Matrix::random_normal(3, 2, 1.0, &mut r);
        let g = Matrix::random_normal(3, 2, 1.0, &mut r);
        assert_eq!(m.tangent_project(&w, &g).unwrap(), g);
        assert_eq!(m.retract(&w, &g).unwrap(), w.add(&g).unwrap());
        assert_eq!(m.dim(), 6);
    }

    #[test]
    fn tangent_input_is_unchanged() {
        let m = Manifold::stiefel(6, 3).unwrap();
        let w = m.random_point(4);
        let g = Matrix::random_normal(6, 3, 1.0, &mut rng(5));
        let t = m.tangent_project(&w, &g).unwrap();
        let tt = m.tangent_project(&w, &t).unwrap();
        assert!(tt.sub(&t).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn retraction_examples() {
        let m = Manifold::stiefel(2, 1).unwrap();
        let w = Matrix::column_vector(&[1.0, 0.0]);
        let xi = Matrix::column_vector(&[0.0, 1.0]);
        let out = m.retract(&w, &xi).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((out.get(0, 0) - h).abs() < 1e-15 && (out.get(1, 0) - h).abs() < 1e-15);

        for kind in [
            ManifoldKind::Euclidean,
            ManifoldKind::Stiefel,
            ManifoldKind::Oblique,
        ] {
            let m = Manifold::new(kind, 5, 2).unwrap();
            let w = m.random_point(9);
            let out = m.retract(&w, &Matrix::zeros(5, 2)).unwrap();
            assert!(out.sub(&w).unwrap().max_abs() < 1e-14, "{kind}");
        }
    }

    #[test]
    fn retraction_failure() {
        let m = Manifold::stiefel(2, 1).unwrap();
        let w = Matrix::column_vector(&[1.0, 0.0]);
        let xi = Matrix::column_vector(&[-1.0, 0.0]);
        assert!(matches!(m.retract(&w, &xi), Err(Error::Retraction(_))));
        let m = Manifold::oblique(2, 1).unwrap();
        assert!(matches!(m.retract(&w, &xi), Err(Error::Retraction(_))));
    }

    #[test]
    fn feasibility_measurements() {
        let m = Manifold::stiefel(4, 3).unwrap();
        let f = m.check_feasible(&Matrix::eye(4, 3), 1e-12).unwrap();
        assert_eq!(f.defect, 0.0);
        assert!(f.feasible);
        let f = m
            .check_feasible(&Matrix::eye(4, 3).scale(2.0), 1e-8)
            .unwrap();
        assert!((f.defect - 3.0 * 3f64.sqrt()).abs() < 1e-14);
        assert!(!f.feasible);
        assert!(m.check_feasible(&Matrix::eye(3, 3), 1e-8).is_err());
    }

    #[test]
    fn infeasible_base_point_is_rejected() {
        let m = Manifold::stiefel(3, 2).unwrap();
        let w = Matrix::eye(3, 2).scale(1.1);
        assert!(matches!(
            m.tangent_project(&w, &w),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn random_points() {
        let m = Manifold::stiefel(7, 3).unwrap();
        assert_eq!(m.random_point(42), m.random_point(42));
        assert!(m.defect(&m.random_point(42)) < 1e-12);
        let o = Manifold::oblique(7, 3).unwrap();
        assert!(o.defect(&o.random_point(1)) < 1e-12);
    }

    #[test]
    fn dimensions() {
        assert_eq!(Manifold::stiefel(4096, 1000).unwrap().dim(), 3_595_500);
        assert_eq!(Manifold::stiefel(6, 6).unwrap().dim(), 15);
        assert_eq!(Manifold::oblique(5, 3).unwrap().dim(), 12);
        assert!(Manifold::stiefel(2, 3).is_err());
    }

    #[test]
    fn pgd_projection_examples() {
        let w = Manifold::stiefel(5, 3).unwrap().random_point(3);
        assert!(pgd_project_stiefel(&w).unwrap().sub(&w).unwrap().max_abs() < 1e-10);
        let out = pgd_project_stiefel(&Matrix::eye(4, 2).scale(3.0)).unwrap();
        assert!(out.sub(&Matrix::eye(4, 2)).unwrap().max_abs() < 1e-12);
        let rank1 = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            pgd_project_stiefel(&rank1),
            Err(Error::Projection(_))
        ));
    }

    #[test]
    fn oblique_projection_removes_radial_part() {
        let m = Manifold::oblique(4, 2).unwrap();
        let w = m.random_point(8);
        let g = Matrix::random_normal(4, 2, 1.0, &mut rng(3));
        let t = m.tangent_project(&w, &g).unwrap();
        for j in 0..2 {
            let dot: f64 = (0..4).map(|i| w.get(i, j) * t.get(i, j)).sum();
            assert!(dot.abs() < 1e-14);
        }
    }
}
