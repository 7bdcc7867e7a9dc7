//! Replacing a fully-connected layer by a truncated SVD: two Stiefel-constrained
//! factors around a diagonal scale.

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, Matrix};
use crate::manifold::{Manifold, ManifoldKind};
use crate::network::layer::{LayerSpec, ParamState};
use crate::network::net::{NetworkSpec, Params};

/// How many singular triplets to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankSelection {
    /// Smallest rank whose cumulative squared singular values reach this
    /// percentage of `‖W‖²_F`.
    Energy(f64),
    Rank(usize),
}

/// `W ≈ U · diag(d) · Vᵀ` with `U` (`n₁ × p`) and `V` (`n₂ × p`) orthonormal.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    pub u: Matrix,
    pub d: Vec<f64>,
    pub v: Matrix,
    pub rank: usize,
}

impl LowRankFactors {
    pub fn reconstruct(&self) -> Matrix {
        crate::linalg::matmul_nt(&self.u.scale_columns(&self.d).expect("rank"), &self.v)
            .expect("rank")
    }

    /// Free parameters of the factored layer: each orthonormal factor counts
    /// `n·p − p(p−1)/2` and the diagonal counts `p`, for a total of
    /// `(n₁ + n₂ − p + 2)·p`.
    pub fn parameter_count(&self) -> usize {
        let p = self.rank;
        let orthonormal = |n: usize| n * p - p * (p - 1) / 2;
        orthonormal(self.u.rows()) + orthonormal(self.v.rows()) + self.d.len()
    }
}

/// Truncated SVD of an FC weight.
pub fn factorize_fc_lowrank(w: &Matrix, selection: RankSelection) -> Result<LowRankFactors> {
    let (n1, n2) = w.shape();
    let full = n1.min(n2);
    let rank = match selection {
        RankSelection::Rank(p) if (1..=full).contains(&p) => p,
        RankSelection::Rank(p) => {
            return Err(Error::Input(format!("rank {p} outside 1..={full}")));
        }
        RankSelection::Energy(rho) if rho > 0.0 && rho <= 100.0 => {
            let s = thin_svd(w, full)?.s;
            energy_rank(&s, rho)
        }
        RankSelection::Energy(rho) => {
            return Err(Error::Input(format!("energy {rho} must lie in (0, 100]")));
        }
    };
    let svd = thin_svd(w, rank)?;
    Ok(LowRankFactors {
        u: svd.u,
        d: svd.s,
        v: svd.v,
        rank,
    })
}

/// Smallest `p` with `Σ_{i<p} sᵢ² ≥ (rho/100) Σ sᵢ²`.
fn energy_rank(s: &[f64], rho: f64) -> usize {
    let total: f64 = s.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 1;
    }
    let target = rho / 100.0 * total;
    let mut acc = 0.0;
    for (i, v) in s.iter().enumerate() {
        acc += v * v;
        // relative slack so that rho = 100 is reached despite rounding
        if acc >= target * (1.0 - 1e-12) {
            return i + 1;
        }
    }
    s.len()
}

/// Result of replacing one layer by its factorization.
#[derive(Debug, Clone)]
pub struct Surgery {
    pub spec: NetworkSpec,
    pub params: Params,
    pub factors: LowRankFactors,
}

impl NetworkSpec {
    /// Replaces the fully-connected layer at `index` with
    /// `FC(U, Stiefel) → DiagonalScale(d) → TransposedFc(V, Stiefel, bias)`,
    /// which computes `V·diag(d)·Uᵀx + b`. Momentum buffers of the returned
    /// parameters are zero.
    pub fn factorize_layer(
        &self,
        params: &Params,
        index: usize,
        selection: RankSelection,
    ) -> Result<Surgery> {
        let (in_dim, out_dim, bias) = match self.layers.get(index) {
            Some(&LayerSpec::FullyConnected {
                in_dim,
                out_dim,
                bias,
                ..
            }) => (in_dim, out_dim, bias),
            _ => {
                return Err(Error::Input(format!(
                    "layer {index} is not a fully-connected layer"
                )))
            }
        };
        if self.layers.iter().any(|l| l.tied_to() == Some(index)) {
            return Err(Error::Input(format!(
                "layer {index} is shared by a tied layer and cannot be factorized"
            )));
        }
        let state = params
            .layer(index)
            .ok_or_else(|| Error::Usage(format!("no parameters for layer {index}")))?;
        let factors = factorize_fc_lowrank(&state.weights, selection)?;
        let p = factors.rank;

        let mut layers = Vec::with_capacity(self.layers.len() + 2);
        let mut slots = Vec::with_capacity(self.layers.len() + 2);
        for (k, (layer, slot)) in self
            .layers
            .iter()
            .zip(params.clone().into_layers())
            .enumerate()
        {
            if k == index {
                layers.push(LayerSpec::fc(in_dim, p, ManifoldKind::Stiefel, false));
                slots.push(Some(ParamState::new(
                    factors.u.clone(),
                    Manifold::stiefel(in_dim, p)?,
                    None,
                )?));
                layers.push(LayerSpec::DiagonalScale {
                    dim: p,
                    bias: false,
                });
                slots.push(Some(ParamState::new(
                    Matrix::column_vector(&factors.d),
                    Manifold::euclidean(p, 1),
                    None,
                )?));
                layers.push(LayerSpec::transposed(
                    p,
                    out_dim,
                    ManifoldKind::Stiefel,
                    bias,
                ));
                slots.push(Some(ParamState::new(
                    factors.v.clone(),
                    Manifold::stiefel(out_dim, p)?,
                    state.bias.clone(),
                )?));
            } else {
                let mut layer = layer.clone();
                if let LayerSpec::TransposedFc {
                    tied_to: Some(src), ..
                } = &mut layer
                {
                    if *src > index {
                        *src += 2;
                    }
                }
                layers.push(layer);
                slots.push(slot.map(|mut st| {
                    st.reset_momentum();
                    st
                }));
            }
        }
        let spec = NetworkSpec::new(layers, self.loss)?;
        Ok(Surgery {
            spec,
            params: Params::new(slots),
            factors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn explicit_rank_on_diagonal() {
        let mut w = Matrix::zeros(4, 3);
        for (i, v) in [5.0, 3.0, 1.0].iter().enumerate() {
            w.set(i, i, *v);
        }
        let f = factorize_fc_lowrank(&w, RankSelection::Rank(2)).unwrap();
        let err = f.reconstruct().sub(&w).unwrap().frobenius_norm();
        assert!((err - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_energy_is_exact() {
        let w = Matrix::random_normal(6, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(2));
        let f = factorize_fc_lowrank(&w, RankSelection::Energy(100.0)).unwrap();
        assert_eq!(f.rank, 4);
        assert!(f.reconstruct().sub(&w).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn energy_rank_selection() {
        // squared energies 25, 9, 1 of 35
        let s = [5.0, 3.0, 1.0];
        assert_eq!(energy_rank(&s, 50.0), 1);
        assert_eq!(energy_rank(&s, 71.0), 1);
        assert_eq!(energy_rank(&s, 72.0), 2);
        assert_eq!(energy_rank(&s, 100.0), 3);
    }

    #[test]
    fn invalid_selection() {
        let w = Matrix::identity(3);
        assert!(factorize_fc_lowrank(&w, RankSelection::Energy(0.0)).is_err());
        assert!(factorize_fc_lowrank(&w, RankSelection::Energy(-5.0)).is_err());
        assert!(factorize_fc_lowrank(&w, RankSelection::Rank(4)).is_err());
    }

    #[test]
    fn parameter_count_formula() {
        let w = Matrix::random_normal(64, 48, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        let f = factorize_fc_lowrank(&w, RankSelection::Rank(8)).unwrap();
        assert_eq!(f.parameter_count(), 848);
    }
}
