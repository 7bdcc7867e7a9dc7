//! Tangent projection, qf retraction and polar projection on St(8, 3).
//!
//!     cargo run --example stiefel_basics

use gbp::linalg::{matmul_tn, Matrix};
use gbp::{Manifold, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let m = Manifold::stiefel(8, 3)?;
    let w = m.random_point(42);
    println!("{m}: intrinsic dimension {}", m.dim());
    println!("defect of a random point      {:.2e}", m.defect(&w));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = Matrix::random_normal(8, 3, 1.0, &mut rng);
    let xi = m.tangent_project(&w, &g)?;
    // wᵀξ is skew-symmetric for tangent ξ
    let a = matmul_tn(&w, &xi)?;
    let skew = a.add(&a.transpose())?.frobenius_norm();
    println!("‖wᵀξ + ξᵀw‖                   {skew:.2e}");
    println!(
        "projection is idempotent      {:.2e}",
        m.tangent_project(&w, &xi)?.sub(&xi)?.frobenius_norm()
    );

    for t in [1.0, 1e-1, 1e-2, 1e-3] {
        let step = xi.scale(t);
        let r = m.retract(&w, &step)?;
        let first_order = r.sub(&w.add(&step)?)?.frobenius_norm();
        println!(
            "t = {t:<6} defect {:.2e}   ‖Υ(tξ) − (w + tξ)‖ = {first_order:.3e}",
            m.defect(&r)
        );
    }

    let off = w.add(&g.scale(0.3))?;
    let p = m.project(&off)?;
    println!(
        "polar projection of a perturbed point: defect {:.2e}",
        m.defect(&p)
    );
    Ok(())
}
