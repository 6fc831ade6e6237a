//! Seeded Haar-random states and unitaries (Ginibre + QR with phase fixing).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qcore::types::{PureState, Unitary};

/// The crate-standard deterministic RNG.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// A Haar-random pure state of dimension `dim`.
pub fn haar_state(dim: usize, rng: &mut impl Rng) -> PureState {
    loop {
        let v = DVector::from_fn(dim, |_, _| gaussian_complex(rng));
        if let Ok(state) = PureState::normalized(v) {
            return state;
        }
    }
}

/// A Haar-random unitary of dimension `dim`.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> Unitary {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix the column phases to the sign of R's diagonal so the distribution
    // is Haar rather than QR-convention dependent.
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Unitary::new(q).expect("QR of a Ginibre matrix is unitary")
}
