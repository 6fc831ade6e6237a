//! Fixed gates and deterministic unitary constructions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QadError, Result};
use crate::qcore::types::{PureState, Unitary};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn hadamard() -> Unitary {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Unitary::new(DMatrix::from_row_slice(
        2,
        2,
        &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)],
    ))
    .expect("hadamard is unitary")
}

pub fn pauli_x() -> Unitary {
    Unitary::new(DMatrix::from_row_slice(
        2,
        2,
        &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
    ))
    .expect("pauli x is unitary")
}

/// `diag(1, e^{i phi})`.
pub fn phase(phi: f64) -> Unitary {
    Unitary::new(DMatrix::from_row_slice(
        2,
        2,
        &[c(1., 0.), c(0., 0.), c(0., 0.), Complex64::from_polar(1.0, phi)],
    ))
    .expect("phase gate is unitary")
}

/// Ancilla preparation `|0> -> (|0> + zeta |1>)/sqrt(2)` for unit-modulus
/// `zeta`; the second column is fixed so the whole matrix is unitary.
pub fn superpose_with_phase(zeta: Complex64) -> Result<Unitary> {
    if (zeta.norm() - 1.0).abs() > 1e-12 {
        return Err(QadError::precondition(
            "qcore",
            "superpose_with_phase",
            format!("|zeta| = {} but only unit-modulus phases keep the ancilla normalized", zeta.norm()),
        ));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sz = zeta * s;
    Unitary::new(DMatrix::from_row_slice(
        2,
        2,
        &[c(s, 0.), sz.conj(), sz, c(-s, 0.)],
    ))
}

/// SWAP on two registers of equal dimension `d`.
pub fn swap(d: usize) -> Unitary {
    let mut mat = DMatrix::<Complex64>::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            mat[(b * d + a, a * d + b)] = c(1., 0.);
        }
    }
    Unitary::new(mat).expect("swap is unitary")
}

/// A deterministic unitary whose first column is `first_column`.
///
/// Completed by Gram-Schmidt over the standard basis (with
/// re-orthogonalization), so equal inputs give byte-identical outputs.
pub fn complete_to_unitary(first_column: &PureState) -> Unitary {
    let d = first_column.dim();
    let mut cols: Vec<DVector<Complex64>> = vec![first_column.amps().clone()];
    for k in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = DVector::<Complex64>::zeros(d);
        v[k] = c(1., 0.);
        // two passes keep the basis orthogonal even for near-parallel candidates
        for _ in 0..2 {
            for col in &cols {
                let overlap = col.dotc(&v);
                v -= col * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-7 {
            cols.push(v / c(norm, 0.));
        }
    }
    assert_eq!(cols.len(), d, "Gram-Schmidt completion produced a rank-deficient basis");
    let mat = DMatrix::from_columns(&cols);
    Unitary::new(mat).expect("completed basis is unitary")
}

/// A deterministic unitary mapping `|0>` to the uniform superposition over
/// `m` levels. For `m = 2^k` this coincides (in everything measured) with
/// a layer of Hadamards; the construction covers arbitrary `m`.
pub fn uniform_superposition_unitary(m: usize) -> Unitary {
    let amp = c(1.0 / (m as f64).sqrt(), 0.0);
    let uniform = PureState::new(DVector::from_element(m, amp)).expect("uniform vector is unit");
    complete_to_unitary(&uniform)
}

/// Kraus operators of the depolarizing channel
/// `rho -> (1-p) rho + p 1/d`, built from the Heisenberg-Weyl basis.
pub fn depolarizing_kraus(d: usize, p: f64) -> Vec<DMatrix<Complex64>> {
    assert!((0.0..=1.0).contains(&p), "depolarizing strength must lie in [0,1]");
    let mut ops = Vec::with_capacity(d * d);
    let tau = 2.0 * std::f64::consts::PI / d as f64;
    for a in 0..d {
        for b in 0..d {
            // W_{ab} = X^a Z^b with X|j> = |j+1 mod d>, Z|j> = w^j |j>
            let mut w = DMatrix::<Complex64>::zeros(d, d);
            for j in 0..d {
                w[((j + a) % d, j)] = Complex64::from_polar(1.0, tau * (b * j) as f64);
            }
            let weight = if a == 0 && b == 0 {
                (1.0 - p + p / (d * d) as f64).sqrt()
            } else {
                (p / (d * d) as f64).sqrt()
            };
            ops.push(w * c(weight, 0.0));
        }
    }
    ops
}

/// Kraus operators of a channel that first applies `u` and then
/// depolarizes with strength `p`.
pub fn depolarized_unitary_kraus(u: &Unitary, p: f64) -> Vec<DMatrix<Complex64>> {
    depolarizing_kraus(u.dim(), p)
        .into_iter()
        .map(|w| w * u.mat())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::types::completeness_deviation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_superposition_first_column() {
        for m in [2usize, 3, 4, 6, 8] {
            let u = uniform_superposition_unitary(m);
            let col = u.first_column();
            for a in col.amps().iter() {
                assert_abs_diff_eq!(a.re, 1.0 / (m as f64).sqrt(), epsilon = 1e-12);
                assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn completion_is_deterministic() {
        let v = PureState::normalized(DVector::from_vec(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.7),
            Complex64::new(0.5, 0.0),
        ]))
        .unwrap();
        let a = complete_to_unitary(&v);
        let b = complete_to_unitary(&v);
        assert_eq!(a.mat(), b.mat());
    }

    #[test]
    fn completion_handles_basis_vector() {
        let u = complete_to_unitary(&PureState::basis(4, 2));
        assert_eq!(u.dim(), 4);
    }

    #[test]
    fn depolarizing_kraus_complete() {
        for p in [0.0, 0.3, 1.0] {
            let ops = depolarizing_kraus(3, p);
            assert!(completeness_deviation(&ops) < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn swap_exchanges_registers() {
        let s = swap(3);
        // |1,2> -> |2,1>
        let flat_in = 1 * 3 + 2;
        let flat_out = 2 * 3 + 1;
        assert_abs_diff_eq!(s.mat()[(flat_out, flat_in)].re, 1.0, epsilon = 1e-15);
    }
}
