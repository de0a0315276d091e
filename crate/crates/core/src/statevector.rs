//! Dense pure-state simulation for the embedding circuits.
//!
//! Conventions:
//! - every parametrised gate is `exp(-i * angle * G / 2)` with `G` one of
//!   `X`, `Y`, `Z` or `Z⊗Z`;
//! - qubit 0 is the least-significant bit of the basis index, so basis index
//!   `0b01` on two qubits is `|q1=0, q0=1⟩`.
//!
//! Gates are unitary, so the norm is never renormalised. [`Statevector::check_norm`]
//! reports drift beyond [`NORM_TOLERANCE`] as an error instead.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported register.
pub const MAX_QUBITS: usize = 24;

/// Allowed deviation of the Euclidean norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Single-qubit rotation axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// An `n`-qubit pure state stored as `2^n` dense amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// The all-zero computational basis state `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two and the norm 1.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        state.check_norm()?;
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn check_norm(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() < NORM_TOLERANCE {
            Ok(())
        } else {
            Err(Error::NormDrift(norm))
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.n_qubits {
            Ok(())
        } else {
            Err(Error::Index {
                index: qubit,
                n_qubits: self.n_qubits,
            })
        }
    }

    /// Applies the 2×2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << qubit;
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    /// Applies `exp(-i * angle * A / 2)` on `qubit` for `A = axis`.
    pub fn apply_rotation(&mut self, axis: Axis, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let half = 0.5 * angle;
        let (s, c) = half.sin_cos();
        let zero = Complex64::new(0.0, 0.0);
        let m = match axis {
            Axis::X => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            Axis::Y => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            Axis::Z => [
                [Complex64::new(c, -s), zero],
                [zero, Complex64::new(c, s)],
            ],
        };
        self.apply_single(qubit, m);
        Ok(())
    }

    pub fn apply_hadamard(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_single(qubit, [[h, h], [h, -h]]);
        Ok(())
    }

    /// Applies `exp(-i * angle * Z_p Z_q / 2)`: a phase `e^{-i angle/2}` where
    /// bits `p` and `q` agree and `e^{+i angle/2}` where they differ.
    pub fn apply_zz(&mut self, p: usize, q: usize, angle: f64) -> Result<()> {
        self.check_qubit(p)?;
        self.check_qubit(q)?;
        if p == q {
            return Err(Error::Argument(format!("ZZ needs two distinct qubits, got {p} twice")));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let same = Complex64::new(c, -s);
        let differ = Complex64::new(c, s);
        for (index, amp) in self.amplitudes.iter_mut().enumerate() {
            let parity = ((index >> p) ^ (index >> q)) & 1;
            *amp *= if parity == 0 { same } else { differ };
        }
        Ok(())
    }

    /// `⟨other|self⟩ = Σ conj(other_i) · self_i`.
    pub fn overlap(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        Ok(self.overlap_unchecked(other))
    }

    pub(crate) fn overlap_unchecked(&self, other: &Statevector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + b.conj() * a)
    }

    /// `|⟨other|self⟩|²`, clamped into `[0, 1]`.
    pub fn fidelity(&self, other: &Statevector) -> Result<f64> {
        self.overlap(other).map(fidelity_from_overlap)
    }

    pub(crate) fn fidelity_unchecked(&self, other: &Statevector) -> f64 {
        fidelity_from_overlap(self.overlap_unchecked(other))
    }
}

fn fidelity_from_overlap(overlap: Complex64) -> f64 {
    overlap.norm_sqr().clamp(0.0, 1.0)
}

/// `|0…0⟩` on `n_qubits` qubits.
pub fn zero_state(n_qubits: usize) -> Result<Statevector> {
    Statevector::zero_state(n_qubits)
}

pub fn overlap(a: &Statevector, b: &Statevector) -> Result<Complex64> {
    a.overlap(b)
}

pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    a.fidelity(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn assert_amps(state: &Statevector, expected: &[Complex64]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert_abs_diff_eq!(a.re, e.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, e.im, epsilon = 1e-12);
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_state_examples() {
        assert_amps(&zero_state(1).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_amps(&zero_state(2).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let big = zero_state(13).unwrap();
        assert_eq!(big.amplitudes().len(), 8192);
        assert_eq!(big.amplitudes()[0], c(1.0, 0.0));
        assert!(big.amplitudes()[1..].iter().all(|a| *a == c(0.0, 0.0)));
    }

    #[test]
    fn zero_state_rejects_out_of_range() {
        assert!(matches!(zero_state(0), Err(Error::Size(_))));
        assert!(matches!(zero_state(25), Err(Error::Size(_))));
    }

    #[test]
    fn rotation_examples() {
        let mut s = zero_state(1).unwrap();
        s.apply_rotation(Axis::X, 0, PI).unwrap();
        assert_amps(&s, &[c(0.0, 0.0), c(0.0, -1.0)]);

        let theta = 0.73;
        let mut s = zero_state(1).unwrap();
        s.apply_rotation(Axis::Z, 0, theta).unwrap();
        assert_amps(&s, &[Complex64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0)]);

        let mut s = zero_state(1).unwrap();
        s.apply_rotation(Axis::Y, 0, FRAC_PI_2).unwrap();
        assert_amps(&s, &[c(FRAC_PI_4.cos(), 0.0), c(FRAC_PI_4.sin(), 0.0)]);
    }

    #[test]
    fn rotation_rejects_bad_qubit() {
        let mut s = zero_state(2).unwrap();
        assert!(matches!(
            s.apply_rotation(Axis::X, 2, 1.0),
            Err(Error::Index { index: 2, n_qubits: 2 })
        ));
        assert!(s.apply_hadamard(5).is_err());
    }

    #[test]
    fn hadamard_is_involution() {
        let mut s = zero_state(1).unwrap();
        s.apply_hadamard(0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_amps(&s, &[c(r, 0.0), c(r, 0.0)]);

        let mut s = zero_state(3).unwrap();
        s.apply_rotation(Axis::Y, 1, 0.4).unwrap();
        s.apply_rotation(Axis::X, 2, 1.3).unwrap();
        let before = s.clone();
        s.apply_hadamard(1).unwrap();
        s.apply_hadamard(1).unwrap();
        assert_amps(&s, before.amplitudes());
    }

    #[test]
    fn zz_examples() {
        let theta = 1.1;
        let mut s = zero_state(2).unwrap();
        s.apply_zz(0, 1, theta).unwrap();
        assert_amps(
            &s,
            &[Complex64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );

        let mut s = zero_state(2).unwrap();
        s.apply_hadamard(0).unwrap();
        let before = s.clone();
        s.apply_zz(1, 0, 0.0).unwrap();
        assert_amps(&s, before.amplitudes());

        assert!(matches!(s.apply_zz(1, 1, 0.3), Err(Error::Argument(_))));
    }

    #[test]
    fn overlap_and_fidelity() {
        let zero = zero_state(1).unwrap();
        let mut one = zero_state(1).unwrap();
        one.apply_rotation(Axis::X, 0, PI).unwrap();
        assert_abs_diff_eq!(overlap(&one, &zero).unwrap().norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(overlap(&one, &one).unwrap().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-15);

        let mut half = zero_state(1).unwrap();
        half.apply_rotation(Axis::X, 0, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &half).unwrap(), 0.5, epsilon = 1e-12);

        let two = zero_state(2).unwrap();
        assert!(matches!(overlap(&zero, &two), Err(Error::Dimension { .. })));
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(Statevector::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
        assert!(matches!(
            Statevector::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NormDrift(_))
        ));
        let s = Statevector::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert_eq!(s.n_qubits(), 1);
    }
}
