//! Named kets and projectors: spin-half states, the two-particle singlet,
//! and position-interval projectors on a discrete grid.
//!
//! Phase convention: |x±⟩ = (|z+⟩ ± |z−⟩)/√2 and |y±⟩ = (|z+⟩ ± i|z−⟩)/√2.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operator::{Ket, Operator, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("unknown spin axis {other:?}; expected x, y or z")),
        }
    }
}

/// Spin-half eigenket of S_axis with eigenvalue +1/2 (`up`) or −1/2.
pub fn spin_ket(axis: Axis, up: bool) -> Ket {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if up { 1.0 } else { -1.0 };
    let amps = match axis {
        Axis::Z if up => vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        Axis::Z => vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        Axis::X => vec![C64::new(s, 0.0), C64::new(sign * s, 0.0)],
        Axis::Y => vec![C64::new(s, 0.0), C64::new(0.0, sign * s)],
    };
    Ket::from_vector(amps.into())
}

/// The pair ([axis+], [axis−]).
pub fn spin_projectors(axis: Axis) -> (Operator, Operator) {
    let dy = |up| Operator::dyad(&spin_ket(axis, up), 1e-12).expect("spin kets are normalized");
    (dy(true), dy(false))
}

/// (|z+, z−⟩ − |z−, z+⟩)/√2 on 2⊗2.
pub fn singlet() -> Ket {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ket::from_real(&[0.0, s, -s, 0.0]).expect("four amplitudes")
}

/// Diagonal 0/1 projector selecting grid points with `lo ≤ x ≤ hi`.
pub fn interval_projector(grid: &[f64], lo: f64, hi: f64) -> Result<Operator> {
    if grid.is_empty() {
        return Err(Error::Dim("position grid is empty".into()));
    }
    if lo > hi {
        return Err(Error::Dim(format!(
            "interval bounds out of order: lo = {lo} > hi = {hi}"
        )));
    }
    let mask: Vec<bool> = grid.iter().map(|&x| lo <= x && x <= hi).collect();
    Ok(Operator::diagonal_projector(&mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutes;

    const TOL: f64 = 1e-10;

    #[test]
    fn spin_pairs_form_decompositions() {
        for axis in Axis::ALL {
            let (p, m) = spin_projectors(axis);
            assert!((&p + &m).approx_eq(&Operator::identity(2), 1e-15));
            assert!((&p * &m).is_zero(1e-15));
        }
    }

    #[test]
    fn z_and_x_do_not_commute() {
        let (zp, zm) = spin_projectors(Axis::Z);
        let (xp, xm) = spin_projectors(Axis::X);
        assert!(commutes(&zp, &zm, TOL).unwrap());
        for z in [&zp, &zm] {
            for x in [&xp, &xm] {
                assert!(!commutes(z, x, TOL).unwrap());
            }
        }
    }

    #[test]
    fn singlet_anti_correlated_in_z() {
        let s = singlet();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        let (zp, _) = spin_projectors(Axis::Z);
        let both_up = zp.kron(&zp);
        assert!(both_up.expectation(&s).norm() < 1e-15);
    }

    #[test]
    fn singlet_incompatible_with_local_projector() {
        let dy = Operator::dyad(&singlet(), 1e-12).unwrap();
        for axis in Axis::ALL {
            let (p, _) = spin_projectors(axis);
            let local = p.kron(&Operator::identity(2));
            assert!(!commutes(&dy, &local, TOL).unwrap());
            let local_b = Operator::identity(2).kron(&p);
            assert!(!commutes(&dy, &local_b, TOL).unwrap());
        }
    }

    #[test]
    fn interval_whole_and_empty() {
        let grid = [0.0, 0.5, 1.0, 1.5];
        let all = interval_projector(&grid, -1.0, 2.0).unwrap();
        assert!(all.approx_eq(&Operator::identity(4), 0.0));
        let none = interval_projector(&grid, 5.0, 6.0).unwrap();
        assert!(none.is_zero(0.0));
        assert!(interval_projector(&[], 0.0, 1.0).is_err());
    }

    #[test]
    fn interval_endpoints_are_inclusive() {
        let x = interval_projector(&[0.0, 1.0, 2.0], 1.0, 2.0).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| x.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn straddling_packet_does_not_commute() {
        let grid = [0.0, 1.0, 2.0, 3.0];
        let x = interval_projector(&grid, 0.0, 1.5).unwrap();
        let psi = Ket::from_real(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        let p = Operator::dyad(&psi, 1e-12).unwrap();
        assert!(!commutes(&p, &x, TOL).unwrap());

        let inside = Ket::from_real(&[0.6, 0.8, 0.0, 0.0]).unwrap();
        let p = Operator::dyad(&inside, 1e-12).unwrap();
        assert!(commutes(&p, &x, TOL).unwrap());
    }
}
