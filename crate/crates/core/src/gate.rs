//! The excitation-conserving two-qubit fSim gate.
//!
//! Matrices act on the ordered pair `(i, j)` in the basis
//! `{|00⟩, |01⟩, |10⟩, |11⟩}` where the left digit is qubit `i`. Column 2 is
//! "photon on `i`", column 1 is "photon on `j`", so entry `[1][2]` is the
//! amplitude for a photon hopping from `i` to `j` and carries `e^{+iβ}`.

use num_complex::Complex;

use crate::scalar::{cis, cone, czero, Real};

/// Dense 4×4 complex matrix, row-major.
pub type Gate4<T> = [[Complex<T>; 4]; 4];

/// fSim angles in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FsimParams<T> {
    pub theta: T,
    pub phi: T,
    pub beta: T,
    pub gamma: T,
    pub alpha: T,
}

impl<T: Real> FsimParams<T> {
    pub fn new(theta: T, phi: T) -> Self {
        FsimParams {
            theta,
            phi,
            beta: T::zero(),
            gamma: T::zero(),
            alpha: T::zero(),
        }
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_single_qubit_phases(mut self, gamma: T, alpha: T) -> Self {
        self.gamma = gamma;
        self.alpha = alpha;
        self
    }

    pub fn is_finite(&self) -> bool {
        [self.theta, self.phi, self.beta, self.gamma, self.alpha]
            .iter()
            .all(|v| v.is_finite())
    }

    /// The four nontrivial entries in the form the sector engine consumes.
    pub fn entries(&self) -> FsimEntries<T> {
        let (s, c) = self.theta.sin_cos();
        let i = Complex::new(T::zero(), T::one());
        let two = T::lit(2.0);
        FsimEntries {
            stay_j: cis(self.gamma - self.alpha) * c,
            hop_ij: i * cis(self.gamma + self.beta) * s,
            hop_ji: i * cis(self.gamma - self.beta) * s,
            stay_i: cis(self.gamma + self.alpha) * c,
            both: cis(two * self.gamma + self.phi),
        }
    }
}

/// Nonzero entries of an fSim matrix outside the `|00⟩` corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FsimEntries<T> {
    /// `⟨01|U|01⟩`: photon stays on `j`.
    pub stay_j: Complex<T>,
    /// `⟨01|U|10⟩`: photon hops `i → j`.
    pub hop_ij: Complex<T>,
    /// `⟨10|U|01⟩`: photon hops `j → i`.
    pub hop_ji: Complex<T>,
    /// `⟨10|U|10⟩`: photon stays on `i`.
    pub stay_i: Complex<T>,
    /// `⟨11|U|11⟩`.
    pub both: Complex<T>,
}

pub fn fsim_matrix<T: Real>(p: &FsimParams<T>) -> Gate4<T> {
    let e = p.entries();
    let z = czero();
    [
        [cone(), z, z, z],
        [z, e.stay_j, e.hop_ij, z],
        [z, e.hop_ji, e.stay_i, z],
        [z, z, z, e.both],
    ]
}

pub fn identity4<T: Real>() -> Gate4<T> {
    let mut m = [[czero(); 4]; 4];
    for (r, row) in m.iter_mut().enumerate() {
        row[r] = cone();
    }
    m
}

pub fn matmul4<T: Real>(a: &Gate4<T>, b: &Gate4<T>) -> Gate4<T> {
    let mut m = [[czero(); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] = (0..4)
                .map(|k| a[r][k] * b[k][c])
                .fold(czero(), |x, y| x + y);
        }
    }
    m
}

pub fn adjoint4<T: Real>(a: &Gate4<T>) -> Gate4<T> {
    let mut m = [[czero(); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] = a[c][r].conj();
        }
    }
    m
}

pub fn trace4<T: Real>(a: &Gate4<T>) -> Complex<T> {
    (0..4).map(|k| a[k][k]).fold(czero(), |x, y| x + y)
}

/// Largest elementwise modulus of `a − b`.
pub fn max_abs_diff4<T: Real>(a: &Gate4<T>, b: &Gate4<T>) -> T {
    let mut worst = T::zero();
    for r in 0..4 {
        for c in 0..4 {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}

/// Integer matrix power by repeated squaring.
pub fn matpow4<T: Real>(a: &Gate4<T>, mut n: u32) -> Gate4<T> {
    let mut acc = identity4();
    let mut base = *a;
    while n > 0 {
        if n & 1 == 1 {
            acc = matmul4(&acc, &base);
        }
        base = matmul4(&base, &base);
        n >>= 1;
    }
    acc
}
