//! Unit reduction in concrete involutive orders.
//!
//! Supported rings: `M_n(Z)` with the transpose involution, and quadratic
//! orders of discriminant `D` (identity involution for `D > 0`, conjugation
//! for `D < 0`). For a symmetric positive definite element `q`, a unit `u`
//! is found so that `u^dag q u` has all entries bounded by a ring constant
//! times `Nm(q)`:
//!
//! - matrix rings reduce the positive definite Gram `q` by exact LLL
//!   (`delta = 99/100`) followed by size reduction;
//! - real quadratic orders balance the two embeddings by a power of the
//!   fundamental unit, computed from the continued fraction of the surd;
//! - imaginary quadratic orders have finite unit groups, searched directly.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::matrix::ExactMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EndredError {
    /// Discriminants must be non-square integers congruent to 0 or 1 mod 4.
    BadDiscriminant(i64),
    BadRingSize(usize),
    NotSymmetricPositive,
    CoordLength { expected: usize, got: usize },
    RingMismatch,
    /// Fundamental unit search exceeded the desk-scale cap.
    UnitSearchExceeded { d: i64 },
    BadDescriptor(String),
}

impl fmt::Display for EndredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndredError::BadDiscriminant(d) => {
                write!(f, "bad discriminant {d}: must be a non-square = 0, 1 mod 4")
            }
            EndredError::BadRingSize(n) => write!(f, "bad matrix ring size {n}"),
            EndredError::NotSymmetricPositive => {
                write!(f, "element is not symmetric positive definite")
            }
            EndredError::CoordLength { expected, got } => {
                write!(f, "expected {expected} coordinates, got {got}")
            }
            EndredError::RingMismatch => write!(f, "elements belong to different rings"),
            EndredError::UnitSearchExceeded { d } => {
                write!(f, "fundamental unit search for D={d} exceeded the cap")
            }
            EndredError::BadDescriptor(msg) => write!(f, "bad ring descriptor: {msg}"),
        }
    }
}

impl std::error::Error for EndredError {}

/// A supported involutive order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EndRingDesc {
    /// `M_n(Z)` with the transpose involution; `rho` is the inclusion.
    MatrixRing { n: usize },
    /// The quadratic order of discriminant `D`, with basis `(1, omega)`,
    /// `omega = sqrt(D/4)` for even `D` and `(1 + sqrt(D))/2` for odd `D`.
    QuadraticOrder { d: i64 },
}

impl EndRingDesc {
    pub fn matrix_ring(n: usize) -> Result<Self, EndredError> {
        if n == 0 {
            return Err(EndredError::BadRingSize(n));
        }
        Ok(EndRingDesc::MatrixRing { n })
    }

    pub fn quadratic_order(d: i64) -> Result<Self, EndredError> {
        let r = d.rem_euclid(4);
        if r != 0 && r != 1 {
            return Err(EndredError::BadDiscriminant(d));
        }
        if d >= 0 {
            let s = (d as f64).sqrt().round() as i64;
            if s * s == d {
                return Err(EndredError::BadDiscriminant(d));
            }
        }
        Ok(EndRingDesc::QuadraticOrder { d })
    }

    /// Dimension `N` of the fixed faithful integral representation.
    pub fn rho_dim(&self) -> usize {
        match self {
            EndRingDesc::MatrixRing { n } => *n,
            EndRingDesc::QuadraticOrder { .. } => 2,
        }
    }

    /// Number of coordinates of an element.
    pub fn coord_len(&self) -> usize {
        match self {
            EndRingDesc::MatrixRing { n } => n * n,
            EndRingDesc::QuadraticOrder { .. } => 2,
        }
    }

    /// Parses `{"kind":"matrix","n":2}` or `{"kind":"quadratic","D":8}`.
    pub fn from_json(v: &serde_json::Value) -> Result<Self, EndredError> {
        let kind = v["kind"]
            .as_str()
            .ok_or_else(|| EndredError::BadDescriptor("missing \"kind\"".into()))?;
        match kind {
            "matrix" => {
                let n = v["n"]
                    .as_u64()
                    .ok_or_else(|| EndredError::BadDescriptor("missing \"n\"".into()))?;
                EndRingDesc::matrix_ring(n as usize)
            }
            "quadratic" => {
                let d = v["D"]
                    .as_i64()
                    .ok_or_else(|| EndredError::BadDescriptor("missing \"D\"".into()))?;
                EndRingDesc::quadratic_order(d)
            }
            other => Err(EndredError::BadDescriptor(format!("unknown kind {other:?}"))),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            EndRingDesc::MatrixRing { n } => serde_json::json!({"kind": "matrix", "n": n}),
            EndRingDesc::QuadraticOrder { d } => serde_json::json!({"kind": "quadratic", "D": d}),
        }
    }
}

/// An element of a supported order, stored as integral coordinates in the
/// fixed basis: row-major matrix entries, or `(a, b)` for `a + b omega`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingElem {
    ring: EndRingDesc,
    coords: Vec<BigInt>,
}

impl RingElem {
    pub fn new(ring: EndRingDesc, coords: Vec<BigInt>) -> Result<Self, EndredError> {
        if coords.len() != ring.coord_len() {
            return Err(EndredError::CoordLength {
                expected: ring.coord_len(),
                got: coords.len(),
            });
        }
        Ok(RingElem { ring, coords })
    }

    pub fn from_i64(ring: EndRingDesc, coords: &[i64]) -> Result<Self, EndredError> {
        RingElem::new(ring, coords.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn one(ring: EndRingDesc) -> Self {
        let coords = match &ring {
            EndRingDesc::MatrixRing { n } => {
                let mut c = vec![BigInt::zero(); n * n];
                for i in 0..*n {
                    c[i * n + i] = BigInt::one();
                }
                c
            }
            EndRingDesc::QuadraticOrder { .. } => vec![BigInt::one(), BigInt::zero()],
        };
        RingElem { ring, coords }
    }

    pub fn ring(&self) -> &EndRingDesc {
        &self.ring
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    /// The fixed faithful integral representation `rho`: the matrix itself,
    /// or the 2x2 regular representation for quadratic orders.
    pub fn regular_rep(&self) -> ExactMatrix {
        match &self.ring {
            EndRingDesc::MatrixRing { n } => {
                let rows: Vec<Vec<BigInt>> = (0..*n)
                    .map(|i| self.coords[i * n..(i + 1) * n].to_vec())
                    .collect();
                ExactMatrix::from_bigint_rows(&rows)
            }
            EndRingDesc::QuadraticOrder { d } => {
                let (a, b) = (&self.coords[0], &self.coords[1]);
                if d.rem_euclid(4) == 0 {
                    // omega^2 = D/4: rep of a + b omega is [[a, (D/4) b], [b, a]].
                    let m = BigInt::from(d / 4);
                    ExactMatrix::from_bigint_rows(&[
                        vec![a.clone(), &m * b],
                        vec![b.clone(), a.clone()],
                    ])
                } else {
                    // omega^2 = omega + (D-1)/4.
                    let c = BigInt::from((d - 1) / 4);
                    ExactMatrix::from_bigint_rows(&[
                        vec![a.clone(), &c * b],
                        vec![b.clone(), a + b],
                    ])
                }
            }
        }
    }

    /// `Nm(x) = det rho(x)`.
    pub fn norm(&self) -> BigInt {
        self.regular_rep()
            .det()
            .expect("square")
            .to_bigint()
            .expect("integral")
    }

    /// The involution: transpose for matrix rings, identity for real
    /// quadratic orders, conjugation for imaginary ones.
    pub fn involution(&self) -> RingElem {
        match &self.ring {
            EndRingDesc::MatrixRing { n } => {
                let mut c = vec![BigInt::zero(); n * n];
                for i in 0..*n {
                    for j in 0..*n {
                        c[j * n + i] = self.coords[i * n + j].clone();
                    }
                }
                RingElem {
                    ring: self.ring.clone(),
                    coords: c,
                }
            }
            EndRingDesc::QuadraticOrder { d } => {
                if *d > 0 {
                    self.clone()
                } else {
                    self.conjugate()
                }
            }
        }
    }

    /// Quadratic conjugation `a + b omega -> a + b conj(omega)`.
    pub fn conjugate(&self) -> RingElem {
        let EndRingDesc::QuadraticOrder { d } = &self.ring else {
            panic!("conjugate is only defined on quadratic orders");
        };
        let (a, b) = (&self.coords[0], &self.coords[1]);
        let coords = if d.rem_euclid(4) == 0 {
            vec![a.clone(), -b]
        } else {
            // conj((1+sqrt(D))/2) = 1 - (1+sqrt(D))/2
            vec![a + b, -b]
        };
        RingElem {
            ring: self.ring.clone(),
            coords,
        }
    }

    pub fn mul(&self, rhs: &RingElem) -> Result<RingElem, EndredError> {
        if self.ring != rhs.ring {
            return Err(EndredError::RingMismatch);
        }
        let coords = match &self.ring {
            EndRingDesc::MatrixRing { n } => {
                let n = *n;
                let mut c = vec![BigInt::zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = BigInt::zero();
                        for k in 0..n {
                            acc += &self.coords[i * n + k] * &rhs.coords[k * n + j];
                        }
                        c[i * n + j] = acc;
                    }
                }
                c
            }
            EndRingDesc::QuadraticOrder { d } => {
                let (a1, b1) = (&self.coords[0], &self.coords[1]);
                let (a2, b2) = (&rhs.coords[0], &rhs.coords[1]);
                if d.rem_euclid(4) == 0 {
                    let m = BigInt::from(d / 4);
                    vec![a1 * a2 + &m * b1 * b2, a1 * b2 + a2 * b1]
                } else {
                    let c = BigInt::from((d - 1) / 4);
                    vec![a1 * a2 + &c * b1 * b2, a1 * b2 + a2 * b1 + b1 * b2]
                }
            }
        };
        Ok(RingElem {
            ring: self.ring.clone(),
            coords,
        })
    }

    /// Coordinate height: the largest absolute coordinate value.
    pub fn height(&self) -> BigInt {
        self.coords
            .iter()
            .map(|x| x.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// The two real-embedding components `(x, y)` meaning `x + y sqrt(r)`
    /// up to a positive scale, with `r` the shared radicand.
    fn embedding(&self, positive_root: bool) -> (BigInt, BigInt, BigInt) {
        let EndRingDesc::QuadraticOrder { d } = &self.ring else {
            panic!("embeddings are only defined on quadratic orders");
        };
        assert!(*d > 0, "real embeddings need D > 0");
        let (a, b) = (&self.coords[0], &self.coords[1]);
        let sgn = if positive_root { 1 } else { -1 };
        if d.rem_euclid(4) == 0 {
            (a.clone(), BigInt::from(sgn) * b, BigInt::from(d / 4))
        } else {
            // 2(a + b(1 +- sqrt(D))/2) = (2a + b) +- b sqrt(D)
            (
                BigInt::from(2) * a + b,
                BigInt::from(sgn) * b,
                BigInt::from(*d),
            )
        }
    }
}

/// Exact sign of `x + y sqrt(r)` for non-square `r > 0`.
fn surd_sign(x: &BigInt, y: &BigInt, r: &BigInt) -> i8 {
    if y.is_zero() {
        return sign_of(x);
    }
    if x.is_zero() {
        return sign_of(y);
    }
    match (x.is_positive(), y.is_positive()) {
        (true, true) => 1,
        (false, false) => -1,
        (true, false) => sign_of(&(x * x - y * y * r)),
        (false, true) => sign_of(&(y * y * r - x * x)),
    }
}

fn sign_of(x: &BigInt) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Compares two surds over the same radicand: sign of `lhs - rhs`.
fn surd_cmp(lhs: &(BigInt, BigInt, BigInt), rhs: &(BigInt, BigInt, BigInt)) -> i8 {
    assert_eq!(lhs.2, rhs.2, "radicand mismatch");
    surd_sign(&(&lhs.0 - &rhs.0), &(&lhs.1 - &rhs.1), &lhs.2)
}

fn surd_mul(lhs: &(BigInt, BigInt, BigInt), rhs: &(BigInt, BigInt, BigInt)) -> (BigInt, BigInt, BigInt) {
    assert_eq!(lhs.2, rhs.2, "radicand mismatch");
    (
        &lhs.0 * &rhs.0 + &lhs.1 * &rhs.1 * &lhs.2,
        &lhs.0 * &rhs.1 + &lhs.1 * &rhs.0,
        lhs.2.clone(),
    )
}

/// Whether `q` is fixed by the involution and positive definite.
pub fn is_symmetric_positive(q: &RingElem) -> bool {
    match q.ring() {
        EndRingDesc::MatrixRing { n } => {
            if q.involution() != *q {
                return false;
            }
            // Exact leading-principal-minor test.
            let rep = q.regular_rep();
            for k in 1..=*n {
                let mut sub = ExactMatrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        sub[(i, j)] = rep[(i, j)].clone();
                    }
                }
                if !sub.det().expect("square").is_positive() {
                    return false;
                }
            }
            true
        }
        EndRingDesc::QuadraticOrder { d } => {
            if *d > 0 {
                let plus = q.embedding(true);
                let minus = q.embedding(false);
                surd_sign(&plus.0, &plus.1, &plus.2) > 0
                    && surd_sign(&minus.0, &minus.1, &minus.2) > 0
            } else {
                // q = conj(q) forces q rational; positive means a > 0.
                q.coords()[1].is_zero() && q.coords()[0].is_positive()
            }
        }
    }
}

fn isqrt(n: &BigInt) -> BigInt {
    assert!(!n.is_negative());
    n.sqrt()
}

/// Fundamental unit of the real quadratic order of discriminant `D`, via the
/// continued fraction of the generating surd. Verified to have norm +-1.
pub fn fundamental_unit(d: i64) -> Result<RingElem, EndredError> {
    let ring = EndRingDesc::quadratic_order(d)?;
    if d <= 0 {
        return Err(EndredError::BadDiscriminant(d));
    }
    if d % 4 == 0 {
        // Continued fraction of sqrt(m), m = D/4: the first convergent p/q
        // with p^2 - m q^2 = +-1 is the fundamental unit p + q sqrt(m).
        let m = BigInt::from(d / 4);
        let a0 = isqrt(&m);
        let (mut p_prev, mut p) = (BigInt::one(), a0.clone());
        let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
        // Surd state (P_k, Q_k) for the tail after a_0.
        let mut pp = a0.clone();
        let mut qq = &m - &a0 * &a0;
        for _ in 0..100_000 {
            if (&p * &p - &m * &q * &q).abs().is_one() {
                return RingElem::new(ring, vec![p, q]);
            }
            let a = (&pp + &a0).div_floor(&qq);
            let np = &a * &p + &p_prev;
            let nq = &a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, np);
            q_prev = std::mem::replace(&mut q, nq);
            let npp = &a * &qq - &pp;
            qq = (&m - &npp * &npp) / &qq;
            pp = npp;
        }
        Err(EndredError::UnitSearchExceeded { d })
    } else {
        // Minimal y with D y^2 +- 4 a perfect square gives the fundamental
        // solution of x^2 - D y^2 = +-4; the unit is (x + y sqrt(D))/2, in
        // coordinates ((x - y)/2, y).
        let dd = BigInt::from(d);
        let cap = BigInt::from(2_000_000u64);
        let mut y = BigInt::one();
        while y <= cap {
            let dy2 = &dd * &y * &y;
            for delta in [-4i64, 4] {
                let t = &dy2 + BigInt::from(delta);
                if t.is_negative() {
                    continue;
                }
                let x = isqrt(&t);
                if &x * &x == t {
                    let a = (&x - &y) / BigInt::from(2);
                    return RingElem::new(ring, vec![a, y]);
                }
            }
            y += 1;
        }
        Err(EndredError::UnitSearchExceeded { d })
    }
}

/// Inverse of a unit (norm +-1): `u^{-1} = Nm(u) * conj(u)`.
fn unit_inverse(u: &RingElem) -> RingElem {
    let nm = u.norm();
    assert!(nm.abs().is_one(), "not a unit");
    let conj = u.conjugate();
    if nm.is_one() {
        conj
    } else {
        RingElem {
            ring: conj.ring.clone(),
            coords: conj.coords.iter().map(|c| -c).collect(),
        }
    }
}

/// Frozen per-ring entry-bound constants `c_ring`, calibrated once on the
/// seeded corpus in the test suite: `max entry of q_reduced <= c_ring Nm(q)`.
pub fn calibrated_c_ring(ring: &EndRingDesc) -> Option<u64> {
    match ring {
        EndRingDesc::MatrixRing { n: 2 } => Some(2),
        EndRingDesc::MatrixRing { n: 3 } => Some(8),
        EndRingDesc::MatrixRing { n: 4 } => Some(24),
        EndRingDesc::MatrixRing { .. } => None,
        EndRingDesc::QuadraticOrder { .. } => None,
    }
}

/// Reduces a symmetric positive definite `q` by a unit: returns `(u, u^dag q u)`
/// with the norm preserved exactly.
pub fn reduce_symmetric(q: &RingElem) -> Result<(RingElem, RingElem), EndredError> {
    if !is_symmetric_positive(q) {
        return Err(EndredError::NotSymmetricPositive);
    }
    match q.ring() {
        EndRingDesc::MatrixRing { n } => {
            let u_mat = lll_on_gram(q, *n);
            let u = RingElem::new(q.ring().clone(), flatten(&u_mat))?;
            let reduced = u.involution().mul(q)?.mul(&u)?;
            debug_assert_eq!(reduced.norm(), q.norm());
            Ok((u, reduced))
        }
        EndRingDesc::QuadraticOrder { d } if *d > 0 => {
            let eps = fundamental_unit(*d)?;
            let eps_inv = unit_inverse(&eps);
            // Larger embedding of q * eps^{2m}, walked to its minimum;
            // ties resolve toward smaller |m|.
            let larger = |x: &RingElem| -> (BigInt, BigInt, BigInt) {
                let p = x.embedding(true);
                let m = x.embedding(false);
                if surd_cmp(&p, &m) >= 0 {
                    p
                } else {
                    m
                }
            };
            let mut u = RingElem::one(q.ring().clone());
            let mut current = q.clone();
            for step in [&eps, &eps_inv] {
                loop {
                    let u_next = u.mul(step)?;
                    let next = step.involution().mul(&current)?.mul(step)?;
                    if surd_cmp(&larger(&next), &larger(&current)) < 0 {
                        u = u_next;
                        current = next;
                    } else {
                        break;
                    }
                }
            }
            debug_assert_eq!(current.norm(), q.norm());
            // Balanced orbit: max embedding within eps_+^2 of the min.
            debug_assert!({
                let p = current.embedding(true);
                let m = current.embedding(false);
                let (hi, lo) = if surd_cmp(&p, &m) >= 0 {
                    (p, m)
                } else {
                    (m, p)
                };
                let eps_plus = {
                    let a = eps.embedding(true);
                    let b = eps.embedding(false);
                    if surd_cmp(&a, &b) >= 0 {
                        a
                    } else {
                        b
                    }
                };
                let eps_sq = surd_mul(&eps_plus, &eps_plus);
                surd_cmp(&hi, &surd_mul(&eps_sq, &lo)) <= 0
            });
            Ok((u, current))
        }
        EndRingDesc::QuadraticOrder { d } => {
            // Finite unit group; conjugation makes u^dag q u = Nm(u) q = q,
            // so the identity is already optimal.
            let units: Vec<Vec<i64>> = match d {
                -4 => vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
                -3 => vec![
                    vec![1, 0],
                    vec![-1, 0],
                    vec![0, 1],
                    vec![0, -1],
                    vec![1, -1],
                    vec![-1, 1],
                ],
                _ => vec![vec![1, 0], vec![-1, 0]],
            };
            let mut best: Option<(RingElem, RingElem)> = None;
            for coords in units {
                let u = RingElem::from_i64(q.ring().clone(), &coords)?;
                debug_assert!(u.norm().abs().is_one());
                let cand = u.involution().mul(q)?.mul(&u)?;
                let better = match &best {
                    None => true,
                    Some((_, b)) => cand.height() < b.height(),
                };
                if better {
                    best = Some((u, cand));
                }
            }
            let (u, reduced) = best.expect("nonempty unit set");
            debug_assert_eq!(reduced.norm(), q.norm());
            Ok((u, reduced))
        }
    }
}

fn flatten(rows: &[Vec<BigInt>]) -> Vec<BigInt> {
    rows.iter().flat_map(|r| r.iter().cloned()).collect()
}

/// Exact LLL (`delta = 99/100`) on the positive definite Gram matrix of `q`,
/// returning the unimodular transformation `U`; the reduced Gram is
/// `U^T q U`. Gram-Schmidt data is recomputed exactly over the rationals.
fn lll_on_gram(q: &RingElem, n: usize) -> Vec<Vec<BigInt>> {
    let gram0: Vec<Vec<BigInt>> = (0..n)
        .map(|i| q.coords()[i * n..(i + 1) * n].to_vec())
        .collect();
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();

    let gram_entry = |u: &[Vec<BigInt>], i: usize, j: usize| -> BigInt {
        let mut acc = BigInt::zero();
        for a in 0..n {
            for b in 0..n {
                acc += &u[a][i] * &gram0[a][b] * &u[b][j];
            }
        }
        acc
    };

    // mu[i][j] and squared GSO norms, exact.
    let gso = |u: &[Vec<BigInt>]| -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
        let mut mu = vec![vec![BigRational::zero(); n]; n];
        let mut bstar = vec![BigRational::zero(); n];
        for i in 0..n {
            let mut bi = BigRational::from_integer(gram_entry(u, i, i));
            for j in 0..i {
                let mut dot = BigRational::from_integer(gram_entry(u, i, j));
                for k in 0..j {
                    dot -= &mu[i][k] * &mu[j][k] * &bstar[k];
                }
                mu[i][j] = dot / &bstar[j];
                bi -= &mu[i][j] * &mu[i][j] * &bstar[j];
            }
            bstar[i] = bi;
        }
        (mu, bstar)
    };

    let col_addmul = |u: &mut [Vec<BigInt>], dst: usize, src: usize, c: &BigInt| {
        for r in 0..n {
            let s = &u[r][src] * c;
            u[r][dst] += s;
        }
    };
    let col_swap = |u: &mut [Vec<BigInt>], a: usize, b: usize| {
        for r in 0..n {
            u[r].swap(a, b);
        }
    };
    let round_rational = |x: &BigRational| -> BigInt {
        let two = BigInt::from(2);
        let num = x.numer() * &two + x.denom();
        num.div_floor(&(x.denom() * &two))
    };

    let delta = BigRational::new(BigInt::from(99), BigInt::from(100));
    let mut k = 1usize;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        assert!(guard < 10_000, "LLL failed to terminate");
        let (mu, _) = gso(&u);
        for j in (0..k).rev() {
            let r = round_rational(&mu[k][j]);
            if !r.is_zero() {
                col_addmul(&mut u, k, j, &(-r));
            }
        }
        let (mu, bstar) = gso(&u);
        // Lovasz condition at (k, k-1).
        let lhs = &bstar[k] + &mu[k][k - 1] * &mu[k][k - 1] * &bstar[k - 1];
        if lhs >= &delta * &bstar[k - 1] {
            k += 1;
        } else {
            col_swap(&mut u, k, k - 1);
            k = k.max(2) - 1;
        }
    }
    // Final size-reduction sweep.
    let (mut mu, mut bstar) = gso(&u);
    for i in 1..n {
        for j in (0..i).rev() {
            let r = round_rational(&mu[i][j]);
            if !r.is_zero() {
                col_addmul(&mut u, i, j, &(-r));
                let res = gso(&u);
                mu = res.0;
                bstar = res.1;
            }
        }
    }
    let _ = bstar;
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn m2() -> EndRingDesc {
        EndRingDesc::matrix_ring(2).unwrap()
    }

    fn z_sqrt2() -> EndRingDesc {
        EndRingDesc::quadratic_order(8).unwrap()
    }

    #[test]
    fn descriptor_validation_and_json() {
        assert!(EndRingDesc::matrix_ring(0).is_err());
        assert!(EndRingDesc::quadratic_order(9).is_err()); // square
        assert!(EndRingDesc::quadratic_order(6).is_err()); // 2 mod 4
        assert!(EndRingDesc::quadratic_order(5).is_ok());
        assert!(EndRingDesc::quadratic_order(-4).is_ok());

        let r = EndRingDesc::from_json(&serde_json::json!({"kind":"quadratic","D":8})).unwrap();
        assert_eq!(r, z_sqrt2());
        let r = EndRingDesc::from_json(&serde_json::json!({"kind":"matrix","n":2})).unwrap();
        assert_eq!(r, m2());
        assert_eq!(EndRingDesc::from_json(&r.to_json()).unwrap(), r);
        assert!(EndRingDesc::from_json(&serde_json::json!({"kind":"octonion"})).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(RingElem::one(m2()).norm(), BigInt::one());
        assert_eq!(RingElem::one(z_sqrt2()).norm(), BigInt::one());

        // 3 + 2 sqrt(2): regular representation [[3, 4], [2, 3]], det 1.
        let x = RingElem::from_i64(z_sqrt2(), &[3, 2]).unwrap();
        assert_eq!(
            x.regular_rep(),
            ExactMatrix::from_int_rows(&[vec![3, 4], vec![2, 3]])
        );
        assert_eq!(x.norm(), BigInt::one());

        let q = RingElem::from_i64(m2(), &[5, 3, 3, 2]).unwrap();
        assert_eq!(q.norm(), BigInt::one());
    }

    #[test]
    fn symmetric_positive_examples() {
        assert!(is_symmetric_positive(&RingElem::one(m2())));
        let q = RingElem::from_i64(m2(), &[1, 2, 2, 1]).unwrap();
        assert!(!is_symmetric_positive(&q)); // det = -3
        let q = RingElem::from_i64(m2(), &[1, 2, 3, 4]).unwrap();
        assert!(!is_symmetric_positive(&q)); // not symmetric

        // 3 + 2 sqrt(2) is totally positive.
        let x = RingElem::from_i64(z_sqrt2(), &[3, 2]).unwrap();
        assert!(is_symmetric_positive(&x));
        // 1 - sqrt(2) has a negative embedding.
        let x = RingElem::from_i64(z_sqrt2(), &[1, -1]).unwrap();
        assert!(!is_symmetric_positive(&x));

        // Imaginary quadratic: only positive rational integers qualify.
        let zi = EndRingDesc::quadratic_order(-4).unwrap();
        assert!(is_symmetric_positive(&RingElem::from_i64(zi.clone(), &[3, 0]).unwrap()));
        assert!(!is_symmetric_positive(&RingElem::from_i64(zi, &[3, 1]).unwrap()));
    }

    #[test]
    fn fundamental_unit_examples() {
        // Z[sqrt(2)]: 1 + sqrt(2), norm -1.
        let u = fundamental_unit(8).unwrap();
        assert_eq!(u.coords(), &[BigInt::from(1), BigInt::from(1)]);
        assert_eq!(u.norm(), BigInt::from(-1));

        // Z[sqrt(3)]: 2 + sqrt(3), norm 1 (Pell 2^2 - 3 = 1).
        let u = fundamental_unit(12).unwrap();
        assert_eq!(u.coords(), &[BigInt::from(2), BigInt::from(1)]);
        assert_eq!(u.norm(), BigInt::one());

        // D = 5: golden ratio (1 + sqrt(5))/2 = 0 + 1 omega, norm -1.
        let u = fundamental_unit(5).unwrap();
        assert_eq!(u.coords(), &[BigInt::zero(), BigInt::one()]);
        assert_eq!(u.norm(), BigInt::from(-1));

        // D = 13: (3 + sqrt(13))/2 = 1 + omega, norm -1.
        let u = fundamental_unit(13).unwrap();
        assert_eq!(u.coords(), &[BigInt::one(), BigInt::one()]);
        assert_eq!(u.norm(), BigInt::from(-1));

        for d in [5i64, 8, 12, 13, 17, 24, 28, 44, 61] {
            let u = fundamental_unit(d).unwrap();
            assert!(u.norm().abs().is_one(), "D={d}");
        }
        assert!(fundamental_unit(-4).is_err());
        assert!(fundamental_unit(16).is_err());
    }

    #[test]
    fn reduce_identity_is_fixed() {
        for ring in [m2(), z_sqrt2(), EndRingDesc::quadratic_order(-4).unwrap()] {
            let q = RingElem::one(ring.clone());
            let (u, red) = reduce_symmetric(&q).unwrap();
            assert_eq!(red, RingElem::one(ring));
            assert!(u.norm().abs().is_one());
        }
    }

    #[test]
    fn reduce_worked_quadratic_instance() {
        // q = 3 + 2 sqrt(2) has norm 1 and reduces to 1 exactly via
        // u = sqrt(2) - 1.
        let q = RingElem::from_i64(z_sqrt2(), &[3, 2]).unwrap();
        let (u, red) = reduce_symmetric(&q).unwrap();
        assert_eq!(red, RingElem::one(z_sqrt2()));
        assert_eq!(u.coords(), &[BigInt::from(-1), BigInt::from(1)]);
    }

    #[test]
    fn reduce_matrix_det_one_reaches_identity() {
        // Any unimodular positive definite binary form is equivalent to I.
        let q = RingElem::from_i64(m2(), &[5, 3, 3, 2]).unwrap();
        let (u, red) = reduce_symmetric(&q).unwrap();
        assert_eq!(red, RingElem::one(m2()));
        let urep = u.regular_rep();
        assert_eq!(
            urep.det().unwrap().to_bigint().unwrap().abs(),
            BigInt::one()
        );
        // q_reduced = u^T q u exactly.
        let qrep = q.regular_rep();
        let check = urep.transpose().mul(&qrep).unwrap().mul(&urep).unwrap();
        assert_eq!(check, red.regular_rep());
    }

    #[test]
    fn reduce_rejects_non_positive() {
        let q = RingElem::from_i64(m2(), &[1, 2, 2, 1]).unwrap();
        assert!(matches!(
            reduce_symmetric(&q),
            Err(EndredError::NotSymmetricPositive)
        ));
    }

    fn random_pd(rng: &mut StdRng, n: usize, entry: i64) -> RingElem {
        // q = V^T V + I for random integral V: symmetric positive definite.
        loop {
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-entry..=entry)).collect())
                .collect();
            let v = ExactMatrix::from_int_rows(&rows);
            let q = v
                .transpose()
                .mul(&v)
                .unwrap()
                .add(&ExactMatrix::identity(n))
                .unwrap();
            let coords: Vec<BigInt> = q
                .to_int_rows()
                .unwrap()
                .into_iter()
                .flatten()
                .collect();
            let elem = RingElem::new(EndRingDesc::matrix_ring(n).unwrap(), coords).unwrap();
            if is_symmetric_positive(&elem) {
                return elem;
            }
        }
    }

    #[test]
    fn reduce_matrix_invariants_random() {
        let mut rng = StdRng::seed_from_u64(71);
        let ring = m2();
        let c_ring = BigInt::from(calibrated_c_ring(&ring).unwrap());
        for _ in 0..100 {
            let q = random_pd(&mut rng, 2, 6);
            let nm = q.norm();
            let (u, red) = reduce_symmetric(&q).unwrap();
            assert_eq!(red.norm(), nm, "norm preserved");
            assert!(u.regular_rep().det().unwrap().to_bigint().unwrap().abs().is_one());
            let urep = u.regular_rep();
            let check = urep
                .transpose()
                .mul(&q.regular_rep())
                .unwrap()
                .mul(&urep)
                .unwrap();
            assert_eq!(check, red.regular_rep(), "q_red = u^T q u");
            // Diagonal entries of an integral PD matrix are >= 1; the entry
            // bound is the calibrated certificate.
            let n = 2;
            for i in 0..n {
                assert!(red.coords()[i * n + i] >= BigInt::one());
            }
            assert!(
                red.height() <= &c_ring * &nm,
                "entry bound: {} > {} * {}",
                red.height(),
                c_ring,
                nm
            );
        }
    }

    #[test]
    fn reduce_real_quadratic_balances_embeddings() {
        let ring = z_sqrt2();
        let eps = fundamental_unit(8).unwrap();
        let eps_plus_sq = {
            let e = eps.embedding(true);
            surd_mul(&e, &e)
        };
        let mut rng = StdRng::seed_from_u64(73);
        let mut done = 0;
        while done < 50 {
            // Random totally positive element: (a + b sqrt 2) with both
            // embeddings positive.
            let a = rng.gen_range(1i64..=50);
            let b = rng.gen_range(-20i64..=20);
            let q = RingElem::from_i64(ring.clone(), &[a, b]).unwrap();
            if !is_symmetric_positive(&q) {
                continue;
            }
            let (u, red) = reduce_symmetric(&q).unwrap();
            assert!(u.norm().abs().is_one());
            assert_eq!(red.norm(), q.norm());
            let p = red.embedding(true);
            let m = red.embedding(false);
            let (hi, lo) = if surd_cmp(&p, &m) >= 0 { (p, m) } else { (m, p) };
            assert!(
                surd_cmp(&hi, &surd_mul(&eps_plus_sq, &lo)) <= 0,
                "embedding ratio exceeds eps^2 for ({a}, {b})"
            );
            done += 1;
        }
    }

    #[test]
    fn imaginary_quadratic_reduction_is_identity_action() {
        for d in [-3i64, -4, -7, -8] {
            let ring = EndRingDesc::quadratic_order(d).unwrap();
            let q = RingElem::from_i64(ring.clone(), &[7, 0]).unwrap();
            let (u, red) = reduce_symmetric(&q).unwrap();
            assert_eq!(red, q);
            assert!(u.norm().abs().is_one());
        }
    }
}
