//! Rational representations of isogenies between polarised lattices.
//!
//! An isogeny between rank-`2g` lattices is carried here purely by its
//! induced matrix `f_*` together with the perfect symplectic forms on the
//! codomain and domain. The degree is the index of the image, `|det f_*|`.
//! [`bounded_rep_pipeline`] realizes the constructive height-bounding chain:
//! Hermite normal form to make the representation triangular with entries at
//! most the degree, transport of the domain form, and a certified symplectic
//! basis for the transported form.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::matrix::{ExactMatrix, MatrixError};
use crate::scalar::ExactScalar;
use crate::symplectic::{
    gsp_multiplier, random_sp, standard_j, symplectic_basis, BasisMatrix, HeightCertificate,
    StepBound, SymplecticError, SymplecticForm,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsogenyError {
    /// The representation matrix must be integral with nonzero determinant.
    SingularRepresentation,
    NonIntegral,
    GenusMismatch { expected: usize, got: usize },
    /// Both forms must be perfect.
    ImperfectForm { det: BigInt },
    /// Operation requires the forms to be the standard `J`.
    FormsNotStandard,
    BadDivisorChain(String),
    Parse(String),
    Symplectic(SymplecticError),
    Matrix(MatrixError),
}

impl fmt::Display for IsogenyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IsogenyError::SingularRepresentation => {
                write!(f, "representation matrix has determinant zero")
            }
            IsogenyError::NonIntegral => write!(f, "representation matrix is not integral"),
            IsogenyError::GenusMismatch { expected, got } => {
                write!(f, "genus mismatch: expected {expected}, got {got}")
            }
            IsogenyError::ImperfectForm { det } => {
                write!(f, "form is not perfect: det = {det}")
            }
            IsogenyError::FormsNotStandard => {
                write!(f, "operation requires forms in standard position J")
            }
            IsogenyError::BadDivisorChain(msg) => write!(f, "bad divisor chain: {msg}"),
            IsogenyError::Parse(msg) => write!(f, "isogeny parse error: {msg}"),
            IsogenyError::Symplectic(e) => write!(f, "{e}"),
            IsogenyError::Matrix(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for IsogenyError {}

impl From<SymplecticError> for IsogenyError {
    fn from(e: SymplecticError) -> Self {
        IsogenyError::Symplectic(e)
    }
}

impl From<MatrixError> for IsogenyError {
    fn from(e: MatrixError) -> Self {
        IsogenyError::Matrix(e)
    }
}

/// The matrix of `f_*` together with the codomain form `psi` and the domain
/// form `psi'`, both perfect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsogenyRep {
    g: usize,
    matrix: ExactMatrix,
    codomain_form: SymplecticForm,
    domain_form: SymplecticForm,
}

impl IsogenyRep {
    pub fn new(
        matrix: ExactMatrix,
        codomain_form: SymplecticForm,
        domain_form: SymplecticForm,
    ) -> Result<Self, IsogenyError> {
        if !matrix.is_integral() {
            return Err(IsogenyError::NonIntegral);
        }
        let g = codomain_form.genus();
        if matrix.rows() != 2 * g || matrix.cols() != 2 * g {
            return Err(IsogenyError::GenusMismatch {
                expected: g,
                got: matrix.rows() / 2,
            });
        }
        if domain_form.genus() != g {
            return Err(IsogenyError::GenusMismatch {
                expected: g,
                got: domain_form.genus(),
            });
        }
        for form in [&codomain_form, &domain_form] {
            let det = form.gram().det()?.to_bigint().expect("integral det");
            if !det.is_one() {
                return Err(IsogenyError::ImperfectForm { det });
            }
        }
        if matrix.det()?.is_zero() {
            return Err(IsogenyError::SingularRepresentation);
        }
        Ok(IsogenyRep {
            g,
            matrix,
            codomain_form,
            domain_form,
        })
    }

    /// Both forms standard `J`; the common case for generated instances.
    pub fn with_standard_forms(g: usize, matrix: ExactMatrix) -> Result<Self, IsogenyError> {
        IsogenyRep::new(matrix, standard_j(g), standard_j(g))
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn matrix(&self) -> &ExactMatrix {
        &self.matrix
    }

    pub fn codomain_form(&self) -> &SymplecticForm {
        &self.codomain_form
    }

    pub fn domain_form(&self) -> &SymplecticForm {
        &self.domain_form
    }

    /// Degree of the isogeny: the index of the image lattice, `|det f_*|`.
    pub fn degree(&self) -> BigInt {
        self.matrix
            .det()
            .expect("square")
            .to_bigint()
            .expect("integral")
            .abs()
    }

    /// The isogeny in the opposite direction: `f' = n f^{-1}` where `n` is
    /// the degree. Then `f f' = n I`, `deg f' = n^{2g-1}`, and the forms swap.
    pub fn opposite_isogeny(&self) -> IsogenyRep {
        let n = self.degree();
        let inv = self.matrix.adjugate_inverse().expect("nonzero det");
        let opp = inv.scale(&ExactScalar::from_int(n.clone()));
        debug_assert!(opp.is_integral());
        debug_assert_eq!(
            self.matrix.mul(&opp).unwrap(),
            ExactMatrix::identity(2 * self.g).scale(&ExactScalar::from_int(n.clone()))
        );
        IsogenyRep {
            g: self.g,
            matrix: opp,
            codomain_form: self.domain_form.clone(),
            domain_form: self.codomain_form.clone(),
        }
    }

    /// Gram matrix of the pulled-back form `f^* psi` on the domain:
    /// `matrix^T psi matrix`. Antisymmetric, with determinant `deg(f)^2`.
    pub fn pullback_form(&self) -> ExactMatrix {
        self.matrix
            .transpose()
            .mul(self.codomain_form.gram())
            .expect("conformable")
            .mul(&self.matrix)
            .expect("conformable")
    }

    /// For symplectic bases on both sides, the isogeny is polarised iff its
    /// representation lies in `GSp_2g(Q)`.
    pub fn is_polarized(&self) -> Result<bool, IsogenyError> {
        let j = standard_j(self.g);
        if self.codomain_form != j || self.domain_form != j {
            return Err(IsogenyError::FormsNotStandard);
        }
        let nu = gsp_multiplier(&self.matrix, self.g)?;
        Ok(match nu {
            Some(v) => v.is_integer() && !v.is_zero(),
            None => false,
        })
    }

    /// Serializes as labelled matrix blocks in the shared text format.
    pub fn to_text(&self) -> String {
        format!(
            "g={}\nmatrix\n{}psi\n{}psi_prime\n{}",
            self.g,
            self.matrix.to_text(),
            self.codomain_form.gram().to_text(),
            self.domain_form.gram().to_text()
        )
    }

    pub fn from_text(s: &str) -> Result<Self, IsogenyError> {
        let mut lines = s.lines().peekable();
        let header = lines
            .next()
            .ok_or_else(|| IsogenyError::Parse("empty input".into()))?;
        let g: usize = header
            .strip_prefix("g=")
            .ok_or_else(|| IsogenyError::Parse(format!("expected g=<g>, got {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| IsogenyError::Parse(format!("bad genus: {e}")))?;
        let mut read_block = |label: &str| -> Result<ExactMatrix, IsogenyError> {
            let tag = lines
                .next()
                .ok_or_else(|| IsogenyError::Parse(format!("missing {label} block")))?;
            if tag.trim() != label {
                return Err(IsogenyError::Parse(format!(
                    "expected block {label:?}, got {tag:?}"
                )));
            }
            let mut block = String::new();
            // One header line plus 2g rows.
            for _ in 0..=2 * g {
                let line = lines
                    .next()
                    .ok_or_else(|| IsogenyError::Parse(format!("truncated {label} block")))?;
                block.push_str(line);
                block.push('\n');
            }
            ExactMatrix::from_text(&block).map_err(IsogenyError::from)
        };
        let matrix = read_block("matrix")?;
        let psi = read_block("psi")?;
        let psi_prime = read_block("psi_prime")?;
        IsogenyRep::new(
            matrix,
            SymplecticForm::new(psi)?,
            SymplecticForm::new(psi_prime)?,
        )
    }
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 step; keeps per-instance generator streams independent.
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generates a polarised isogeny `gamma_1 D gamma_2` with
/// `D = diag(d_1, ..., d_g, n/d_1, ..., n/d_g)`, `n = d_g` the largest
/// divisor, and `gamma_i` random words in `Sp_2g(Z)`. The multiplier is `n`
/// and the degree is `n^g`.
pub fn generate_polarized_isogeny(
    g: usize,
    divisors: &[u64],
    word_len: usize,
    seed: u64,
) -> Result<IsogenyRep, IsogenyError> {
    if divisors.len() != g {
        return Err(IsogenyError::BadDivisorChain(format!(
            "expected {g} divisors, got {}",
            divisors.len()
        )));
    }
    for w in divisors.windows(2) {
        if w[0] == 0 || w[1] % w[0] != 0 {
            return Err(IsogenyError::BadDivisorChain(format!(
                "{} does not divide {}",
                w[0], w[1]
            )));
        }
    }
    if divisors[0] == 0 {
        return Err(IsogenyError::BadDivisorChain("zero divisor".into()));
    }
    let n = *divisors.last().expect("g >= 1");
    let mut d = ExactMatrix::zeros(2 * g, 2 * g);
    for (i, &di) in divisors.iter().enumerate() {
        d[(i, i)] = ExactScalar::from_int(di as i64);
        d[(g + i, g + i)] = ExactScalar::from_int((n / di) as i64);
    }
    let g1 = random_sp(g, word_len, mix_seed(seed, 1));
    let g2 = random_sp(g, word_len, mix_seed(seed, 2));
    let matrix = g1.mul(&d)?.mul(&g2)?;
    let rep = IsogenyRep::with_standard_forms(g, matrix)?;
    debug_assert_eq!(
        gsp_multiplier(rep.matrix(), g)?,
        Some(ExactScalar::from_int(n as i64))
    );
    Ok(rep)
}

/// Output of the bounded-representation pipeline.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    /// The symplectic domain basis `B'` (columns, unimodular).
    pub domain_basis: BasisMatrix,
    /// The representation in bases `(B', standard)`: `matrix * u * b`.
    pub rep_in_new_bases: ExactMatrix,
    /// Height of the HNF-triangularized representation; at most the degree.
    pub hnf_height: BigInt,
    pub final_height: BigInt,
    pub degree: BigInt,
    pub certificate: HeightCertificate,
}

/// Runs the full bounded-representation chain on `f`:
///
/// 1. column HNF of the representation, giving a domain basis in which the
///    representation is upper triangular with entries at most `deg f`;
/// 2. transport of the domain form `psi'` along that basis change;
/// 3. a certified symplectic basis for the transported form;
/// 4. the representation in the new bases, with the composed certificate.
pub fn bounded_rep_pipeline(f: &IsogenyRep) -> Result<PipelineResult, IsogenyError> {
    let g = f.g;
    if f.codomain_form != standard_j(g) {
        return Err(IsogenyError::FormsNotStandard);
    }
    let degree = f.degree();

    let (h, u) = f.matrix.hnf()?;
    let hnf_height = h.height();
    assert!(hnf_height <= degree, "hnf height exceeds the degree");

    // psi' in the HNF basis.
    let transported = u
        .transpose()
        .mul(f.domain_form.gram())?
        .mul(&u)?;
    let transported_bound = transported.height();
    let form1 = SymplecticForm::new(transported)?;
    let (b, basis_cert) = symplectic_basis(&form1)?;

    let domain_basis = BasisMatrix::new(u.mul(b.matrix())?)?;
    let rep = h.mul(b.matrix())?;
    let final_height = rep.height();

    // Exact relations promised to callers.
    debug_assert_eq!(
        rep,
        f.matrix.mul(domain_basis.matrix()).unwrap(),
        "rep = matrix * (hnf unimodular) * (symplectic basis change)"
    );
    let check = domain_basis
        .matrix()
        .transpose()
        .mul(f.domain_form.gram())?
        .mul(domain_basis.matrix())?;
    assert_eq!(check, *standard_j(g).gram(), "(B')^T psi' B' = J");

    // Compose the certificate: the HNF step, the basis steps, then the
    // product step bounding the final representation height.
    let two_g = BigInt::from(2 * g);
    let mut steps = Vec::with_capacity(basis_cert.step_bounds.len() + 2);
    steps.push(StepBound {
        label: "hnf".into(),
        claimed: degree.clone(),
        observed: hnf_height.clone(),
    });
    steps.extend(basis_cert.step_bounds.iter().cloned());
    steps.push(StepBound {
        label: "rep_product".into(),
        claimed: &two_g * &hnf_height * &basis_cert.final_height,
        observed: final_height.clone(),
    });
    let certified_bound = &two_g * &degree * &basis_cert.certified_bound;
    let certificate = HeightCertificate {
        input_bound_n: transported_bound,
        step_bounds: steps,
        final_height: final_height.clone(),
        exponent_budget: basis_cert.exponent_budget.clone(),
        derived_constant: basis_cert.derived_constant.clone(),
        certified_bound,
    };
    certificate.verify()?;

    Ok(PipelineResult {
        domain_basis,
        rep_in_new_bases: rep,
        hnf_height,
        final_height,
        degree,
        certificate,
    })
}
