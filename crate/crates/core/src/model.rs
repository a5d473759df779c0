//! Model parameters and the affinity kernels derived from them.
//!
//! Attribute vectors are binary and the kernel is homogeneous: every
//! coordinate uses the same symmetric 2x2 matrix `q`. All products over the
//! `L` coordinates are evaluated as exponentials of sums of logarithms, and
//! depend on a pair of vectors only through their joint type (see
//! [`PairType`]), which makes every pairwise quantity bit-for-bit symmetric.

use crate::error::{Error, Result};
use crate::numerics::scaled_ln;

/// Probabilities must stay this far away from 0 and 1.
pub const PROBABILITY_MARGIN: f64 = 1e-12;

fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > PROBABILITY_MARGIN && value < 1.0 - PROBABILITY_MARGIN {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// Symmetric 2x2 affinity kernel; `q(0,1)` and `q(1,0)` share one entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityMatrix {
    q11: f64,
    q10: f64,
    q00: f64,
}

impl AffinityMatrix {
    pub fn new(q11: f64, q10: f64, q00: f64) -> Result<Self> {
        Ok(Self {
            q11: check_probability("q11", q11)?,
            q10: check_probability("q10", q10)?,
            q00: check_probability("q00", q00)?,
        })
    }

    pub fn q11(&self) -> f64 {
        self.q11
    }

    pub fn q10(&self) -> f64 {
        self.q10
    }

    pub fn q00(&self) -> f64 {
        self.q00
    }

    pub fn q(&self, a: bool, b: bool) -> f64 {
        match (a, b) {
            (true, true) => self.q11,
            (false, false) => self.q00,
            _ => self.q10,
        }
    }
}

/// Bernoulli law of a single attribute; `mu1` is stored and `mu0` derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributePmf {
    mu1: f64,
}

impl AttributePmf {
    pub fn new(mu1: f64) -> Result<Self> {
        Ok(Self {
            mu1: check_probability("mu1", mu1)?,
        })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu0(&self) -> f64 {
        1.0 - self.mu1
    }

    pub fn mu(&self, a: bool) -> f64 {
        if a {
            self.mu1
        } else {
            self.mu0()
        }
    }
}

/// `Γ(a) = μ(0) q(a,0) + μ(1) q(a,1)`.
pub fn gamma(a: bool, q: &AffinityMatrix, pmf: &AttributePmf) -> f64 {
    pmf.mu0() * q.q(a, false) + pmf.mu1() * q.q(a, true)
}

/// `(E[q(1,A)^2], E[q(1,A) q(0,A)], E[q(0,A)^2])` for `A ~ pmf`.
pub fn pair_kernel_moments(q: &AffinityMatrix, pmf: &AttributePmf) -> (f64, f64, f64) {
    let (mu0, mu1) = (pmf.mu0(), pmf.mu1());
    let m11 = mu0 * q.q10 * q.q10 + mu1 * q.q11 * q.q11;
    let m10 = mu0 * q.q10 * q.q00 + mu1 * q.q11 * q.q10;
    let m00 = mu0 * q.q00 * q.q00 + mu1 * q.q10 * q.q10;
    (m11, m10, m00)
}

/// Binary attribute vector with a cached count of ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeVector {
    words: Vec<u64>,
    len: usize,
    ones: usize,
}

impl AttributeVector {
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        let mut ones = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
                ones += 1;
            }
            len += 1;
        }
        Self { words, len, ones }
    }

    /// The vector of length `len` whose `i`-th coordinate is bit `i` of `mask`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        assert!(len <= 64, "from_mask supports at most 64 coordinates");
        Self::from_bits((0..len).map(|i| mask >> i & 1 == 1))
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_bits(std::iter::repeat(false).take(len))
    }

    pub fn ones_vector(len: usize) -> Self {
        Self::from_bits(std::iter::repeat(true).take(len))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of coordinates equal to one (the realization of `S_L`).
    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "coordinate {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Number of coordinates where both vectors are one.
    pub(crate) fn common_ones(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(x, y)| (x & y).count_ones() as usize)
            .sum()
    }
}

/// Joint type of a pair of attribute vectors: coordinate counts of
/// `(1,1)`, `(1,0)`, `(0,1)` and `(0,0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairType {
    pub j11: usize,
    pub j10: usize,
    pub j01: usize,
    pub j00: usize,
}

impl PairType {
    pub fn of(a: &AttributeVector, b: &AttributeVector) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
                expected: a.len(),
            });
        }
        Ok(Self::from_counts(a.len(), a.ones(), b.ones(), a.common_ones(b)))
    }

    /// Type from the length, both counts of ones, and the number of shared ones.
    pub fn from_counts(len: usize, ones_a: usize, ones_b: usize, common: usize) -> Self {
        debug_assert!(common <= ones_a.min(ones_b) && ones_a + ones_b - common <= len);
        Self {
            j11: common,
            j10: ones_a - common,
            j01: ones_b - common,
            j00: len + common - ones_a - ones_b,
        }
    }

    pub fn len(&self) -> usize {
        self.j11 + self.j10 + self.j01 + self.j00
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mismatches(&self) -> usize {
        self.j10 + self.j01
    }

    pub fn ones_first(&self) -> usize {
        self.j11 + self.j10
    }

    pub fn ones_second(&self) -> usize {
        self.j11 + self.j01
    }
}

/// `Q_L(a, b) = prod_l q(a_l, b_l)`.
pub fn q_l(a: &AttributeVector, b: &AttributeVector, q: &AffinityMatrix) -> Result<f64> {
    let ty = PairType::of(a, b)?;
    Ok(ln_q_l_of_type(&ty, q).exp())
}

pub(crate) fn ln_q_l_of_type(ty: &PairType, q: &AffinityMatrix) -> f64 {
    ty.j11 as f64 * q.q11.ln() + ty.mismatches() as f64 * q.q10.ln() + ty.j00 as f64 * q.q00.ln()
}

/// Validated parameters of `M(n; L)` together with the derived kernel constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MagParams {
    n: usize,
    levels: usize,
    pmf: AttributePmf,
    q: AffinityMatrix,
    gamma0: f64,
    gamma1: f64,
    m11: f64,
    m10: f64,
    m00: f64,
}

impl MagParams {
    pub fn new(n: usize, levels: usize, pmf: AttributePmf, q: AffinityMatrix) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize {
                name: "n",
                value: n,
                reason: "at least two nodes are required",
            });
        }
        if levels < 1 {
            return Err(Error::InvalidSize {
                name: "L",
                value: levels,
                reason: "at least one attribute is required",
            });
        }
        let gamma0 = gamma(false, &q, &pmf);
        let gamma1 = gamma(true, &q, &pmf);
        // Γ(1) < Γ(0) is the mirrored model; only one orientation is supported.
        if !(gamma0 < gamma1) {
            return Err(Error::CompactCondition { gamma0, gamma1 });
        }
        let (m11, m10, m00) = pair_kernel_moments(&q, &pmf);
        Ok(Self {
            n,
            levels,
            pmf,
            q,
            gamma0,
            gamma1,
            m11,
            m10,
            m00,
        })
    }

    /// Same kernel and attribute law with a different size.
    pub fn with_size(&self, n: usize, levels: usize) -> Result<Self> {
        Self::new(n, levels, self.pmf, self.q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of attributes `L`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pmf(&self) -> &AttributePmf {
        &self.pmf
    }

    pub fn q(&self) -> &AffinityMatrix {
        &self.q
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma(&self, a: bool) -> f64 {
        if a {
            self.gamma1
        } else {
            self.gamma0
        }
    }

    pub fn pair_kernel_moments(&self) -> (f64, f64, f64) {
        (self.m11, self.m10, self.m00)
    }

    fn check_len(&self, a: &AttributeVector, b: &AttributeVector) -> Result<PairType> {
        if a.len() != self.levels || b.len() != self.levels {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
                expected: self.levels,
            });
        }
        PairType::of(a, b)
    }

    pub(crate) fn ln_q_star_count(&self, s: usize) -> f64 {
        scaled_ln(s, self.gamma1.ln()) + scaled_ln(self.levels - s, self.gamma0.ln())
    }

    pub(crate) fn q_star_count(&self, s: usize) -> f64 {
        self.ln_q_star_count(s).exp()
    }

    pub(crate) fn q_star_star_of_type(&self, ty: &PairType) -> f64 {
        (ty.j11 as f64 * self.m11.ln()
            + ty.mismatches() as f64 * self.m10.ln()
            + ty.j00 as f64 * self.m00.ln())
        .exp()
    }

    pub(crate) fn q_tilde_of_type(&self, ty: &PairType) -> f64 {
        self.q_star_count(ty.ones_first()) + self.q_star_count(ty.ones_second())
            - self.q_star_star_of_type(ty)
    }
}

/// `Q★_L` of a vector with `s` ones: `Γ(1)^s Γ(0)^(L-s)`.
pub fn q_star(s: usize, levels: usize, params: &MagParams) -> Result<f64> {
    if s > levels {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            max: levels,
        });
    }
    let ln = scaled_ln(s, params.gamma1.ln()) + scaled_ln(levels - s, params.gamma0.ln());
    Ok(ln.exp())
}

/// `Q★★_L(a, b) = E[Q_L(a, A) Q_L(b, A)]`.
pub fn q_star_star(a: &AttributeVector, b: &AttributeVector, params: &MagParams) -> Result<f64> {
    let ty = params.check_len(a, b)?;
    Ok(params.q_star_star_of_type(&ty))
}

/// `Q̃_L(a, b) = Q★_L(a) + Q★_L(b) - Q★★_L(a, b)`.
pub fn q_tilde(a: &AttributeVector, b: &AttributeVector, params: &MagParams) -> Result<f64> {
    let ty = params.check_len(a, b)?;
    Ok(params.q_tilde_of_type(&ty))
}
