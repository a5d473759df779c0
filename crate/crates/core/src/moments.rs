//! Exact first and second moments of the isolated-node counts, the
//! first/second moment method bracket on `P[I = 0]`, and the exact
//! change-of-measure representation of `E[I]`.

use serde::{Deserialize, Serialize};

use crate::asymptotics::ln_g;
use crate::error::{Error, Result};
use crate::model::{ln_q_l_of_type, AttributeVector, MagParams, PairType};
use crate::numerics::{ln_binomial_pmf, ln_multinomial, pairwise_sum, pow_one_minus, scaled_ln};

/// Tolerance of the `E[Z^2] >= E[Z]^2` consistency check.
pub const MOMENT_CONSISTENCY_TOL: f64 = 1e-9;

fn check_level(params: &MagParams, name: &'static str, level: usize) -> Result<()> {
    if level > params.levels() {
        return Err(Error::OutOfRange {
            name,
            value: level,
            max: params.levels(),
        });
    }
    Ok(())
}

fn ln_attribute_pmf(params: &MagParams, s: usize) -> f64 {
    let pmf = params.pmf();
    ln_binomial_pmf(params.levels(), s, pmf.mu1().ln(), pmf.mu0().ln())
}

/// `P[S_L = s]`.
pub fn level_probability(params: &MagParams, s: usize) -> Result<f64> {
    check_level(params, "s", s)?;
    Ok(ln_attribute_pmf(params, s).exp())
}

/// Probability that a node with `s` ones is isolated: `(1 - Q★(s))^(n-1)`.
fn isolation_given_level(params: &MagParams, s: usize) -> f64 {
    pow_one_minus(params.q_star_count(s), (params.n() - 1) as f64)
}

/// `E[I^(l)] = n (1 - Γ(1)^l Γ(0)^(L-l))^(n-1) P[S_L = l]`.
pub fn first_moment_level(params: &MagParams, level: usize) -> Result<f64> {
    check_level(params, "level", level)?;
    Ok(params.n() as f64 * isolation_given_level(params, level) * ln_attribute_pmf(params, level).exp())
}

/// `E[I^(l)]` for every level `0..=L`.
pub fn first_moment_levels(params: &MagParams) -> Vec<f64> {
    (0..=params.levels())
        .map(|l| params.n() as f64 * isolation_given_level(params, l) * ln_attribute_pmf(params, l).exp())
        .collect()
}

/// `E[I]`.
pub fn first_moment_total(params: &MagParams) -> f64 {
    pairwise_sum(&first_moment_levels(params))
}

/// `P[u, v both isolated | A(u) = a, A(v) = b]`:
/// `(1 - Q_L(a, b)) (1 - Q̃_L(a, b))^(n-2)`.
pub fn pair_conditional(a: &AttributeVector, b: &AttributeVector, params: &MagParams) -> Result<f64> {
    if a.len() != params.levels() || b.len() != params.levels() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
            expected: params.levels(),
        });
    }
    Ok(pair_conditional_of_type(&PairType::of(a, b)?, params))
}

fn pair_conditional_of_type(ty: &PairType, params: &MagParams) -> f64 {
    let not_adjacent = -(ln_q_l_of_type(ty, params.q()).exp_m1());
    not_adjacent * pow_one_minus(params.q_tilde_of_type(ty), (params.n() - 2) as f64)
}

/// `E[ξ(1) ξ(2)]`: probability that two given nodes are both isolated.
///
/// Exact sum over the joint type `(j11, j10, j01, j00)` of the two attribute
/// vectors, which determines `Q_L`, both `Q★` values and `Q★★`. `O(L^3)` terms.
pub fn joint_isolation_probability(params: &MagParams) -> f64 {
    let levels = params.levels();
    let pmf = params.pmf();
    let ln_both_one = 2.0 * pmf.mu1().ln();
    let ln_mixed = pmf.mu1().ln() + pmf.mu0().ln();
    let ln_both_zero = 2.0 * pmf.mu0().ln();
    let mut terms = Vec::with_capacity((levels + 1) * (levels + 2) * (levels + 3) / 6);
    for j11 in 0..=levels {
        for j10 in 0..=levels - j11 {
            for j01 in 0..=levels - j11 - j10 {
                let ty = PairType {
                    j11,
                    j10,
                    j01,
                    j00: levels - j11 - j10 - j01,
                };
                let ln_weight = ln_multinomial(levels, &[ty.j11, ty.j10, ty.j01, ty.j00])
                    + scaled_ln(ty.j11, ln_both_one)
                    + scaled_ln(ty.mismatches(), ln_mixed)
                    + scaled_ln(ty.j00, ln_both_zero);
                terms.push(ln_weight.exp() * pair_conditional_of_type(&ty, params));
            }
        }
    }
    pairwise_sum(&terms)
}

/// `E[I^2] = n E[ξ(1)] + n (n-1) E[ξ(1) ξ(2)]`.
pub fn second_moment_total(params: &MagParams) -> f64 {
    let n = params.n() as f64;
    first_moment_total(params) + n * (n - 1.0) * joint_isolation_probability(params)
}

/// `P[S_L = k] P[S_L = l]`, the upper bound on `E[ξ^(k)(1) ξ^(l)(2)]`.
pub fn cross_moment_level_bound(params: &MagParams, k: usize, level: usize) -> Result<f64> {
    Ok(level_probability(params, k)? * level_probability(params, level)?)
}

/// `(1 - E[Z], 1 - E[Z]^2 / E[Z^2])` clamped to `[0, 1]`.
pub fn moment_method_bounds(e1: f64, e2: f64) -> Result<(f64, f64)> {
    if e1 == 0.0 {
        return Ok((1.0, 1.0));
    }
    let first_sq = e1 * e1;
    if !(e2 >= first_sq * (1.0 - MOMENT_CONSISTENCY_TOL)) {
        return Err(Error::InconsistentMoments { second: e2, first_sq });
    }
    let lower = (1.0 - e1).clamp(0.0, 1.0);
    let upper = (1.0 - first_sq / e2).clamp(0.0, 1.0);
    Ok((lower, upper))
}

/// Exact moments of the isolated-node count and the resulting bracket on `P[I = 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    #[serde(rename = "e_I")]
    pub e_i: f64,
    #[serde(rename = "e_I_level")]
    pub e_i_level: Vec<f64>,
    #[serde(rename = "e_I_sq")]
    pub e_i_sq: f64,
    pub p_zero_lower: f64,
    pub p_zero_upper: f64,
}

pub fn moment_report(params: &MagParams) -> Result<MomentReport> {
    let e_i_level = first_moment_levels(params);
    let e_i = pairwise_sum(&e_i_level);
    let n = params.n() as f64;
    let e_i_sq = e_i + n * (n - 1.0) * joint_isolation_probability(params);
    let (p_zero_lower, p_zero_upper) = moment_method_bounds(e_i, e_i_sq)?;
    Ok(MomentReport {
        e_i,
        e_i_level,
        e_i_sq,
        p_zero_lower,
        p_zero_upper,
    })
}

/// `E[I] = n G(ν, μ(1))^L E_n(ν, L)` evaluated term by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfMeasureReport {
    pub nu: f64,
    pub g_pow_l: f64,
    pub e_n: f64,
    pub e_n_plus: f64,
    pub e_n_minus: f64,
    #[serde(rename = "reconstructed_e_I")]
    pub reconstructed_e_i: f64,
}

pub fn change_of_measure_eval(params: &MagParams, nu: f64) -> Result<ChangeOfMeasureReport> {
    change_of_measure_with_gammas(params, nu, params.gamma0(), params.gamma1())
}

/// Same as [`change_of_measure_eval`] but with the `Γ` values supplied by the
/// caller. Used to check that the identity is sensitive to a corrupted `Γ`.
pub fn change_of_measure_with_gammas(
    params: &MagParams,
    nu: f64,
    gamma0: f64,
    gamma1: f64,
) -> Result<ChangeOfMeasureReport> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: nu,
            interval: "(0, 1)",
        });
    }
    let levels = params.levels();
    let mu1 = params.pmf().mu1();
    let mu0 = params.pmf().mu0();
    let ln_ratio = (mu1 / nu * ((1.0 - nu) / mu0)).ln();
    let (ln_nu, ln_one_minus_nu) = (nu.ln(), (1.0 - nu).ln());
    let centre = levels as f64 * nu;
    let exponent = (params.n() - 1) as f64;

    let mut all = Vec::with_capacity(levels + 1);
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for s in 0..=levels {
        let ln_q_star = scaled_ln(s, gamma1.ln()) + scaled_ln(levels - s, gamma0.ln());
        let isolation = pow_one_minus(ln_q_star.exp(), exponent);
        let shift = s as f64 - centre;
        let term = isolation * (ln_binomial_pmf(levels, s, ln_nu, ln_one_minus_nu) + shift * ln_ratio).exp();
        all.push(term);
        if shift > 0.0 {
            plus.push(term);
        } else {
            minus.push(term);
        }
    }
    let e_n = pairwise_sum(&all);
    let g_pow_l = (levels as f64 * ln_g(nu, mu1)?).exp();
    Ok(ChangeOfMeasureReport {
        nu,
        g_pow_l,
        e_n,
        e_n_plus: pairwise_sum(&plus),
        e_n_minus: pairwise_sum(&minus),
        reconstructed_e_i: params.n() as f64 * g_pow_l * e_n,
    })
}
