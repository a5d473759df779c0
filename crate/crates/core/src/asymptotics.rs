//! Rate function `G`, the root `ν★`, zero-one law classification and the
//! finite-`n` quantities whose limits drive the two laws.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttributePmf, MagParams};
use crate::numerics::{ln_binomial_pmf, pow_one_minus};

/// `|1 + ρ ln μ(0)|` (or a threshold) at or below this is treated as zero.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            interval: "(0, 1)",
        })
    }
}

fn check_closed_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            interval: "[0, 1]",
        })
    }
}

/// `ln G(ν, μ) = -ν ln(ν/μ) - (1-ν) ln((1-ν)/(1-μ))`, with `0 ln 0 = 0`.
pub fn ln_g(nu: f64, mu: f64) -> Result<f64> {
    check_open_unit("mu", mu)?;
    check_closed_unit("nu", nu)?;
    let head = if nu == 0.0 { 0.0 } else { -nu * (nu / mu).ln() };
    let tail = if nu == 1.0 {
        0.0
    } else {
        -(1.0 - nu) * ((1.0 - nu) / (1.0 - mu)).ln()
    };
    Ok(head + tail)
}

/// `G(ν, μ) = (μ/ν)^ν ((1-μ)/(1-ν))^(1-ν)`.
pub fn g_value(nu: f64, mu: f64) -> Result<f64> {
    Ok(ln_g(nu, mu)?.exp())
}

/// Bisection for an increasing sign change: `f(lo) < 0 < f(hi)`.
///
/// Stops when `|f(mid)| <= f_tol` or the bracket is narrower than `x_tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, f_tol: f64, x_tol: f64) -> f64 {
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..2000 {
        mid = 0.5 * (lo + hi);
        let value = f(mid);
        if value.abs() <= f_tol || hi - lo <= x_tol {
            break;
        }
        if value < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// The unique root in `(0, μ1)` of `1 + ρ ln G(ν, μ1) = 0`.
pub fn nu_star(rho: f64, mu1: f64) -> Result<f64> {
    check_open_unit("mu1", mu1)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            interval: "(0, inf)",
        });
    }
    let at_zero = 1.0 + rho * (1.0 - mu1).ln();
    if !(at_zero < 0.0) {
        return Err(Error::NoRootBelowMean { value: at_zero });
    }
    // ln G(., μ1) is increasing on (0, μ1), so the root is unique.
    let f = |nu: f64| 1.0 + rho * ln_g(nu, mu1).expect("nu stays in (0, mu1)");
    let mut eps = 1e-3 * mu1;
    let mut lo = eps;
    while f(lo) >= 0.0 && lo > f64::MIN_POSITIVE {
        lo *= 0.5;
    }
    let mut hi = mu1 - eps;
    while f(hi) <= 0.0 {
        eps *= 0.5;
        hi = mu1 - eps;
    }
    Ok(bisect(f, lo, hi, 1e-12, 1e-15))
}

/// `1 + ρ ln(Γ(1)^ν Γ(0)^(1-ν))`, affine and increasing in `ν`.
pub fn threshold_at(nu: f64, rho: f64, params: &MagParams) -> f64 {
    1.0 + rho * (nu * params.gamma1().ln() + (1.0 - nu) * params.gamma0().ln())
}

/// Scaling `n -> L_n = max(1, round(ρ ln n))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    rho: f64,
}

impl ScalingSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho.is_finite() {
            Ok(Self { rho })
        } else {
            Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                interval: "(0, inf)",
            })
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `L_n`.
    pub fn levels(&self, n: usize) -> usize {
        ((self.rho * (n as f64).ln()).round() as usize).max(1)
    }

    /// `ρ_n = L_n / ln n`, for `n >= 2`.
    pub fn rho_n(&self, n: usize) -> f64 {
        self.levels(n) as f64 / (n as f64).ln()
    }

    /// `floor(ν L_n)`, the level followed by a per-level diagnostic at `ν`.
    pub fn level_index(&self, n: usize, nu: f64) -> usize {
        (nu * self.levels(n) as f64).floor() as usize
    }

    /// Parameters of `M(n; L_n)` with the kernel of `base`.
    pub fn params_at(&self, n: usize, base: &MagParams) -> Result<MagParams> {
        base.with_size(n, self.levels(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `1 + ρ ln μ(0) > 0`.
    CaseOne,
    /// `1 + ρ ln μ(0) < 0`.
    CaseTwo,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictedLimit {
    Zero,
    One,
    Boundary,
}

/// Which zero-one law applies and which side of it the parameters fall on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub rho: f64,
    pub case: Case,
    /// `1 + ρ ln μ(0)`.
    pub discriminant: f64,
    /// `1 + ρ ln Γ(0)` in case one and on the boundary,
    /// `1 + ρ ln(Γ(1)^ν★ Γ(0)^(1-ν★))` in case two.
    pub threshold_value: f64,
    pub predicted_limit: PredictedLimit,
    pub nu_star: Option<f64>,
}

pub fn classify_regime(rho: f64, params: &MagParams) -> Result<RegimeReport> {
    let scaling = ScalingSpec::new(rho)?;
    let rho = scaling.rho();
    let discriminant = 1.0 + rho * params.pmf().mu0().ln();
    let (case, nu_star) = if discriminant.abs() <= BOUNDARY_TOL {
        (Case::Boundary, None)
    } else if discriminant > 0.0 {
        (Case::CaseOne, None)
    } else {
        (Case::CaseTwo, Some(nu_star(rho, params.pmf().mu1())?))
    };
    let threshold_value = threshold_at(nu_star.unwrap_or(0.0), rho, params);
    let predicted_limit = if case == Case::Boundary || threshold_value.abs() <= BOUNDARY_TOL {
        PredictedLimit::Boundary
    } else if threshold_value > 0.0 {
        PredictedLimit::One
    } else {
        PredictedLimit::Zero
    };
    Ok(RegimeReport {
        rho,
        case,
        discriminant,
        threshold_value,
        predicted_limit,
        nu_star,
    })
}

/// `(1 - (Γ(1)^ν Γ(0)^(1-ν))^(L_n))^(n-1)`.
pub fn finite_n_lemma_a(nu: f64, n: usize, scaling: &ScalingSpec, params: &MagParams) -> Result<f64> {
    check_closed_unit("nu", nu)?;
    let levels = scaling.levels(n) as f64;
    let base = (levels * (nu * params.gamma1().ln() + (1.0 - nu) * params.gamma0().ln())).exp();
    Ok(pow_one_minus(base, (n - 1) as f64))
}

/// `n c^(L_n) = n^(1 + ρ_n ln c)`.
pub fn finite_n_lemma_b(c: f64, n: usize, scaling: &ScalingSpec) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            interval: "(0, inf)",
        });
    }
    Ok(((n as f64).ln() + scaling.levels(n) as f64 * c.ln()).exp())
}

/// Expected number of nodes at level `k = round(ν L)`, exactly and through
/// the Stirling form `n G(ν̂, μ1)^L / sqrt(2π ν̂ (1-ν̂) L)` with `ν̂ = k/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StirlingComparison {
    pub levels: usize,
    pub level: usize,
    pub approx: f64,
    pub exact: f64,
}

impl StirlingComparison {
    pub fn relative_error(&self) -> f64 {
        (self.approx / self.exact - 1.0).abs()
    }
}

pub fn stirling_level_asymptote(
    n: usize,
    scaling: &ScalingSpec,
    nu: f64,
    pmf: &AttributePmf,
) -> Result<StirlingComparison> {
    stirling_at_levels(n, scaling.levels(n), nu, pmf)
}

/// [`stirling_level_asymptote`] for an explicit attribute count `L`.
pub fn stirling_at_levels(n: usize, levels: usize, nu: f64, pmf: &AttributePmf) -> Result<StirlingComparison> {
    check_open_unit("nu", nu)?;
    let level = (nu * levels as f64).round() as usize;
    if level < 1 || level + 1 > levels {
        return Err(Error::DegenerateLevel { level, levels });
    }
    let l = levels as f64;
    let nu_hat = level as f64 / l;
    let n = n as f64;
    let approx = n * (l * ln_g(nu_hat, pmf.mu1())?).exp() / (2.0 * PI * nu_hat * (1.0 - nu_hat) * l).sqrt();
    let exact = n * ln_binomial_pmf(levels, level, pmf.mu1().ln(), pmf.mu0().ln()).exp();
    Ok(StirlingComparison {
        levels,
        level,
        approx,
        exact,
    })
}
