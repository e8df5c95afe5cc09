//! Kernels, profiles and the pairwise connection probability
//! `rho(g(t_x, t_y) |x - y| / beta)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Result};
use crate::point_process::Vertex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelVariant {
    Constant,
    Sum,
    Min,
    Product,
    PreferentialAttachment,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 5] = [
        KernelVariant::Constant,
        KernelVariant::Sum,
        KernelVariant::Min,
        KernelVariant::Product,
        KernelVariant::PreferentialAttachment,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelVariant::Constant => "constant",
            KernelVariant::Sum => "sum",
            KernelVariant::Min => "min",
            KernelVariant::Product => "product",
            KernelVariant::PreferentialAttachment => "preferential-attachment",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "constant" => Some(KernelVariant::Constant),
            "sum" => Some(KernelVariant::Sum),
            "min" => Some(KernelVariant::Min),
            "product" | "prod" => Some(KernelVariant::Product),
            "preferential-attachment" | "pa" => Some(KernelVariant::PreferentialAttachment),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    #[serde(default)]
    pub gamma: f64,
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, gamma: f64) -> Result<Self> {
        let k = Self { variant, gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(param(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        Ok(())
    }

    /// `g(s, t)` without argument checks; callers guarantee `s, t` in (0, 1].
    #[inline]
    pub fn eval_unchecked(&self, s: f64, t: f64) -> f64 {
        let g = self.gamma;
        match self.variant {
            KernelVariant::Constant => 1.0,
            KernelVariant::Sum => 1.0 / (s.powf(-g) + t.powf(-g)),
            KernelVariant::Min => s.min(t).powf(g),
            KernelVariant::Product => (s * t).powf(g),
            KernelVariant::PreferentialAttachment => {
                let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
                lo.powf(g) * hi.powf(1.0 - g)
            }
        }
    }

    /// `g(s, t)` for marks in the open unit interval.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        check_mark(s)?;
        check_mark(t)?;
        Ok(self.eval_unchecked(s, t))
    }

    /// `1 + 1/gamma`, the degree power-law exponent, when `gamma > 0`.
    pub fn tau(&self) -> Option<f64> {
        (self.gamma > 0.0 && self.variant != KernelVariant::Constant).then(|| 1.0 + 1.0 / self.gamma)
    }
}

fn check_mark(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("mark {t} is outside (0, 1)")))
    }
}

pub fn kernel_eval(k: &KernelSpec, s: f64, t: f64) -> Result<f64> {
    k.eval(s, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileVariant {
    /// `1 ∧ z^{-δ}`
    HardPolynomial,
    /// `1 - exp(-z^{-δ})`
    ExponentialPolynomial,
    /// `ρ₀ (1 ∧ z^{-δ})`
    CappedPolynomial,
}

impl ProfileVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileVariant::HardPolynomial => "hard-polynomial",
            ProfileVariant::ExponentialPolynomial => "exponential-polynomial",
            ProfileVariant::CappedPolynomial => "capped-polynomial",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "hard-polynomial" | "hard" => Some(ProfileVariant::HardPolynomial),
            "exponential-polynomial" | "exp" => Some(ProfileVariant::ExponentialPolynomial),
            "capped-polynomial" | "capped" => Some(ProfileVariant::CappedPolynomial),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub variant: ProfileVariant,
    pub delta: f64,
    #[serde(default)]
    pub cap: Option<f64>,
}

impl ProfileSpec {
    pub fn new(variant: ProfileVariant, delta: f64, cap: Option<f64>) -> Result<Self> {
        let p = Self { variant, delta, cap };
        p.validate()?;
        Ok(p)
    }

    pub fn hard(delta: f64) -> Self {
        Self {
            variant: ProfileVariant::HardPolynomial,
            delta,
            cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 1.0 && self.delta.is_finite()) {
            return Err(param(format!("delta must exceed 1, got {}", self.delta)));
        }
        match (self.variant, self.cap) {
            (ProfileVariant::CappedPolynomial, Some(c)) if c > 0.0 && c <= 1.0 => Ok(()),
            (ProfileVariant::CappedPolynomial, c) => Err(param(format!("capped profile needs cap in (0, 1], got {c:?}"))),
            _ => Ok(()),
        }
    }

    /// `ρ(0+)`.
    pub fn at_zero(&self) -> f64 {
        match self.variant {
            ProfileVariant::CappedPolynomial => self.cap.unwrap_or(1.0),
            _ => 1.0,
        }
    }

    #[inline]
    pub fn eval_unchecked(&self, z: f64) -> f64 {
        match self.variant {
            ProfileVariant::HardPolynomial => {
                if z <= 1.0 {
                    1.0
                } else {
                    z.powf(-self.delta)
                }
            }
            ProfileVariant::ExponentialPolynomial => {
                if z <= 0.0 {
                    1.0
                } else {
                    -(-z.powf(-self.delta)).exp_m1()
                }
            }
            ProfileVariant::CappedPolynomial => {
                let c = self.cap.unwrap_or(1.0);
                if z <= 1.0 {
                    c
                } else {
                    c * z.powf(-self.delta)
                }
            }
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(domain(format!("profile argument must be non-negative, got {z}")));
        }
        Ok(self.eval_unchecked(z))
    }

    /// `∫₀^∞ ρ(z) dz`.
    pub fn integral(&self) -> f64 {
        let d = self.delta;
        match self.variant {
            ProfileVariant::HardPolynomial => 1.0 + 1.0 / (d - 1.0),
            ProfileVariant::CappedPolynomial => self.cap.unwrap_or(1.0) * (1.0 + 1.0 / (d - 1.0)),
            // ∫ 1 - exp(-z^{-δ}) dz = Γ(1 - 1/δ)
            ProfileVariant::ExponentialPolynomial => gamma_fn(1.0 - 1.0 / d),
        }
    }
}

pub fn profile_eval(p: &ProfileSpec, z: f64) -> Result<f64> {
    p.eval(z)
}

/// Lanczos approximation, accurate to ~1e-15 on (0, 2].
fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kernel: KernelSpec,
    pub profile: ProfileSpec,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(kernel: KernelSpec, profile: ProfileSpec, beta: f64) -> Result<Self> {
        let m = Self { kernel, profile, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.profile.validate()?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(param(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    /// Connection probability for marks `s, t` at distance `d`.
    #[inline]
    pub fn probability(&self, s: f64, t: f64, d: f64) -> f64 {
        self.profile.eval_unchecked(self.kernel.eval_unchecked(s, t) * d / self.beta)
    }
}

pub fn connection_probability(m: &ModelParams, a: &Vertex, b: &Vertex) -> Result<f64> {
    if a.index == b.index {
        return Err(domain(format!("self-loop requested at vertex {}", a.index)));
    }
    check_mark(a.mark)?;
    check_mark(b.mark)?;
    Ok(m.probability(a.mark, b.mark, (a.location - b.location).abs()))
}
