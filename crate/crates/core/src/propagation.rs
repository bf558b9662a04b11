//! Large-scale propagation: the alpha-beta-gamma (ABG) path-loss model and the
//! elevation-angle LoS probability, with UMi/UMa parameter presets.
//!
//! Distances are meters, carrier frequency is GHz, BS density is per m².
//! Log-normal shadowing is not modeled.

use crate::error::{Error, Result};

/// Degrees per radian; the LoS model takes the elevation angle in degrees.
const DEG_PER_RAD: f64 = 180.0 / std::f64::consts::PI;

/// Minimum 3-D link distance in meters. The ABG model diverges as d -> 0 and
/// is not a valid measurement model below 1 m, so shorter links are clamped.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Parameters of the ABG path-loss model `L_dB = 10 α log10(d) + β + 10 γ log10(f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbgParams {
    /// Distance exponent (dimensionless, > 0).
    pub alpha: f64,
    /// Offset in dB at d = 1 m, f = 1 GHz.
    pub beta_db: f64,
    /// Frequency exponent (dimensionless, >= 0).
    pub gamma: f64,
}

impl AbgParams {
    pub fn new(alpha: f64, beta_db: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be > 0, got {alpha}"),
            });
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be >= 0, got {gamma}"),
            });
        }
        if !beta_db.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta_db",
                reason: format!("must be finite, got {beta_db}"),
            });
        }
        Ok(Self {
            alpha,
            beta_db,
            gamma,
        })
    }
}

/// Visibility state of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    Los,
    Nlos,
}

/// Deployment class, selecting an ABG parameter preset and a BS density range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Deployment {
    UMi,
    UMa,
}

impl Deployment {
    pub fn name(self) -> &'static str {
        match self {
            Deployment::UMi => "umi",
            Deployment::UMa => "uma",
        }
    }
}

impl std::str::FromStr for Deployment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "umi" => Ok(Deployment::UMi),
            "uma" => Ok(Deployment::UMa),
            other => Err(Error::UnknownDeployment(other.to_string())),
        }
    }
}

/// Propagation environment: per-link-type ABG parameters plus the constants
/// `a`, `b` of the elevation-angle LoS probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub los: AbgParams,
    pub nlos: AbgParams,
    /// LoS model constant a (logistic midpoint, in degrees of elevation).
    pub a: f64,
    /// LoS model constant b (logistic slope, per degree).
    pub b: f64,
    pub deployment: Deployment,
    /// Valid BS density range (min, max) in BS per m².
    pub density_range: (f64, f64),
}

impl Environment {
    /// Preset environment for a deployment class. Both presets use the urban
    /// LoS constants a = 9.6, b = 0.28; override the fields for other terrain.
    pub fn preset(deployment: Deployment) -> Self {
        match deployment {
            Deployment::UMi => Environment {
                los: AbgParams {
                    alpha: 2.0,
                    beta_db: 31.4,
                    gamma: 2.1,
                },
                nlos: AbgParams {
                    alpha: 3.5,
                    beta_db: 24.4,
                    gamma: 1.9,
                },
                a: 9.6,
                b: 0.28,
                deployment,
                density_range: (1e-5, 1e-3),
            },
            Deployment::UMa => Environment {
                los: AbgParams {
                    alpha: 2.8,
                    beta_db: 11.4,
                    gamma: 2.3,
                },
                nlos: AbgParams {
                    alpha: 3.3,
                    beta_db: 17.6,
                    gamma: 2.0,
                },
                a: 9.6,
                b: 0.28,
                deployment,
                density_range: (1e-7, 1e-5),
            },
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(Self::preset(name.parse::<Deployment>()?))
    }

    pub fn abg(&self, link: LinkType) -> &AbgParams {
        match link {
            LinkType::Los => &self.los,
            LinkType::Nlos => &self.nlos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !(self.b > 0.0) {
            return Err(Error::InvalidParameter {
                name: "a/b",
                reason: format!("LoS constants must be > 0, got a={}, b={}", self.a, self.b),
            });
        }
        if !(self.density_range.0 < self.density_range.1) {
            return Err(Error::InvalidParameter {
                name: "density_range",
                reason: format!(
                    "min {} must be < max {}",
                    self.density_range.0, self.density_range.1
                ),
            });
        }
        Ok(())
    }
}

/// Probability that a link of height difference `h` and horizontal distance
/// `r` is line-of-sight: `1 / (1 + a exp(-b (c atan(h/r) - a)))` with
/// c = 180/π.
///
/// `r = 0` with `h > 0` is the 90° elevation limit; `h = r = 0` leaves the
/// angle undefined and is rejected.
pub fn los_probability(h: f64, r: f64, env: &Environment) -> Result<f64> {
    if h == 0.0 && r == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(los_probability_raw(h, r, env.a, env.b))
}

/// Complement of [`los_probability`]; `P_L + P_NL = 1` holds exactly.
pub fn nlos_probability(h: f64, r: f64, env: &Environment) -> Result<f64> {
    Ok(1.0 - los_probability(h, r, env)?)
}

#[inline]
pub(crate) fn los_probability_raw(h: f64, r: f64, a: f64, b: f64) -> f64 {
    // atan2 yields the pi/2 limit for r = 0 without a special case.
    let elevation_deg = f64::atan2(h, r) * DEG_PER_RAD;
    1.0 / (1.0 + a * f64::exp(-b * (elevation_deg - a)))
}

/// ABG path loss in dB over the 3-D distance `sqrt(h² + r²)`, clamped to
/// [`MIN_DISTANCE_M`]. `f_ghz` is the carrier frequency in GHz.
pub fn pathloss_db(h: f64, r: f64, link: LinkType, env: &Environment, f_ghz: f64) -> Result<f64> {
    if !(f_ghz > 0.0) {
        return Err(Error::InvalidParameter {
            name: "f_ghz",
            reason: format!("carrier frequency must be > 0, got {f_ghz}"),
        });
    }
    let p = env.abg(link);
    let d = f64::hypot(h, r).max(MIN_DISTANCE_M);
    Ok(10.0 * p.alpha * d.log10() + p.beta_db + 10.0 * p.gamma * f_ghz.log10())
}

/// Linear power gain `10^(-pathloss_db/10)`; strictly positive and strictly
/// decreasing in `r` for fixed `h` (beyond the minimum-distance clamp).
pub fn path_gain(h: f64, r: f64, link: LinkType, env: &Environment, f_ghz: f64) -> Result<f64> {
    Ok(db_to_linear(-pathloss_db(h, r, link, env, f_ghz)?))
}

/// True when the 3-D distance falls below the model's validity floor and the
/// path-loss evaluation clamped it to [`MIN_DISTANCE_M`].
pub fn below_min_distance(h: f64, r: f64) -> bool {
    f64::hypot(h, r) < MIN_DISTANCE_M
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Precomputed linear-gain form of one ABG link: `gain(d) = k d^-alpha` with
/// `k = 10^(-beta/10) f^-gamma`. Algebraically identical to [`path_gain`];
/// used in integration kernels where the dB round trip would dominate cost.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinkGain {
    k: f64,
    alpha: f64,
}

impl LinkGain {
    pub(crate) fn new(env: &Environment, link: LinkType, f_ghz: f64) -> Self {
        let p = env.abg(link);
        LinkGain {
            k: db_to_linear(-p.beta_db) * f_ghz.powf(-p.gamma),
            alpha: p.alpha,
        }
    }

    /// Gain at 3-D distance `d` (meters), clamped to the validity floor.
    #[inline]
    pub(crate) fn gain_at(&self, d: f64) -> f64 {
        self.k * d.max(MIN_DISTANCE_M).powf(-self.alpha)
    }

    /// Gain at height `h` and horizontal distance `r`.
    #[inline]
    pub(crate) fn gain(&self, h: f64, r: f64) -> f64 {
        self.gain_at(f64::hypot(h, r))
    }
}
