//! Synthetic thermograms with known bridge geometry.
//!
//! A pillar shows up as a straight vertical cold stripe; a beam-pillar joint
//! as an L: the pillar stripe plus a horizontal beam stripe meeting it at a
//! corner.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::SegmentationMask;
use crate::signal::{GridImage, Unit};

pub const MIN_PHANTOM_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    Pillar,
    BeamPillarJoint,
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhantomKind::Pillar => "pillar",
            PhantomKind::BeamPillarJoint => "beam_pillar_joint",
        })
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pillar" => Ok(PhantomKind::Pillar),
            "beam_pillar_joint" | "joint" => Ok(PhantomKind::BeamPillarJoint),
            _ => Err(Error::invalid(format!("unknown phantom `{s}` (pillar | beam_pillar_joint)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub rows: usize,
    pub cols: usize,
    /// Bridge temperature, °C.
    pub t_bridge: f64,
    /// Undisturbed wall temperature, °C.
    pub t_wall: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// Winter inner-wall defaults: 18.5 °C bridge on a 22.5 °C wall.
    pub fn new(kind: PhantomKind, rows: usize, cols: usize) -> Self {
        PhantomSpec {
            kind,
            rows,
            cols,
            t_bridge: 18.5,
            t_wall: 22.5,
            noise_sigma: 0.2,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rows < MIN_PHANTOM_SIZE || self.cols < MIN_PHANTOM_SIZE {
            return Err(Error::invalid(format!(
                "phantom must be at least {MIN_PHANTOM_SIZE}x{MIN_PHANTOM_SIZE}, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.t_bridge.is_finite() && self.t_wall.is_finite()) || self.t_bridge == self.t_wall {
            return Err(Error::invalid("bridge and wall temperatures must be finite and distinct"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid(format!("noise sigma must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }

    /// Whether 0-based pixel `(r, c)` belongs to the bridge.
    fn inside(&self, r: usize, c: usize) -> bool {
        let (n, m) = (self.rows, self.cols);
        let stripe = m / 5;
        let c0 = (m - stripe) / 2;
        let pillar = (c0..c0 + stripe).contains(&c);
        match self.kind {
            PhantomKind::Pillar => pillar,
            PhantomKind::BeamPillarJoint => {
                let beam = n / 5;
                let r0 = n / 4;
                (pillar && r >= r0) || ((r0..r0 + beam).contains(&r) && c >= c0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: GridImage,
    pub truth: SegmentationMask,
}

pub fn phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let (n, m) = (spec.rows, spec.cols);
    let truth: Vec<bool> = (0..n * m).map(|p| spec.inside(p / m, p % m)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let values = truth
        .iter()
        .map(|&b| {
            let base = if b { spec.t_bridge } else { spec.t_wall };
            if spec.noise_sigma > 0.0 {
                base + noise.sample(&mut rng)
            } else {
                base
            }
        })
        .collect();
    Ok(Phantom {
        image: GridImage::new(n, m, values, Unit::Celsius)?,
        truth: SegmentationMask::new(n, m, truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::segment;

    #[test]
    fn noiseless_pillar_is_the_stripe() {
        let mut spec = PhantomSpec::new(PhantomKind::Pillar, 40, 50);
        spec.noise_sigma = 0.0;
        let p = phantom(&spec).unwrap();
        let mask = segment(&p.image, 0.5 * (spec.t_bridge + spec.t_wall), true);
        assert_eq!(mask, p.truth);
        assert_eq!(p.truth.bridge_area(), 40 * 10);
        // A straight stripe: every row identical.
        for r in 1..40 {
            assert_eq!(p.image.row(r), p.image.row(0));
        }
    }

    #[test]
    fn joint_is_l_shaped() {
        let mut spec = PhantomSpec::new(PhantomKind::BeamPillarJoint, 40, 40);
        spec.noise_sigma = 0.0;
        let t = phantom(&spec).unwrap().truth;
        // corner, pillar below it, beam to its right, empty above the beam
        assert!(t.get(10, 16) && t.get(39, 16) && t.get(12, 39));
        assert!(!t.get(0, 16) && !t.get(39, 39) && !t.get(12, 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = PhantomSpec::new(PhantomKind::BeamPillarJoint, 32, 32);
        assert_eq!(phantom(&spec).unwrap(), phantom(&spec).unwrap());
        let other = PhantomSpec { seed: 1, ..spec.clone() };
        assert_ne!(phantom(&spec).unwrap().image, phantom(&other).unwrap().image);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(phantom(&PhantomSpec::new(PhantomKind::Pillar, 31, 64)).is_err());
        let same = PhantomSpec { t_wall: 18.5, ..PhantomSpec::new(PhantomKind::Pillar, 32, 32) };
        assert!(phantom(&same).is_err());
        assert!("joint".parse::<PhantomKind>().is_ok());
        assert!("beam-pillar-joint".parse::<PhantomKind>().is_ok());
        assert!("wall".parse::<PhantomKind>().is_err());
    }
}
