//! Sampling windows for random evaluation.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symexpr::{Bindings, EvalError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("no sampling window for `{0}`")]
    MissingWindow(String),
    #[error("sampling exhausted after {attempts} attempts: {last}")]
    Exhausted { attempts: usize, last: EvalError },
    #[error("invalid window for `{name}`: {reason}")]
    InvalidWindow { name: String, reason: String },
}

/// Excluded neighbourhood `[center - radius, center + radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub center: f64,
    pub radius: f64,
}

/// Closed sampling interval with excluded pole neighbourhoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub poles: Vec<Pole>,
}

impl SampleWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        SampleWindow {
            lo,
            hi,
            poles: Vec::new(),
        }
    }

    pub fn with_pole(mut self, center: f64, radius: f64) -> Self {
        self.poles.push(Pole { center, radius });
        self
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn near_pole(&self, v: f64) -> bool {
        self.poles.iter().any(|p| (v - p.center).abs() <= p.radius)
    }

    /// `lo < hi` and no pole neighbourhood intersects `[lo, hi]`.
    pub fn validate(&self, name: &str) -> Result<(), SampleError> {
        let bad = |reason: String| SampleError::InvalidWindow {
            name: name.into(),
            reason,
        };
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(bad(format!(
                "need finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        for p in &self.poles {
            if p.center + p.radius >= self.lo && p.center - p.radius <= self.hi {
                return Err(bad(format!(
                    "pole at {} (radius {}) intersects [{}, {}]",
                    p.center, p.radius, self.lo, self.hi
                )));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

/// Per-symbol windows plus symbols pinned to fixed values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Windows {
    windows: BTreeMap<String, SampleWindow>,
    fixed: Bindings,
    /// Redraws allowed per requested sample.
    pub retries: usize,
}

impl Windows {
    pub fn new() -> Self {
        Windows {
            retries: 50,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, w: SampleWindow) {
        self.windows.insert(name.into(), w);
    }

    pub fn fix(&mut self, name: impl Into<String>, value: f64) {
        self.fixed.set(name, value);
    }

    pub fn get(&self, name: &str) -> Option<&SampleWindow> {
        self.windows.get(name)
    }

    pub fn fixed(&self) -> &Bindings {
        &self.fixed
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SampleWindow)> {
        self.windows.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        self.windows.iter().try_for_each(|(n, w)| w.validate(n))
    }

    /// One random point covering `names`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        names: &BTreeSet<String>,
        rng: &mut R,
    ) -> Result<Bindings, SampleError> {
        let mut b = Bindings::new();
        for n in names {
            if let Some(v) = self.fixed.get(n) {
                b.set(n.clone(), v);
                continue;
            }
            let w = self
                .windows
                .get(n)
                .ok_or_else(|| SampleError::MissingWindow(n.clone()))?;
            let mut v = w.sample(rng);
            let mut guard = 0;
            while w.near_pole(v) && guard < 1000 {
                v = w.sample(rng);
                guard += 1;
            }
            b.set(n.clone(), v);
        }
        Ok(b)
    }

    /// Draws points until `f` succeeds, up to `retries` redraws.
    pub fn sample_eval<T, R: Rng + ?Sized>(
        &self,
        names: &BTreeSet<String>,
        rng: &mut R,
        mut f: impl FnMut(&Bindings) -> Result<T, EvalError>,
    ) -> Result<T, SampleError> {
        let mut last = EvalError::NonFinite;
        for _ in 0..=self.retries {
            let b = self.sample(names, rng)?;
            match f(&b) {
                Ok(v) => return Ok(v),
                Err(EvalError::Unbound(n)) => return Err(SampleError::MissingWindow(n)),
                Err(e) => last = e,
            }
        }
        Err(SampleError::Exhausted {
            attempts: self.retries + 1,
            last,
        })
    }
}
