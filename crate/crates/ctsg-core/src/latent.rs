//! Bracketed linear blending of mean latent vectors over a single numeric
//! condition.
//!
//! For a single altered numeric condition, the selected subset's
//! `(condition value, mean latent)` pairs form a piecewise-linear map:
//! values inside the observed range interpolate between their tightest
//! bracketing pair, values outside extrapolate from the two extreme pairs on
//! that side. Multi-condition edits go through the mapping regressor
//! instead.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Sorted `(condition value, mean latent)` pairs, strictly increasing in the
/// condition value; duplicate values are collapsed to the mean latent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionLatentPairs {
    cs: Vec<f64>,
    mus: Vec<Vec<f64>>,
}

impl ConditionLatentPairs {
    /// Build from raw samples: sorts by condition value and averages the
    /// latents of exact-duplicate values.
    pub fn from_samples(samples: &[(f64, Vec<f64>)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("condition-latent samples"));
        }
        let width = samples[0].1.len();
        for (c, mu) in samples {
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    what: "condition value",
                });
            }
            if mu.len() != width {
                return Err(Error::DimensionMismatch {
                    what: "latent width",
                    expected: width,
                    got: mu.len(),
                });
            }
            math::ensure_finite(mu, "mean latent")?;
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].0.partial_cmp(&samples[b].0).unwrap());
        let mut cs: Vec<f64> = Vec::new();
        let mut mus: Vec<Vec<f64>> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for &i in &order {
            let (c, mu) = &samples[i];
            if let Some(last) = cs.last() {
                if *last == *c {
                    let acc = mus.last_mut().unwrap();
                    for (a, v) in acc.iter_mut().zip(mu.iter()) {
                        *a += v;
                    }
                    *counts.last_mut().unwrap() += 1;
                    continue;
                }
            }
            cs.push(*c);
            mus.push(mu.clone());
            counts.push(1);
        }
        for (mu, &count) in mus.iter_mut().zip(counts.iter()) {
            if count > 1 {
                let inv = 1.0 / count as f64;
                mu.iter_mut().for_each(|v| *v *= inv);
            }
        }
        Ok(ConditionLatentPairs { cs, mus })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cs.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.cs
    }

    #[inline]
    pub fn latents(&self) -> &[Vec<f64>] {
        &self.mus
    }

    #[inline]
    pub fn min_value(&self) -> f64 {
        self.cs[0]
    }

    #[inline]
    pub fn max_value(&self) -> f64 {
        self.cs[self.cs.len() - 1]
    }

    fn require_two(&self) -> Result<()> {
        if self.cs.len() < 2 {
            Err(Error::Empty("condition-latent pairs (need at least 2)"))
        } else {
            Ok(())
        }
    }
}

/// Which regime produced a blended latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlendMode {
    /// The altered value coincides with a stored pair.
    Exact,
    /// Inside the stored range: linear interpolation.
    Interp,
    /// Above the stored range: linear extrapolation from the top two pairs.
    ExtrapAbove,
    /// Below the stored range: linear extrapolation from the bottom two.
    ExtrapBelow,
}

/// The bracket and coefficient behind a blended latent. Interpolation keeps
/// the coefficient in `[0, 1]`; extrapolation pushes it above 1 on the
/// matching side.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendWitness {
    pub mode: BlendMode,
    pub left_c: f64,
    pub right_c: f64,
    pub coefficient: f64,
}

/// Bracket located by [`bracket`]: indices into the pair list plus the mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bracket {
    pub mode: BlendMode,
    pub left: usize,
    pub right: usize,
}

/// Binary-search the tightest bracket for an altered value. Exact hits
/// return `left == right`; out-of-range values return the two extreme pairs
/// on that side.
pub fn bracket(pairs: &ConditionLatentPairs, c0_prime: f64) -> Result<Bracket> {
    pairs.require_two()?;
    if !c0_prime.is_finite() {
        return Err(Error::NonFinite {
            what: "altered condition value",
        });
    }
    let cs = pairs.values();
    let n = cs.len();
    let idx = cs.partition_point(|&c| c < c0_prime);
    if idx < n && cs[idx] == c0_prime {
        return Ok(Bracket {
            mode: BlendMode::Exact,
            left: idx,
            right: idx,
        });
    }
    if idx == 0 {
        return Ok(Bracket {
            mode: BlendMode::ExtrapBelow,
            left: 0,
            right: 1,
        });
    }
    if idx == n {
        return Ok(Bracket {
            mode: BlendMode::ExtrapAbove,
            left: n - 2,
            right: n - 1,
        });
    }
    Ok(Bracket {
        mode: BlendMode::Interp,
        left: idx - 1,
        right: idx,
    })
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b.iter()).map(|(x, y)| x + t * (y - x)).collect()
}

/// Linear interpolation inside the stored range:
/// `mu = mu_left + alpha (mu_right - mu_left)` with
/// `alpha = (c0' - c_left) / (c_right - c_left)`. Exact hits return the
/// stored latent.
pub fn interpolate(
    pairs: &ConditionLatentPairs,
    c0_prime: f64,
) -> Result<(Vec<f64>, BlendWitness)> {
    let b = bracket(pairs, c0_prime)?;
    match b.mode {
        BlendMode::Exact => Ok((
            pairs.latents()[b.left].clone(),
            BlendWitness {
                mode: BlendMode::Exact,
                left_c: c0_prime,
                right_c: c0_prime,
                coefficient: 0.0,
            },
        )),
        BlendMode::Interp => {
            let (cl, cr) = (pairs.values()[b.left], pairs.values()[b.right]);
            let alpha = (c0_prime - cl) / (cr - cl);
            let mu = lerp(&pairs.latents()[b.left], &pairs.latents()[b.right], alpha);
            Ok((
                mu,
                BlendWitness {
                    mode: BlendMode::Interp,
                    left_c: cl,
                    right_c: cr,
                    coefficient: alpha,
                },
            ))
        }
        BlendMode::ExtrapAbove | BlendMode::ExtrapBelow => Err(Error::OutOfRange {
            value: c0_prime,
            min: pairs.min_value(),
            max: pairs.max_value(),
        }),
    }
}

/// Linear extrapolation outside the stored range, from the two extreme
/// pairs on the matching side. Above the range:
/// `mu = mu_second_top + beta (mu_top - mu_second_top)` with
/// `beta = (c0' - c_second_top) / (c_top - c_second_top)`; the below-range
/// case mirrors it. Values equal to a range end return the stored extreme
/// (coefficient 1), keeping the boundary continuous.
pub fn extrapolate(
    pairs: &ConditionLatentPairs,
    c0_prime: f64,
) -> Result<(Vec<f64>, BlendWitness)> {
    pairs.require_two()?;
    if !c0_prime.is_finite() {
        return Err(Error::NonFinite {
            what: "altered condition value",
        });
    }
    let n = pairs.len();
    let (min, max) = (pairs.min_value(), pairs.max_value());
    if c0_prime > min && c0_prime < max {
        return Err(Error::InRange {
            value: c0_prime,
            min,
            max,
        });
    }
    let (mode, base, toward) = if c0_prime >= max {
        // base = second-from-top, toward = top extreme.
        (BlendMode::ExtrapAbove, n - 2, n - 1)
    } else {
        // base = second-from-bottom, toward = bottom extreme.
        (BlendMode::ExtrapBelow, 1, 0)
    };
    let (cb, ct) = (pairs.values()[base], pairs.values()[toward]);
    if ct == cb {
        return Err(Error::DegenerateBracket);
    }
    let coefficient = (c0_prime - cb) / (ct - cb);
    let mu = lerp(&pairs.latents()[base], &pairs.latents()[toward], coefficient);
    math::ensure_finite(&mu, "extrapolated latent")?;
    Ok((
        mu,
        BlendWitness {
            mode,
            left_c: cb.min(ct),
            right_c: cb.max(ct),
            coefficient,
        },
    ))
}

/// Dispatch: exact hits and in-range values interpolate, out-of-range
/// values extrapolate. Continuous in the altered value across the range
/// boundary.
pub fn blend(pairs: &ConditionLatentPairs, c0_prime: f64) -> Result<(Vec<f64>, BlendWitness)> {
    let b = bracket(pairs, c0_prime)?;
    match b.mode {
        BlendMode::Exact | BlendMode::Interp => interpolate(pairs, c0_prime),
        BlendMode::ExtrapAbove | BlendMode::ExtrapBelow => extrapolate(pairs, c0_prime),
    }
}
