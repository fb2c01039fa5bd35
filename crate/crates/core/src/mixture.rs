//! Model definition: the mixture `xi(x, y) = sum beta_{p,q}^2 x^p y^q`, the
//! split ratio `gamma = lim N1/N` and the external fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on `sum 2^(p+q) beta_{p,q}^2`.
pub const DEFAULT_DECAY_CAP: f64 = 1e12;

/// Radicands of `alpha_i^2` above `-ALPHA_RADICAND_TOL` are clamped to zero.
pub const ALPHA_RADICAND_TOL: f64 = 1e-12;

/// One mixture term `beta_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub p: u32,
    pub q: u32,
    pub beta: f64,
}

/// The full model: mixture coefficients, split ratio and fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub coefficients: Vec<Coefficient>,
    pub gamma: f64,
    #[serde(default)]
    pub h1: f64,
    #[serde(default)]
    pub h2: f64,
}

/// Value and partial derivatives of `xi` up to second order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XiJet {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

/// A one-party mixture `sum_k c_k x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    /// `(degree, squared coefficient)` pairs, sorted by degree.
    pub terms: Vec<(u32, f64)>,
}

impl Marginal {
    /// `(f(x), f'(x), f''(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for &(k, c) in &self.terms {
            let k = k as i32;
            let kf = k as f64;
            out.0 += c * x.powi(k);
            out.1 += c * kf * x.powi(k - 1);
            if k >= 2 {
                out.2 += c * kf * (kf - 1.0) * x.powi(k - 2);
            }
        }
        out
    }
}

/// Scalars derived from the mixture at `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConstants {
    pub gamma: f64,
    pub xi11: f64,
    pub xi1p: f64,
    pub xi2p: f64,
    pub xi1pp: f64,
    pub xi2pp: f64,
    /// Mixed partial `d_x d_y xi(1,1)`; equals `xi1p * xi2p` for a normalized pure model.
    pub xi12: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma_star: f64,
    pub marginal1: Marginal,
    pub marginal2: Marginal,
}

impl MixtureConstants {
    pub fn xi_p(&self, party: usize) -> f64 {
        if party == 1 {
            self.xi1p
        } else {
            self.xi2p
        }
    }

    pub fn xi_pp(&self, party: usize) -> f64 {
        if party == 1 {
            self.xi1pp
        } else {
            self.xi2pp
        }
    }

    pub fn alpha(&self, party: usize) -> f64 {
        if party == 1 {
            self.alpha1
        } else {
            self.alpha2
        }
    }

    /// Split weight of a party: `gamma` for party 1, `1 - gamma` for party 2.
    pub fn weight(&self, party: usize) -> f64 {
        if party == 1 {
            self.gamma
        } else {
            1.0 - self.gamma
        }
    }
}

impl MixtureSpec {
    /// A single-term model `beta * H_{p,q}`.
    pub fn pure(p: u32, q: u32, beta: f64, gamma: f64) -> Self {
        Self {
            coefficients: vec![Coefficient { p, q, beta }],
            gamma,
            h1: 0.0,
            h2: 0.0,
        }
    }

    pub fn with_fields(mut self, h1: f64, h2: f64) -> Self {
        self.h1 = h1;
        self.h2 = h2;
        self
    }

    pub fn validate(&self) -> Result<&Self> {
        self.validate_with_cap(DEFAULT_DECAY_CAP)
    }

    pub fn validate_with_cap(&self, cap: f64) -> Result<&Self> {
        let mut seen = BTreeMap::new();
        let mut any_positive = false;
        let mut decay = 0.0;
        for c in &self.coefficients {
            if c.p == 0 || c.q == 0 {
                return Err(Error::BadDegree { p: c.p, q: c.q });
            }
            if !(c.beta >= 0.0) || !c.beta.is_finite() {
                return Err(Error::NegativeCoefficient {
                    p: c.p,
                    q: c.q,
                    beta: c.beta,
                });
            }
            if seen.insert((c.p, c.q), ()).is_some() {
                return Err(Error::DuplicateTerm { p: c.p, q: c.q });
            }
            any_positive |= c.beta > 0.0;
            decay += 2f64.powi((c.p + c.q) as i32) * c.beta * c.beta;
        }
        if !any_positive {
            return Err(Error::EmptyMixture);
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::BadGamma(self.gamma));
        }
        if !self.h1.is_finite() {
            return Err(Error::BadField {
                party: 1,
                value: self.h1,
            });
        }
        if !self.h2.is_finite() {
            return Err(Error::BadField {
                party: 2,
                value: self.h2,
            });
        }
        if decay > cap {
            return Err(Error::DecayCapExceeded { sum: decay, cap });
        }
        Ok(self)
    }

    /// Terms with a strictly positive coefficient.
    pub fn active_terms(&self) -> impl Iterator<Item = &Coefficient> {
        self.coefficients.iter().filter(|c| c.beta > 0.0)
    }

    pub fn xi(&self, x: f64, y: f64) -> f64 {
        self.active_terms()
            .map(|c| c.beta * c.beta * x.powi(c.p as i32) * y.powi(c.q as i32))
            .sum()
    }

    /// Exact polynomial evaluation of `xi` and all its partials up to order 2.
    ///
    /// Arguments outside `[0,1]` are allowed; the polynomial is total on the reals.
    pub fn xi_jet(&self, x: f64, y: f64) -> XiJet {
        let mut jet = XiJet::default();
        for c in self.active_terms() {
            let b2 = c.beta * c.beta;
            let (p, q) = (c.p as i32, c.q as i32);
            let (pf, qf) = (p as f64, q as f64);
            let xp = x.powi(p);
            let yq = y.powi(q);
            let xp1 = pf * x.powi(p - 1);
            let yq1 = qf * y.powi(q - 1);
            let xp2 = if p >= 2 { pf * (pf - 1.0) * x.powi(p - 2) } else { 0.0 };
            let yq2 = if q >= 2 { qf * (qf - 1.0) * y.powi(q - 2) } else { 0.0 };
            jet.value += b2 * xp * yq;
            jet.dx += b2 * xp1 * yq;
            jet.dy += b2 * xp * yq1;
            jet.dxx += b2 * xp2 * yq;
            jet.dxy += b2 * xp1 * yq1;
            jet.dyy += b2 * xp * yq2;
        }
        jet
    }

    /// Marginal mixtures `xi^1(x) = sum_p (sum_q beta_{p,q}^2) x^p` and symmetrically `xi^2`.
    pub fn marginals(&self) -> (Marginal, Marginal) {
        let mut m1: BTreeMap<u32, f64> = BTreeMap::new();
        let mut m2: BTreeMap<u32, f64> = BTreeMap::new();
        for c in self.active_terms() {
            *m1.entry(c.p).or_default() += c.beta * c.beta;
            *m2.entry(c.q).or_default() += c.beta * c.beta;
        }
        (
            Marginal {
                terms: m1.into_iter().collect(),
            },
            Marginal {
                terms: m2.into_iter().collect(),
            },
        )
    }

    pub fn constants(&self) -> Result<MixtureConstants> {
        self.validate()?;
        let jet = self.xi_jet(1.0, 1.0);
        let alpha = |party: u8, xp: f64, xpp: f64| -> Result<f64> {
            let radicand = xpp + xp - xp * xp;
            if radicand < -ALPHA_RADICAND_TOL {
                return Err(Error::AlphaUndefined { party, radicand });
            }
            Ok(radicand.max(0.0).sqrt())
        };
        let g = self.gamma;
        let (marginal1, marginal2) = self.marginals();
        Ok(MixtureConstants {
            gamma: g,
            xi11: jet.value,
            xi1p: jet.dx,
            xi2p: jet.dy,
            xi1pp: jet.dxx,
            xi2pp: jet.dyy,
            xi12: jet.dxy,
            alpha1: alpha(1, jet.dx, jet.dxx)?,
            alpha2: alpha(2, jet.dy, jet.dyy)?,
            gamma_star: (g / (1.0 - g)).max((1.0 - g) / g),
            marginal1,
            marginal2,
        })
    }

    /// Rescales every `beta` so that `xi(1,1) = 1`.
    pub fn normalize_to_unit_variance(&self) -> Result<MixtureSpec> {
        let xi11 = self.xi(1.0, 1.0);
        if !(xi11 > 0.0) {
            return Err(Error::EmptyMixture);
        }
        let scale = xi11.sqrt().recip();
        let mut out = self.clone();
        for c in &mut out.coefficients {
            c.beta *= scale;
        }
        Ok(out)
    }

    /// `Some((p, q))` when exactly one term is active.
    pub fn pure_degrees(&self) -> Option<(u32, u32)> {
        let mut it = self.active_terms();
        let first = it.next()?;
        if it.next().is_some() {
            None
        } else {
            Some((first.p, first.q))
        }
    }

    /// True when `xi(x, y)` is a multiple of `xy`; excluded from the complexity bounds.
    pub fn is_bilinear(&self) -> bool {
        self.pure_degrees() == Some((1, 1))
    }

    /// The relabeled model with parties 1 and 2 exchanged.
    pub fn swapped(&self) -> MixtureSpec {
        MixtureSpec {
            coefficients: self
                .coefficients
                .iter()
                .map(|c| Coefficient {
                    p: c.q,
                    q: c.p,
                    beta: c.beta,
                })
                .collect(),
            gamma: 1.0 - self.gamma,
            h1: self.h2,
            h2: self.h1,
        }
    }

    pub fn max_degrees(&self) -> (u32, u32) {
        self.active_terms()
            .fold((0, 0), |(a, b), c| (a.max(c.p), b.max(c.q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn half_half() -> MixtureSpec {
        let b = 0.5f64.sqrt();
        MixtureSpec {
            coefficients: vec![
                Coefficient { p: 2, q: 1, beta: b },
                Coefficient { p: 1, q: 2, beta: b },
            ],
            gamma: 0.5,
            h1: 0.0,
            h2: 0.0,
        }
    }

    #[test]
    fn validate_accepts_and_rejects() {
        assert!(MixtureSpec::pure(2, 2, 1.0, 0.5).validate().is_ok());
        assert_eq!(
            MixtureSpec::pure(2, 2, 0.0, 0.5).validate(),
            Err(Error::EmptyMixture)
        );
        assert_eq!(
            MixtureSpec::pure(2, 2, 1.0, 1.0).validate(),
            Err(Error::BadGamma(1.0))
        );
        assert!(matches!(
            MixtureSpec::pure(2, 2, -0.1, 0.5).validate(),
            Err(Error::NegativeCoefficient { .. })
        ));
        assert!(matches!(
            MixtureSpec::pure(0, 2, 1.0, 0.5).validate(),
            Err(Error::BadDegree { .. })
        ));
        let mut dup = MixtureSpec::pure(2, 2, 1.0, 0.5);
        dup.coefficients.push(Coefficient { p: 2, q: 2, beta: 0.3 });
        assert!(matches!(dup.validate(), Err(Error::DuplicateTerm { .. })));
        assert!(matches!(
            MixtureSpec::pure(2, 2, 1.0, 0.5).validate_with_cap(1.0),
            Err(Error::DecayCapExceeded { .. })
        ));
    }

    #[test]
    fn jet_of_pure_22() {
        let s = MixtureSpec::pure(2, 2, 1.0, 0.5);
        let j = s.xi_jet(1.0, 1.0);
        assert_eq!((j.value, j.dx, j.dy, j.dxx, j.dxy, j.dyy), (1.0, 2.0, 2.0, 2.0, 4.0, 2.0));
        let z = s.xi_jet(0.0, 0.0);
        assert_eq!((z.value, z.dx, z.dy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn jet_of_half_half() {
        // xi = x^2 y / 2 + x y^2 / 2: d_x = x y + y^2 / 2, d_xx = y
        let j = half_half().xi_jet(1.0, 1.0);
        assert_abs_diff_eq!(j.value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.dx, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(j.dxx, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.dxy, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn constants_examples() {
        let c = MixtureSpec::pure(2, 2, 1.0, 0.5).constants().unwrap();
        assert_eq!((c.alpha1, c.alpha2, c.gamma_star), (0.0, 0.0, 1.0));

        let c = half_half().constants().unwrap();
        assert_abs_diff_eq!(c.alpha1 * c.alpha1, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(c.alpha1, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(c.alpha2, 0.5, epsilon = 1e-14);

        let c = MixtureSpec::pure(3, 2, 1.0, 0.25).constants().unwrap();
        assert_abs_diff_eq!(c.gamma_star, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn alpha_undefined_for_unnormalized_mixture() {
        // xi = 4 x y: xi'' + xi' - xi'^2 = 0 + 4 - 16 < 0
        let s = MixtureSpec::pure(1, 1, 2.0, 0.5);
        assert!(matches!(
            s.constants(),
            Err(Error::AlphaUndefined { party: 1, .. })
        ));
    }

    #[test]
    fn normalization() {
        let s = MixtureSpec::pure(2, 2, 0.5, 0.5).normalize_to_unit_variance().unwrap();
        assert_abs_diff_eq!(s.coefficients[0].beta, 1.0, epsilon = 1e-15);

        let unit = MixtureSpec::pure(3, 2, 1.0, 0.5);
        assert_eq!(unit.normalize_to_unit_variance().unwrap(), unit);

        let two = MixtureSpec {
            coefficients: vec![
                Coefficient { p: 1, q: 1, beta: 1.0 },
                Coefficient { p: 2, q: 2, beta: 1.0 },
            ],
            gamma: 0.5,
            h1: 0.0,
            h2: 0.0,
        };
        let n = two.normalize_to_unit_variance().unwrap();
        for c in &n.coefficients {
            assert_abs_diff_eq!(c.beta * c.beta, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(n.xi(1.0, 1.0), 1.0, epsilon = 1e-15);
        assert_eq!(
            MixtureSpec::pure(2, 2, 0.0, 0.5).normalize_to_unit_variance(),
            Err(Error::EmptyMixture)
        );
    }

    #[test]
    fn marginals_are_consistent() {
        let s = MixtureSpec {
            coefficients: vec![
                Coefficient { p: 1, q: 3, beta: 0.4 },
                Coefficient { p: 2, q: 2, beta: 0.7 },
                Coefficient { p: 3, q: 1, beta: 0.2 },
                Coefficient { p: 2, q: 3, beta: 0.5 },
            ],
            gamma: 0.4,
            h1: 0.0,
            h2: 0.0,
        }
        .normalize_to_unit_variance()
        .unwrap();
        let c = s.constants().unwrap();
        let (f1, d1, dd1) = c.marginal1.eval(1.0);
        let (f2, d2, dd2) = c.marginal2.eval(1.0);
        assert_abs_diff_eq!(f1, c.xi11, epsilon = 1e-14);
        assert_abs_diff_eq!(f2, c.xi11, epsilon = 1e-14);
        assert_abs_diff_eq!(d1, c.xi1p, epsilon = 1e-14);
        assert_abs_diff_eq!(dd1, c.xi1pp, epsilon = 1e-14);
        assert_abs_diff_eq!(d2, c.xi2p, epsilon = 1e-14);
        assert_abs_diff_eq!(dd2, c.xi2pp, epsilon = 1e-14);
        assert!(c.alpha1 >= 0.0 && c.alpha2 >= 0.0);
    }

    #[test]
    fn config_field_names() {
        let doc = r#"{"coefficients":[{"p":2,"q":2,"beta":0.1}],"gamma":0.5,"h1":0.1,"h2":0.0}"#;
        let s: MixtureSpec = serde_json::from_str(doc).unwrap();
        assert_eq!(s, MixtureSpec::pure(2, 2, 0.1, 0.5).with_fields(0.1, 0.0));
        let no_fields: MixtureSpec =
            serde_json::from_str(r#"{"coefficients":[{"p":1,"q":2,"beta":1}],"gamma":0.3}"#).unwrap();
        assert_eq!((no_fields.h1, no_fields.h2), (0.0, 0.0));
    }
}
