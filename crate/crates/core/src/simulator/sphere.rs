use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

/// A point of `S^{N1} x S^{N2}`: `|u|^2 = N1`, `|v|^2 = N2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

pub(crate) fn gaussian_vector(n: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Rescales `x` onto the sphere of radius `sqrt(len)`.
pub fn project_to_sphere(x: &mut DVector<f64>) {
    let n = x.len() as f64;
    let norm = x.norm();
    *x *= n.sqrt() / norm;
}

/// Uniform point on the sphere of radius `sqrt(n)`.
pub fn uniform_sphere(n: usize, rng: &mut Rng) -> DVector<f64> {
    loop {
        let mut x = gaussian_vector(n, rng);
        if x.norm() > 0.0 {
            project_to_sphere(&mut x);
            return x;
        }
    }
}

/// Orthonormal basis of the tangent space at `x`, as the first `n - 1`
/// columns of the Householder reflection sending `e_n` to `x / |x|`.
///
/// At the north pole this is the standard basis `e_1 .. e_{n-1}`.
pub fn tangent_basis(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut w = x / x.norm();
    w[n - 1] -= 1.0;
    let wn2 = w.norm_squared();
    let mut h = DMatrix::identity(n, n);
    if wn2 > 1e-28 {
        h -= (2.0 / wn2) * &w * w.transpose();
    }
    h.columns(0, n - 1).into_owned()
}

/// Removes the component of `g` along `x`.
pub fn tangent_projection(x: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
    g - x * (g.dot(x) / x.norm_squared())
}

/// Angle between two points of the same sphere.
pub fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

impl SpherePoint {
    pub fn uniform(n1: usize, n2: usize, rng: &mut Rng) -> Self {
        SpherePoint {
            u: uniform_sphere(n1, rng),
            v: uniform_sphere(n2, rng),
        }
    }

    /// The double north pole `(0, .., sqrt N1, 0, .., sqrt N2)`.
    pub fn north_pole(n1: usize, n2: usize) -> Self {
        let mut u = DVector::zeros(n1);
        let mut v = DVector::zeros(n2);
        u[n1 - 1] = (n1 as f64).sqrt();
        v[n2 - 1] = (n2 as f64).sqrt();
        SpherePoint { u, v }
    }

    pub fn n1(&self) -> usize {
        self.u.len()
    }

    pub fn n2(&self) -> usize {
        self.v.len()
    }

    pub fn project(&mut self) {
        project_to_sphere(&mut self.u);
        project_to_sphere(&mut self.v);
    }

    /// Largest relative violation of the two norm constraints.
    pub fn norm_error(&self) -> f64 {
        let e = |x: &DVector<f64>| (x.norm_squared() / x.len() as f64 - 1.0).abs();
        e(&self.u).max(e(&self.v))
    }

    /// Overlaps `(R(u, u'), R(v, v'))`.
    pub fn overlaps(&self, other: &SpherePoint) -> (f64, f64) {
        (
            self.u.dot(&other.u) / self.n1() as f64,
            self.v.dot(&other.v) / self.n2() as f64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    #[test]
    fn basis_is_orthonormal_and_tangent() {
        let mut rng = SeedStream::new(3).rng();
        for n in [2, 5] {
            let x = uniform_sphere(n, &mut rng);
            let b = tangent_basis(&x);
            let gram = b.transpose() * &b;
            assert!((gram - DMatrix::identity(n - 1, n - 1)).amax() < 1e-12);
            assert!((b.transpose() * &x).amax() < 1e-12);
        }
        let pole = SpherePoint::north_pole(3, 4);
        assert_eq!(tangent_basis(&pole.u), DMatrix::identity(3, 3).columns(0, 2).into_owned());
    }

    #[test]
    fn uniform_points_are_on_the_sphere() {
        let mut rng = SeedStream::new(1).rng();
        let p = SpherePoint::uniform(7, 3, &mut rng);
        assert!(p.norm_error() < 1e-12);
    }
}
