//! Carnot group descriptors, dilations, and the Heisenberg group law.
//!
//! A group is stored in exponential coordinates on `R^n` together with the
//! `n x m` coefficient matrix `sigma(x)` of its horizontal frame: column `j`
//! holds the components of `X_j`. All entries are polynomials, so their
//! partial derivatives are exact.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// `coeff * prod x_k^p` over the listed `(k, p)` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<(usize, u32)>,
}

impl Monomial {
    fn eval(&self, x: &[f64]) -> f64 {
        self.powers
            .iter()
            .fold(self.coeff, |acc, &(k, p)| acc * x[k].powi(p as i32))
    }

    fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.powers.iter().map(|&(k, p)| weights[k] * p).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::zero().plus(c, &[])
    }

    /// Adds the term `coeff * prod x_k^p`. Factors with `p == 0` are dropped.
    pub fn plus(mut self, coeff: f64, powers: &[(usize, u32)]) -> Self {
        if coeff != 0.0 {
            let mut sorted: Vec<(usize, u32)> = powers.to_vec();
            sorted.sort_unstable();
            let mut merged: Vec<(usize, u32)> = Vec::with_capacity(sorted.len());
            for (k, p) in sorted {
                match merged.last_mut() {
                    Some(last) if last.0 == k => last.1 += p,
                    _ => merged.push((k, p)),
                }
            }
            merged.retain(|&(_, p)| p > 0);
            self.terms.push(Monomial { coeff, powers: merged });
        }
        self
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn partial(&self, k: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for t in &self.terms {
            if let Some(pos) = t.powers.iter().position(|&(v, _)| v == k) {
                let p = t.powers[pos].1;
                let mut powers = t.powers.clone();
                powers[pos].1 -= 1;
                out = out.plus(t.coeff * p as f64, &powers);
            }
        }
        out
    }

    /// `Some(c)` if the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        if self.terms.iter().all(|t| t.powers.is_empty()) {
            Some(self.terms.iter().map(|t| t.coeff).sum())
        } else {
            None
        }
    }

    /// One past the largest variable index that appears.
    pub fn num_vars(&self) -> usize {
        self.max_variable().map_or(0, |v| v + 1)
    }

    fn max_variable(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|t| t.powers.iter().map(|&(k, _)| k))
            .max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupKind {
    Heisenberg { d: usize },
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupDescriptor {
    kind: GroupKind,
    n: usize,
    m: usize,
    layer_dims: Vec<usize>,
    weights: Vec<u32>,
    homogeneous_dim: usize,
    /// Row-major `n x m`.
    sigma: Vec<Polynomial>,
    /// `sigma_partials[k]` is `d sigma / d x_k`, row-major `n x m`.
    sigma_partials: Vec<Vec<Polynomial>>,
}

impl GroupDescriptor {
    /// Builds a homogeneous Carnot group from its layer dimensions and the
    /// polynomial frame coefficients (`sigma[k * m + j]` is component `k` of
    /// `X_j`).
    ///
    /// The frame must be in Carnot form: the top `m x m` block is the
    /// identity, and each remaining entry in row `k` is homogeneous of
    /// weighted degree `w_k - 1` in the coordinates before `k`.
    pub fn carnot(layer_dims: Vec<usize>, sigma: Vec<Polynomial>) -> Result<Self> {
        if layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(invalid("layer dimensions must be positive"));
        }
        let n: usize = layer_dims.iter().sum();
        let m = layer_dims[0];
        if sigma.len() != n * m {
            return Err(invalid(format!(
                "sigma must have {n}x{m} entries, got {}",
                sigma.len()
            )));
        }
        let weights: Vec<u32> = layer_dims
            .iter()
            .enumerate()
            .flat_map(|(i, &ni)| std::iter::repeat_n(i as u32 + 1, ni))
            .collect();
        let homogeneous_dim = layer_dims
            .iter()
            .enumerate()
            .map(|(i, &ni)| (i + 1) * ni)
            .sum();

        for k in 0..n {
            for j in 0..m {
                let entry = &sigma[k * m + j];
                if k < m {
                    let want = if k == j { 1.0 } else { 0.0 };
                    if entry.as_constant() != Some(want) {
                        return Err(invalid(format!(
                            "sigma[{k}][{j}] must be the constant {want}"
                        )));
                    }
                    continue;
                }
                for t in entry.terms() {
                    if t.weighted_degree(&weights) + 1 != weights[k] {
                        return Err(invalid(format!(
                            "sigma[{k}][{j}] is not homogeneous of degree {}",
                            weights[k] - 1
                        )));
                    }
                }
                if entry.max_variable().is_some_and(|v| v >= k) {
                    return Err(invalid(format!(
                        "sigma[{k}][{j}] may only depend on x_0..x_{}",
                        k - 1
                    )));
                }
            }
        }

        let sigma_partials = (0..n)
            .map(|k| sigma.iter().map(|p| p.partial(k)).collect())
            .collect();
        Ok(Self {
            kind: GroupKind::Generic,
            n,
            m,
            layer_dims,
            weights,
            homogeneous_dim,
            sigma,
            sigma_partials,
        })
    }

    /// The Heisenberg group `H^d` on `R^{2d+1}` with frame
    /// `X_i = d_i + 2 x_{i+d} d_t`, `X_{i+d} = d_{i+d} - 2 x_i d_t`
    /// (0-based: `i < d`, `t = x_{2d}`).
    pub fn heisenberg(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(invalid("Heisenberg dimension d must be at least 1"));
        }
        let m = 2 * d;
        let n = m + 1;
        let t = m;
        let mut sigma = vec![Polynomial::zero(); n * m];
        for j in 0..m {
            sigma[j * m + j] = Polynomial::constant(1.0);
        }
        for i in 0..d {
            sigma[t * m + i] = Polynomial::zero().plus(2.0, &[(i + d, 1)]);
            sigma[t * m + i + d] = Polynomial::zero().plus(-2.0, &[(i, 1)]);
        }
        let mut g = Self::carnot(vec![m, 1], sigma)?;
        g.kind = GroupKind::Heisenberg { d };
        Ok(g)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// `Some(d)` for `H^d`.
    pub fn heisenberg_dim(&self) -> Option<usize> {
        match self.kind {
            GroupKind::Heisenberg { d } => Some(d),
            GroupKind::Generic => None,
        }
    }

    pub(crate) fn require_heisenberg(&self) -> Result<usize> {
        self.heisenberg_dim()
            .ok_or_else(|| Error::UnsupportedGroup(self.label()))
    }

    pub fn label(&self) -> String {
        match self.kind {
            GroupKind::Heisenberg { d } => format!("h:{d}"),
            GroupKind::Generic => format!("carnot{:?}", self.layer_dims),
        }
    }

    /// Topological dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Horizontal dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn homogeneous_dim(&self) -> usize {
        self.homogeneous_dim
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// `sigma(x)`, row-major `n x m`.
    pub fn sigma(&self, x: &[f64]) -> Vec<f64> {
        self.sigma.iter().map(|p| p.eval(x)).collect()
    }

    /// `d sigma_{lj} / d x_k` at `x`, indexed `[k][l * m + j]`.
    pub fn sigma_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.sigma_partials
            .iter()
            .map(|row| row.iter().map(|p| p.eval(x)).collect())
            .collect()
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.n {
            return Err(invalid(format!(
                "point has {} coordinates, group needs {}",
                x.dim(),
                self.n
            )));
        }
        Ok(())
    }

    /// `delta_lambda(x)`: coordinate `i` scaled by `lambda^{w_i}`.
    pub fn dilate(&self, lambda: f64, x: &Point) -> Result<Point> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("dilation factor must be positive, got {lambda}")));
        }
        self.check_dim(x)?;
        Ok(Point(
            x.0.iter()
                .zip(&self.weights)
                .map(|(c, &w)| c * lambda.powi(w as i32))
                .collect(),
        ))
    }

    /// Heisenberg group law making the frame left-invariant:
    /// `(x_H, t) * (y_H, s) = (x_H + y_H, t + s + 2 sum_i (x_{i+d} y_i - x_i y_{i+d}))`.
    pub fn multiply(&self, x: &Point, y: &Point) -> Result<Point> {
        let d = self.require_heisenberg()?;
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(Point(heisenberg_product(d, &x.0, &y.0)))
    }

    pub fn inverse(&self, x: &Point) -> Result<Point> {
        self.require_heisenberg()?;
        self.check_dim(x)?;
        Ok(Point(x.0.iter().map(|c| -c).collect()))
    }

    pub fn identity(&self) -> Point {
        Point(vec![0.0; self.n])
    }

    /// Gauge `rho(x) = (|x_H|^4 + t^2)^{1/4}`.
    pub fn homogeneous_norm(&self, x: &Point) -> Result<f64> {
        let d = self.require_heisenberg()?;
        self.check_dim(x)?;
        Ok(heisenberg_norm(d, &x.0))
    }
}

pub(crate) fn heisenberg_product(d: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
    let t = 2 * d;
    let mut out: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let twist: f64 = (0..d).map(|i| x[i + d] * y[i] - x[i] * y[i + d]).sum();
    out[t] += 2.0 * twist;
    out
}

/// `|x_H|^2` for a point of `H^d`.
#[inline]
pub fn horizontal_norm2(d: usize, x: &[f64]) -> f64 {
    x[..2 * d].iter().map(|a| a * a).sum()
}

#[inline]
pub fn heisenberg_norm(d: usize, x: &[f64]) -> f64 {
    let h2 = horizontal_norm2(d, x);
    let t = x[2 * d];
    (h2 * h2 + t * t).sqrt().sqrt()
}

/// A point in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid(format!("non-finite coordinates {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<&[f64]> for Point {
    fn from(c: &[f64]) -> Self {
        Point(c.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn heisenberg_dimensions() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        assert_eq!((h1.n(), h1.m(), h1.homogeneous_dim(), h1.step()), (3, 2, 4, 2));
        assert_eq!(h1.weights(), &[1, 1, 2]);
        let h2 = GroupDescriptor::heisenberg(2).unwrap();
        assert_eq!((h2.m(), h2.homogeneous_dim()), (4, 6));
        assert!(matches!(
            GroupDescriptor::heisenberg(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sigma_at_origin_is_coordinate_frame() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        assert_eq!(h1.sigma(&[0.0; 3]), vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        // X_1 = d_x + 2y d_t, X_2 = d_y - 2x d_t
        let s = h1.sigma(&[3.0, 5.0, 7.0]);
        assert_eq!(&s[4..], &[10.0, -6.0]);
    }

    #[test]
    fn sigma_jacobian_is_exact() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        let jac = h1.sigma_jacobian(&[0.3, -0.2, 1.0]);
        // d/dy of row t col 0 (2y) = 2, d/dx of row t col 1 (-2x) = -2
        assert_eq!(jac[1][4], 2.0);
        assert_eq!(jac[0][5], -2.0);
        assert!(jac[2].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn carnot_rejects_malformed_frames() {
        // top block not identity
        let mut sigma = vec![Polynomial::zero(); 6];
        sigma[0] = Polynomial::constant(1.0);
        sigma[3] = Polynomial::constant(2.0);
        assert!(GroupDescriptor::carnot(vec![2, 1], sigma).is_err());

        // inhomogeneous vertical entry
        let mut sigma = vec![Polynomial::zero(); 6];
        sigma[0] = Polynomial::constant(1.0);
        sigma[3] = Polynomial::constant(1.0);
        sigma[4] = Polynomial::constant(1.0);
        assert!(GroupDescriptor::carnot(vec![2, 1], sigma).is_err());

        assert!(GroupDescriptor::carnot(vec![2, 1], vec![]).is_err());
    }

    #[test]
    fn polynomial_partials() {
        // 3 x0^2 x1 + 2 x1
        let q = Polynomial::zero().plus(3.0, &[(0, 2), (1, 1)]).plus(2.0, &[(1, 1)]);
        assert_eq!(q.eval(&[2.0, 5.0]), 70.0);
        assert_eq!(q.partial(0).eval(&[2.0, 5.0]), 60.0);
        assert_eq!(q.partial(1).eval(&[2.0, 5.0]), 14.0);
        assert!(q.partial(2).is_zero());
    }

    #[test]
    fn dilation_examples() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        assert_eq!(h1.dilate(2.0, &p(&[1.0, 1.0, 1.0])).unwrap(), p(&[2.0, 2.0, 4.0]));
        let x = p(&[0.3, -1.2, 4.0]);
        assert_eq!(h1.dilate(1.0, &x).unwrap(), x);
        let h2 = GroupDescriptor::heisenberg(2).unwrap();
        assert_eq!(
            h2.dilate(3.0, &p(&[1.0, 0.0, 0.0, 0.0, 1.0])).unwrap(),
            p(&[3.0, 0.0, 0.0, 0.0, 9.0])
        );
        assert!(h1.dilate(0.0, &x).is_err());
        assert!(h1.dilate(-1.0, &x).is_err());
    }

    #[test]
    fn group_law_examples() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        let m = |a: &[f64], b: &[f64]| h1.multiply(&p(a), &p(b)).unwrap();
        assert_eq!(m(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]), p(&[0.0, 0.0, 0.0]));
        assert_eq!(m(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), p(&[1.0, 1.0, -2.0]));
        assert_eq!(m(&[0.0, 0.0, 1.5], &[0.0, 0.0, -0.25]), p(&[0.0, 0.0, 1.25]));
    }

    #[test]
    fn norm_examples() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        assert_eq!(h1.homogeneous_norm(&p(&[1.0, 0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(h1.homogeneous_norm(&h1.identity()).unwrap(), 0.0);
        let r1 = h1.homogeneous_norm(&p(&[1.0, 1.0, 1.0])).unwrap();
        let r2 = h1.homogeneous_norm(&p(&[2.0, 2.0, 4.0])).unwrap();
        assert!((r1 - 5f64.powf(0.25)).abs() < 1e-15);
        assert!((r2 - 80f64.powf(0.25)).abs() < 1e-15);
        assert!((r2 - 2.0 * r1).abs() < 1e-14);
    }

    #[test]
    fn generic_groups_have_no_law() {
        let mut sigma = vec![Polynomial::zero(); 6];
        sigma[0] = Polynomial::constant(1.0);
        sigma[3] = Polynomial::constant(1.0);
        sigma[4] = Polynomial::zero().plus(1.0, &[(1, 1)]);
        let g = GroupDescriptor::carnot(vec![2, 1], sigma).unwrap();
        assert_eq!(g.kind(), GroupKind::Generic);
        let x = p(&[1.0, 2.0, 3.0]);
        assert!(matches!(g.multiply(&x, &x), Err(Error::UnsupportedGroup(_))));
        assert!(matches!(g.homogeneous_norm(&x), Err(Error::UnsupportedGroup(_))));
        assert_eq!(g.dilate(2.0, &x).unwrap(), p(&[2.0, 4.0, 12.0]));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let h1 = GroupDescriptor::heisenberg(1).unwrap();
        assert!(h1.dilate(2.0, &p(&[1.0, 2.0])).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
    }
}
