use std::collections::HashSet;

use super::{FieldCtx, FieldElem};
use crate::error::{Error, Result};

/// Dense polynomial, lowest degree first. Trailing zeros are allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    pub coeffs: Vec<FieldElem>,
}

impl Poly {
    pub fn new(coeffs: Vec<FieldElem>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    /// Index of the highest nonzero coefficient, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Coefficient of `x^i`, zero past the stored length.
    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs.get(i).copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn trimmed(mut self) -> Self {
        let len = self.degree().map_or(0, |d| d + 1);
        self.coeffs.truncate(len);
        self
    }

    /// Horner evaluation.
    pub fn eval(&self, ctx: &FieldCtx, x: FieldElem) -> FieldElem {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElem::ZERO, |acc, &c| ctx.add(ctx.mul(acc, x), c))
    }

    pub fn add(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| ctx.add(self.coeff(i), other.coeff(i))).collect())
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| ctx.sub(self.coeff(i), other.coeff(i))).collect())
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![FieldElem::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(a, b));
            }
        }
        Poly::new(out)
    }

    /// Long division, returns `(quotient, remainder)`.
    pub fn div_rem(&self, ctx: &FieldCtx, divisor: &Poly) -> Result<(Poly, Poly)> {
        let d = divisor.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = ctx.inv(divisor.coeffs[d])?;
        let mut rem = self.clone().trimmed().coeffs;
        if rem.len() <= d {
            return Ok((Poly::zero(), Poly::new(rem)));
        }
        let mut quot = vec![FieldElem::ZERO; rem.len() - d];
        for i in (0..quot.len()).rev() {
            let c = ctx.mul(rem[i + d], lead_inv);
            quot[i] = c;
            if c.is_zero() {
                continue;
            }
            for j in 0..=d {
                rem[i + j] = ctx.sub(rem[i + j], ctx.mul(c, divisor.coeffs[j]));
            }
        }
        rem.truncate(d);
        Ok((Poly::new(quot), Poly::new(rem).trimmed()))
    }
}

pub(super) fn ensure_distinct(xs: impl IntoIterator<Item = FieldElem>) -> Result<()> {
    let mut seen = HashSet::new();
    for x in xs {
        if !seen.insert(x) {
            return Err(Error::DuplicateEvaluationPoint(x.value()));
        }
    }
    Ok(())
}

/// Unique polynomial of degree `< points.len()` through `points`, via Newton
/// divided differences.
pub fn interpolate(ctx: &FieldCtx, points: &[(FieldElem, FieldElem)]) -> Result<Poly> {
    if points.is_empty() {
        return Err(Error::EmptyInput("interpolation needs at least one point"));
    }
    ensure_distinct(points.iter().map(|p| p.0))?;
    let k = points.len();
    let mut table: Vec<FieldElem> = points.iter().map(|p| p.1).collect();
    for level in 1..k {
        for i in (level..k).rev() {
            let num = ctx.sub(table[i], table[i - 1]);
            let den = ctx.sub(points[i].0, points[i - level].0);
            table[i] = ctx.div(num, den)?;
        }
    }
    // Expand the Newton form from the innermost term outwards.
    let mut coeffs = vec![FieldElem::ZERO; k];
    coeffs[0] = table[k - 1];
    let mut len = 1;
    for i in (0..k - 1).rev() {
        // coeffs <- coeffs * (x - x_i) + table[i]
        let xi = points[i].0;
        for j in (0..=len).rev() {
            let shifted = if j > 0 { coeffs[j - 1] } else { FieldElem::ZERO };
            let here = if j < len { ctx.mul(coeffs[j], xi) } else { FieldElem::ZERO };
            coeffs[j] = ctx.sub(shifted, here);
        }
        len += 1;
        coeffs[0] = ctx.add(coeffs[0], table[i]);
    }
    Ok(Poly::new(coeffs))
}

/// Inverse Vandermonde matrix for a fixed set of distinct points.
///
/// Row `j` holds the weights that turn the values at the points into the
/// coefficient of `x^j`, so one basis decodes any number of value vectors
/// sharing the same points.
#[derive(Clone, Debug)]
pub struct InterpolationBasis {
    points: Vec<FieldElem>,
    weights: Vec<Vec<FieldElem>>,
}

impl InterpolationBasis {
    pub fn new(ctx: &FieldCtx, points: &[FieldElem]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("interpolation needs at least one point"));
        }
        ensure_distinct(points.iter().copied())?;
        let k = points.len();
        // master(x) = prod (x - x_l), degree k
        let mut master = vec![FieldElem::ONE];
        for &x in points {
            let mut next = vec![FieldElem::ZERO; master.len() + 1];
            for (j, &c) in master.iter().enumerate() {
                next[j + 1] = ctx.add(next[j + 1], c);
                next[j] = ctx.sub(next[j], ctx.mul(c, x));
            }
            master = next;
        }
        let mut weights = vec![vec![FieldElem::ZERO; k]; k];
        for (i, &xi) in points.iter().enumerate() {
            // master / (x - x_i) by synthetic division.
            let mut basis = vec![FieldElem::ZERO; k];
            let mut carry = FieldElem::ZERO;
            for j in (0..k).rev() {
                carry = ctx.add(master[j + 1], ctx.mul(carry, xi));
                basis[j] = carry;
            }
            let denom = points
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != i)
                .fold(FieldElem::ONE, |acc, (_, &xl)| ctx.mul(acc, ctx.sub(xi, xl)));
            let scale = ctx.inv(denom)?;
            for (j, c) in basis.into_iter().enumerate() {
                weights[j][i] = ctx.mul(c, scale);
            }
        }
        Ok(InterpolationBasis { points: points.to_vec(), weights })
    }

    pub fn points(&self) -> &[FieldElem] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weights producing the coefficient of `x^degree`.
    pub fn coefficient_weights(&self, degree: usize) -> &[FieldElem] {
        &self.weights[degree]
    }

    /// Interpolates one value vector.
    pub fn interpolate(&self, ctx: &FieldCtx, values: &[FieldElem]) -> Result<Poly> {
        if values.len() != self.points.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} points",
                values.len(),
                self.points.len()
            )));
        }
        Ok(Poly::new(self.weights.iter().map(|w| ctx.dot(w, values)).collect()))
    }
}
