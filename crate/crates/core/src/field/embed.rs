use super::{FieldCtx, FieldElem};
use crate::error::{Error, Result};
use crate::matrix::FMatrix;

/// Magnitude bounds for a product `Aᵀ B` of real inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductBound {
    /// Inner dimension `s` of the product.
    pub inner_dim: usize,
    pub max_abs_a: f64,
    pub max_abs_b: f64,
}

/// Fixed-point embedding of reals into `F_q`.
///
/// A real `x` becomes the integer `round(x * 2^p)`; nonnegative integers are
/// stored as themselves and `-v` as `q - v`, so every value in
/// `[-floor(q/2), floor(q/2)]` has a unique representative.
#[derive(Clone, Copy, Debug)]
pub struct RealEmbedding {
    ctx: FieldCtx,
    precision_bits: u32,
    bound: ProductBound,
}

impl RealEmbedding {
    /// Fails with [`Error::RangeOverflow`] when the largest possible output
    /// entry `s * ceil(max|A| 2^p) * ceil(max|B| 2^p)` exceeds `floor(q/2)`.
    pub fn new(ctx: FieldCtx, precision_bits: u32, bound: ProductBound) -> Result<Self> {
        if precision_bits > 60 {
            return Err(Error::InvalidParameters(format!("precision {precision_bits} bits is too large")));
        }
        if !(bound.max_abs_a.is_finite() && bound.max_abs_b.is_finite())
            || bound.max_abs_a < 0.0
            || bound.max_abs_b < 0.0
        {
            return Err(Error::InvalidParameters("bounds must be finite and nonnegative".into()));
        }
        let scale = (precision_bits as f64).exp2();
        let qa = (bound.max_abs_a * scale).ceil();
        let qb = (bound.max_abs_b * scale).ceil();
        let worst = bound.inner_dim as f64 * qa * qb;
        let half = (ctx.modulus() / 2) as f64;
        if worst > half {
            return Err(Error::RangeOverflow(format!(
                "output entries may reach {worst:e} but the field only represents magnitudes up to {half:e}"
            )));
        }
        Ok(RealEmbedding { ctx, precision_bits, bound })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    fn quantize(&self, x: f64, limit: f64) -> Result<FieldElem> {
        if !x.is_finite() || x.abs() > limit {
            return Err(Error::RangeOverflow(format!("input {x} exceeds the declared bound {limit}")));
        }
        let scaled = (x * (self.precision_bits as f64).exp2()).round() as i64;
        Ok(self.ctx.from_i64(scaled))
    }

    fn embed(&self, rows: usize, cols: usize, values: &[f64], limit: f64) -> Result<FMatrix> {
        let data = values.iter().map(|&x| self.quantize(x, limit)).collect::<Result<Vec<_>>>()?;
        FMatrix::from_elems(rows, cols, data)
    }

    /// Embeds a row-major left operand `A`.
    pub fn embed_a(&self, rows: usize, cols: usize, values: &[f64]) -> Result<FMatrix> {
        self.embed(rows, cols, values, self.bound.max_abs_a)
    }

    /// Embeds a row-major right operand `B`.
    pub fn embed_b(&self, rows: usize, cols: usize, values: &[f64]) -> Result<FMatrix> {
        self.embed(rows, cols, values, self.bound.max_abs_b)
    }

    /// Signed integer behind a representative.
    pub fn signed(&self, e: FieldElem) -> i64 {
        let q = self.ctx.modulus();
        if e.value() <= q / 2 {
            e.value() as i64
        } else {
            -((q - e.value()) as i64)
        }
    }

    /// Inverse of the input embedding: `round(x 2^p) / 2^p`.
    pub fn unembed_input(&self, m: &FMatrix) -> Vec<f64> {
        let scale = (-(self.precision_bits as f64)).exp2();
        m.as_slice().iter().map(|&e| self.signed(e) as f64 * scale).collect()
    }

    /// Decodes a product of two embedded operands, which carries `2p`
    /// fractional bits.
    pub fn unembed_product(&self, m: &FMatrix) -> Vec<f64> {
        let scale = (-2.0 * self.precision_bits as f64).exp2();
        m.as_slice().iter().map(|&e| self.signed(e) as f64 * scale).collect()
    }
}
