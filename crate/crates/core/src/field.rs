//! Pointwise-evaluable scalar data: conductivities, sources, boundary and initial values.

use std::fmt;
use std::sync::Arc;

use crate::mesh::Point;

/// A real-valued function of position and time.
///
/// Space-only data (conductivity, initial temperature) ignores the time argument.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>,
    constant: Option<f64>,
}

impl ScalarField {
    pub fn new(f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { eval: Arc::new(f), constant: None }
    }

    pub fn spatial(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::new(move |p, _| f(p))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField { eval: Arc::new(move |_, _| c), constant: Some(c) }
    }

    pub fn zero() -> Self {
        ScalarField::constant(0.0)
    }

    #[inline]
    pub fn eval(&self, p: Point, t: f64) -> f64 {
        (self.eval)(p, t)
    }

    /// The value if this field was built with [`ScalarField::constant`].
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        match self.constant {
            Some(c) => ScalarField::constant(s * c),
            None => {
                let inner = self.clone();
                ScalarField::new(move |p, t| s * inner.eval(p, t))
            }
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "ScalarField::constant({c})"),
            None => f.write_str("ScalarField(<fn>)"),
        }
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::constant(c)
    }
}
