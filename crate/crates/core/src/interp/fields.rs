use crate::mesh::Point;

/// A smooth vector field on the plane given in closed form.
///
/// `gradient(p)[c][d]` is the derivative of component `c` along
/// direction `d`; `hessian(p)[c][d][e]` the second derivative of
/// component `c` along `d` and `e`.
pub trait VectorField: Sync {
    fn value(&self, p: Point) -> [f64; 2];
    fn gradient(&self, p: Point) -> [[f64; 2]; 2];
    fn hessian(&self, _p: Point) -> Option<[[[f64; 2]; 2]; 2]> {
        None
    }
    /// Axis-aligned box `[min, max]` outside which the field vanishes.
    fn support(&self) -> Option<[Point; 2]> {
        None
    }
    fn divergence_free(&self) -> bool {
        false
    }
}

/// One-dimensional profile with three derivatives, used to build
/// separable stream functions `psi(x, y) = X(x) Y(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `x^2 (1 - x)^2`, vanishing with its first derivative at 0 and 1.
    Quartic,
    /// `((x - a)(b - x))^3` on `[a, b]` and zero elsewhere (twice
    /// continuously differentiable).
    Compact { a: f64, b: f64 },
}

impl Profile {
    /// Value and the first three derivatives.
    pub fn eval(&self, x: f64) -> [f64; 4] {
        match *self {
            Profile::Quartic => {
                let s = x * (1.0 - x);
                [s * s, 2.0 * s * (1.0 - 2.0 * x), 2.0 - 12.0 * x + 12.0 * x * x, -12.0 + 24.0 * x]
            }
            Profile::Compact { a, b } => {
                if x <= a || x >= b {
                    return [0.0; 4];
                }
                let q = (x - a) * (b - x);
                let dq = (a + b) - 2.0 * x;
                [
                    q * q * q,
                    3.0 * q * q * dq,
                    6.0 * q * dq * dq - 6.0 * q * q,
                    6.0 * dq * dq * dq - 36.0 * q * dq,
                ]
            }
        }
    }

    fn interval(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Quartic => None,
            Profile::Compact { a, b } => Some((a, b)),
        }
    }
}

/// `curl psi = (d psi/dy, -d psi/dx)` for a separable stream function,
/// scaled by `amplitude`. Exactly divergence-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurlField {
    pub x: Profile,
    pub y: Profile,
    pub amplitude: f64,
}

impl CurlField {
    /// Curl of `x^2 (1-x)^2 y^2 (1-y)^2` on the unit square.
    pub fn quartic_bump() -> Self {
        CurlField { x: Profile::Quartic, y: Profile::Quartic, amplitude: 1.0 }
    }

    /// Curl of a compact bump supported in `[a, b]^2`.
    pub fn compact_box(a: f64, b: f64) -> Self {
        Self::compact([a, a], [b, b])
    }

    /// Curl of a compact bump supported in the box `[lo, hi]`, scaled so
    /// that its values are of order one.
    pub fn compact(lo: Point, hi: Point) -> Self {
        let wx = 0.5 * (hi[0] - lo[0]);
        let wy = 0.5 * (hi[1] - lo[1]);
        CurlField {
            x: Profile::Compact { a: lo[0], b: hi[0] },
            y: Profile::Compact { a: lo[1], b: hi[1] },
            amplitude: wx.min(wy) / (wx * wy).powi(6),
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

impl VectorField for CurlField {
    fn value(&self, p: Point) -> [f64; 2] {
        let x = self.x.eval(p[0]);
        let y = self.y.eval(p[1]);
        let s = self.amplitude;
        [s * x[0] * y[1], -s * x[1] * y[0]]
    }

    fn gradient(&self, p: Point) -> [[f64; 2]; 2] {
        let x = self.x.eval(p[0]);
        let y = self.y.eval(p[1]);
        let s = self.amplitude;
        [[s * x[1] * y[1], s * x[0] * y[2]], [-s * x[2] * y[0], -s * x[1] * y[1]]]
    }

    fn hessian(&self, p: Point) -> Option<[[[f64; 2]; 2]; 2]> {
        let x = self.x.eval(p[0]);
        let y = self.y.eval(p[1]);
        let s = self.amplitude;
        Some([
            [[s * x[2] * y[1], s * x[1] * y[2]], [s * x[1] * y[2], s * x[0] * y[3]]],
            [[-s * x[3] * y[0], -s * x[2] * y[1]], [-s * x[2] * y[1], -s * x[1] * y[2]]],
        ])
    }

    fn support(&self) -> Option<[Point; 2]> {
        match (self.x.interval(), self.y.interval()) {
            (Some((xa, xb)), Some((ya, yb))) => Some([[xa, ya], [xb, yb]]),
            _ => Some([[0.0, 0.0], [1.0, 1.0]]),
        }
    }

    fn divergence_free(&self) -> bool {
        true
    }
}

/// A field assembled from closures, for ad hoc data.
pub struct FnField<V, G>
where
    V: Fn(Point) -> [f64; 2] + Sync,
    G: Fn(Point) -> [[f64; 2]; 2] + Sync,
{
    pub value: V,
    pub gradient: G,
    pub support: Option<[Point; 2]>,
    pub divergence_free: bool,
}

impl<V, G> VectorField for FnField<V, G>
where
    V: Fn(Point) -> [f64; 2] + Sync,
    G: Fn(Point) -> [[f64; 2]; 2] + Sync,
{
    fn value(&self, p: Point) -> [f64; 2] {
        (self.value)(p)
    }
    fn gradient(&self, p: Point) -> [[f64; 2]; 2] {
        (self.gradient)(p)
    }
    fn support(&self) -> Option<[Point; 2]> {
        self.support
    }
    fn divergence_free(&self) -> bool {
        self.divergence_free
    }
}
