use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::SmoothFunction;
use crate::error::{Error, Result};
use crate::scalar::Point;

/// Closed-form solutions of the clamped plate on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManufacturedCase {
    /// `u = sin²(πx) sin²(πy)`.
    SineSquared,
    /// `u = x²(1−x)² y²(1−y)²`.
    PolynomialBubble,
}

/// One factor `a(t)` of a separable solution and its derivatives
/// `[a, a', a'', a''', a'''']`.
fn factor(case: ManufacturedCase, t: f64) -> [f64; 5] {
    match case {
        ManufacturedCase::SineSquared => {
            let (s, c) = (2.0 * PI * t).sin_cos();
            [
                (PI * t).sin().powi(2),
                PI * s,
                2.0 * PI * PI * c,
                -4.0 * PI.powi(3) * s,
                -8.0 * PI.powi(4) * c,
            ]
        }
        ManufacturedCase::PolynomialBubble => {
            let u = t * (1.0 - t);
            [
                u * u,
                2.0 * t - 6.0 * t * t + 4.0 * t.powi(3),
                2.0 - 12.0 * t + 12.0 * t * t,
                -12.0 + 24.0 * t,
                24.0,
            ]
        }
    }
}

impl ManufacturedCase {
    pub const ALL: [ManufacturedCase; 2] = [
        ManufacturedCase::SineSquared,
        ManufacturedCase::PolynomialBubble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ManufacturedCase::SineSquared => "sine-squared",
            ManufacturedCase::PolynomialBubble => "polynomial-bubble",
        }
    }

    /// `f = Δ²u`.
    pub fn load(&self, x: Point<f64>) -> f64 {
        let (a, b) = (factor(*self, x[0]), factor(*self, x[1]));
        a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4]
    }

    /// Largest deviation between the closed-form load and a finite-difference
    /// bi-Laplacian (five-point Laplacian of the closed-form `Δu`), relative
    /// to the load scale, over a grid of interior sample points.
    pub fn load_defect(&self, step: f64) -> f64 {
        let lap = |x: Point<f64>| {
            let h = self.hessian(x);
            h[0] + h[2]
        };
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 1..8 {
            for j in 1..8 {
                let x = [i as f64 / 8.0 + 0.013, j as f64 / 8.0 - 0.021];
                let fd = (lap([x[0] + step, x[1]])
                    + lap([x[0] - step, x[1]])
                    + lap([x[0], x[1] + step])
                    + lap([x[0], x[1] - step])
                    - 4.0 * lap(x))
                    / (step * step);
                worst = worst.max((fd - self.load(x)).abs());
                scale = scale.max(self.load(x).abs());
            }
        }
        worst / scale
    }
}

impl fmt::Display for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManufacturedCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sine-squared" => Ok(ManufacturedCase::SineSquared),
            "polynomial-bubble" => Ok(ManufacturedCase::PolynomialBubble),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

impl SmoothFunction<f64> for ManufacturedCase {
    fn value(&self, x: Point<f64>) -> f64 {
        factor(*self, x[0])[0] * factor(*self, x[1])[0]
    }

    fn gradient(&self, x: Point<f64>) -> Point<f64> {
        let (a, b) = (factor(*self, x[0]), factor(*self, x[1]));
        [a[1] * b[0], a[0] * b[1]]
    }

    fn hessian(&self, x: Point<f64>) -> [f64; 3] {
        let (a, b) = (factor(*self, x[0]), factor(*self, x[1]));
        [a[2] * b[0], a[1] * b[1], a[0] * b[2]]
    }
}
