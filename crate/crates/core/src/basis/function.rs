use crate::scalar::{Point, Real};

/// A function with closed-form value, gradient and Hessian
/// (`[∂xx, ∂xy, ∂yy]`).
pub trait SmoothFunction<T>: Sync {
    fn value(&self, x: Point<T>) -> T;
    fn gradient(&self, x: Point<T>) -> Point<T>;
    fn hessian(&self, x: Point<T>) -> [T; 3];
}

impl<T, F: SmoothFunction<T> + ?Sized> SmoothFunction<T> for &F {
    fn value(&self, x: Point<T>) -> T {
        (**self).value(x)
    }
    fn gradient(&self, x: Point<T>) -> Point<T> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: Point<T>) -> [T; 3] {
        (**self).hessian(x)
    }
}

/// Bivariate polynomial `Σ c_ab x^a y^b` in global coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2<T> {
    terms: Vec<((usize, usize), T)>,
}

impl<T: Real> Poly2<T> {
    pub fn new(terms: Vec<((usize, usize), T)>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|&((a, b), _)| a + b)
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> &[((usize, usize), T)] {
        &self.terms
    }

    /// `∂x^dx ∂y^dy` at `x`.
    pub fn partial(&self, x: Point<T>, dx: usize, dy: usize) -> T {
        let mut s = T::zero();
        for &((a, b), c) in &self.terms {
            if a < dx || b < dy {
                continue;
            }
            let mut f = c;
            for i in 0..dx {
                f *= T::from_usize_lossy(a - i);
            }
            for i in 0..dy {
                f *= T::from_usize_lossy(b - i);
            }
            s += f * x[0].powi((a - dx) as i32) * x[1].powi((b - dy) as i32);
        }
        s
    }

    pub fn laplacian(&self, x: Point<T>) -> T {
        self.partial(x, 2, 0) + self.partial(x, 0, 2)
    }
}

impl<T: Real> SmoothFunction<T> for Poly2<T> {
    fn value(&self, x: Point<T>) -> T {
        self.partial(x, 0, 0)
    }
    fn gradient(&self, x: Point<T>) -> Point<T> {
        [self.partial(x, 1, 0), self.partial(x, 0, 1)]
    }
    fn hessian(&self, x: Point<T>) -> [T; 3] {
        [
            self.partial(x, 2, 0),
            self.partial(x, 1, 1),
            self.partial(x, 0, 2),
        ]
    }
}
