//! Forward-mode automatic differentiation with truncated multivariate Taylor
//! polynomials.
//!
//! A [`Taylor`] value stores every coefficient `c_α` of the expansion
//! `f(x0 + h) = Σ_{|α| ≤ d} c_α h^α` for a fixed number of variables and a
//! fixed truncation order `d`. The partial derivative for the multi-index
//! `α` is `α! · c_α`. Order 2 gives 2-jets; order 3 is used when a frame
//! built from first derivatives must itself be differentiated twice.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Monomial bookkeeping shared by all values with the same shape.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(usize, usize, usize)>,
}

impl Layout {
    /// Shared layout for `nvars` variables truncated at total degree `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("layout cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    fn build(nvars: usize, order: usize) -> Layout {
        let mut exponents = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u8; nvars];
            push_degree(&mut exponents, &mut current, 0, degree);
        }
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in exponents.iter().enumerate() {
            for (j, b) in exponents.iter().enumerate() {
                let degree: usize = a.iter().chain(b).map(|&x| x as usize).sum();
                if degree <= order {
                    let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    products.push((i, j, index[&sum]));
                }
            }
        }
        Layout {
            nvars,
            order,
            exponents,
            index,
            products,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    fn position(&self, exponent: &[u8]) -> Option<usize> {
        self.index.get(exponent).copied()
    }
}

// Graded ordering: degree 0, then e_0..e_{n-1}, then degree 2, ...
fn push_degree(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, var: usize, remaining: usize) {
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    if current.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        push_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

/// Scalar operations needed to evaluate expressions generically, implemented
/// for plain `f64` and for [`Taylor`].
pub trait Real:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same space as `self`.
    fn lift(&self, c: f64) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn recip(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sqrt(&self) -> Self;

    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = self.lift(1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
}

#[derive(Clone, Debug)]
pub struct Taylor {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl Taylor {
    pub fn constant(layout: &Arc<Layout>, value: f64) -> Self {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Self {
            layout: layout.clone(),
            coeffs,
        }
    }

    /// The independent variable `var` expanded around `value`.
    pub fn variable(layout: &Arc<Layout>, var: usize, value: f64) -> Self {
        assert!(var < layout.nvars, "variable index out of range");
        let mut t = Self::constant(layout, value);
        if layout.order >= 1 {
            t.coeffs[1 + var] = 1.0;
        }
        t
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// First partial derivative with respect to `var`.
    pub fn d1(&self, var: usize) -> f64 {
        if self.layout.order == 0 {
            0.0
        } else {
            self.coeffs[1 + var]
        }
    }

    /// Second partial derivative with respect to `i` and `j`.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut e = vec![0u8; self.layout.nvars];
        e[i] += 1;
        e[j] += 1;
        match self.layout.position(&e) {
            Some(k) => self.coeffs[k] * if i == j { 2.0 } else { 1.0 },
            None => 0.0,
        }
    }

    /// Partial derivative for a general multi-index.
    pub fn derivative(&self, alpha: &[u8]) -> f64 {
        match self.layout.position(alpha) {
            Some(k) => {
                let fact: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
                self.coeffs[k] * fact
            }
            None => 0.0,
        }
    }

    /// `∂/∂var` as a series of one lower order on `target`.
    pub fn differentiate(&self, var: usize, target: &Arc<Layout>) -> Taylor {
        assert_eq!(target.nvars, self.layout.nvars);
        assert!(target.order < self.layout.order);
        let mut out = Taylor::constant(target, 0.0);
        for (k, e) in target.exponents.iter().enumerate() {
            let mut up = e.clone();
            up[var] += 1;
            if let Some(src) = self.layout.position(&up) {
                out.coeffs[k] = self.coeffs[src] * up[var] as f64;
            }
        }
        out
    }

    /// Drops all terms above the order of `target`.
    pub fn truncate(&self, target: &Arc<Layout>) -> Taylor {
        assert_eq!(target.nvars, self.layout.nvars);
        let mut out = Taylor::constant(target, 0.0);
        for (k, e) in target.exponents.iter().enumerate() {
            if let Some(src) = self.layout.position(e) {
                out.coeffs[k] = self.coeffs[src];
            }
        }
        out
    }

    fn zip_with(&self, other: &Taylor, f: impl Fn(f64, f64) -> f64) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.layout, &other.layout));
        Taylor {
            layout: self.layout.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    fn mul_ref(&self, other: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.layout, &other.layout));
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in &self.layout.products {
            coeffs[k] += self.coeffs[i] * other.coeffs[j];
        }
        Taylor {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    /// `φ(self)` given `derivs[k] = φ^{(k)}(value)` for `k = 0..=order`.
    fn compose(&self, derivs: &[f64]) -> Taylor {
        let order = self.layout.order;
        debug_assert!(derivs.len() > order);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Taylor::constant(&self.layout, derivs[0]);
        let mut power = Taylor::constant(&self.layout, 1.0);
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.mul_ref(&h);
            fact *= k as f64;
            let c = d / fact;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += c * p;
            }
        }
        out
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        self.mul_ref(&rhs)
    }
}

impl Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        self.mul_ref(&rhs.recip())
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Real for Taylor {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn lift(&self, c: f64) -> Self {
        Taylor::constant(&self.layout, c)
    }

    fn scale(&self, c: f64) -> Self {
        Taylor {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    fn recip(&self) -> Self {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.layout.order + 1);
        let mut c = 1.0 / a;
        for k in 0..=self.layout.order {
            derivs.push(c);
            c *= -((k + 1) as f64) / a;
        }
        self.compose(&derivs)
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.layout.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.layout.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    fn sinh(&self) -> Self {
        let a = self.value();
        let cycle = [a.sinh(), a.cosh()];
        let derivs: Vec<f64> = (0..=self.layout.order).map(|k| cycle[k % 2]).collect();
        self.compose(&derivs)
    }

    fn cosh(&self) -> Self {
        let a = self.value();
        let cycle = [a.cosh(), a.sinh()];
        let derivs: Vec<f64> = (0..=self.layout.order).map(|k| cycle[k % 2]).collect();
        self.compose(&derivs)
    }

    fn sqrt(&self) -> Self {
        let a = self.value();
        let mut derivs = Vec::with_capacity(self.layout.order + 1);
        // d^k/da^k a^{1/2} = (1/2)(1/2 - 1)...(1/2 - k + 1) a^{1/2 - k}
        let mut coef = 1.0;
        for k in 0..=self.layout.order {
            derivs.push(coef * a.powf(0.5 - k as f64));
            coef *= 0.5 - k as f64;
        }
        self.compose(&derivs)
    }
}
