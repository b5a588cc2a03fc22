use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Dense univariate polynomial with exact rational coefficients, lowest
/// degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<BigRational>,
}

impl Poly {
    pub fn one() -> Self {
        Poly {
            coeffs: vec![BigRational::one()],
        }
    }

    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
            .collect();
        Poly::from_coeffs(coeffs)
    }

    /// The antiderivative vanishing at 0, i.e. `y -> integral_0^y p(t) dt`.
    pub fn integral(&self) -> Poly {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigRational::zero());
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c / BigRational::from_integer(BigInt::from(i + 1))),
        );
        Poly::from_coeffs(coeffs)
    }

    pub fn eval(&self, y: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * y + c)
    }

    pub fn eval_f64(&self, y: f64) -> f64 {
        use num_traits::ToPrimitive;
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * y + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Value at 1, the sum of the coefficients.
    pub fn at_one(&self) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |acc, c| acc + c)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

pub(crate) fn factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `sum_{t=i}^{k} C(k,t) y^t (1-y)^(k-t)` expanded in powers of y.
pub fn order_stat_cdf_poly(i: usize, k: usize) -> Poly {
    let mut coeffs = vec![BigRational::zero(); k + 1];
    for t in i..=k {
        let outer = binomial(k, t);
        let m = k - t;
        for u in 0..=m {
            let term = &outer * binomial(m, u);
            let term = if u % 2 == 1 { -term } else { term };
            coeffs[t + u] += BigRational::from_integer(term);
        }
    }
    Poly::from_coeffs(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn integral_and_derivative_invert() {
        let p = Poly::from_coeffs(vec![q(1, 2), q(-3, 1), q(0, 1), q(7, 4)]);
        assert_eq!(p.integral().derivative(), p);
        assert_eq!(p.integral().eval(&q(0, 1)), q(0, 1));
        // integral of 1/2 - 3t + 7/4 t^3 from 0 to 1
        assert_eq!(p.integral().at_one(), q(1, 2) - q(3, 2) + q(7, 16));
    }

    #[test]
    fn cdf_poly_density_is_beta_kernel() {
        // d/dy F_{i,k}(y) = k C(k-1, i-1) y^(i-1) (1-y)^(k-i)
        for k in 1..7 {
            for i in 1..=k {
                let density = order_stat_cdf_poly(i, k).derivative();
                let mut kernel = vec![BigRational::zero(); k];
                let scale = BigInt::from(k) * binomial(k - 1, i - 1);
                for u in 0..=(k - i) {
                    let c = &scale * binomial(k - i, u);
                    kernel[i - 1 + u] += BigRational::from_integer(if u % 2 == 1 { -c } else { c });
                }
                assert_eq!(density, Poly::from_coeffs(kernel), "i={i} k={k}");
                assert_eq!(order_stat_cdf_poly(i, k).at_one(), q(1, 1));
            }
        }
    }

    #[test]
    fn binomials_and_factorials() {
        assert_eq!(binomial(10, 3), BigInt::from(120));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(10), BigInt::from(3_628_800));
    }
}
