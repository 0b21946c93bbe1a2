use num_bigint::BigInt;
use num_rational::BigRational;

use crate::combinatorics::{factorial, to_f64};
use crate::error::{invalid, Result};

/// Coefficient `prod m_i! / (M + j - 1)!` of the simplex moment.
pub fn dirichlet_moment_exact(exponents: &[u64]) -> Result<BigRational> {
    if exponents.len() < 2 {
        return Err(invalid("the simplex moment needs at least two coordinates"));
    }
    let total: u64 = exponents.iter().sum();
    let num: BigInt = exponents.iter().map(|&m| factorial(m)).product();
    Ok(BigRational::new(num, factorial(total + exponents.len() as u64 - 1)))
}

/// `int_{q_i >= 0, sum q_i = tau} prod q_i^{m_i} dq_1 ... dq_{j-1}
///  = prod m_i! / (M + j - 1)! * tau^{M + j - 1}`.
pub fn dirichlet_moment(exponents: &[u64], tau: f64) -> Result<f64> {
    let c = dirichlet_moment_exact(exponents)?;
    let total: u64 = exponents.iter().sum();
    Ok(to_f64(&c) * tau.powi((total + exponents.len() as u64 - 1) as i32))
}
