/// `I1(4 sqrt(x)) / sqrt(x) = 2 sum_k (4x)^k / (k! (k+1)!)`, evaluated by
/// its power series so that `x = 0` needs no special case.
pub fn bessel_ratio(x: f64) -> f64 {
    let y = 4.0 * x;
    let mut term = 2.0;
    let mut sum = 2.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= y / (k * (k + 1.0));
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            return sum;
        }
    }
}
