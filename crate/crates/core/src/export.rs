//! Text formatting shared by the CSV writers.

use crate::scalar::Scalar;

/// Formats a real with 17 significant digits, enough for an exact `f64`
/// round trip.
pub fn fmt_real<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1f64, 1.0 / 3.0, -2.5e-300, 12345.678901234567, 0.0] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_real(1.0f64), "1.0000000000000000e0");
    }
}
