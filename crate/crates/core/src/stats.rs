use serde::{Deserialize, Serialize};

/// Mean and dispersion of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub std_dev: f64,
    /// Standard error of the mean.
    pub std_err: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                std_dev: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std_dev = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            count,
            mean,
            std_dev,
            std_err: std_dev / (count as f64).sqrt(),
        }
    }
}

/// Formats a value with six significant digits, `%g` style.
pub fn fmt_sig6(value: f64) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if value == 0.0 {
        return "0".to_string();
    }
    // Round first so that e.g. 999999.7 picks the right exponent.
    let sci = format!("{value:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{value:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_single_value_has_no_dispersion() {
        let s = Summary::of(&[0.4]);
        assert_eq!(s.mean, 0.4);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.std_err, 0.0);
    }

    #[test]
    fn summary_matches_hand_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.std_err - s.std_dev / 2.0).abs() < 1e-15);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(0.5), "0.5");
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_sig6(123456.7), "123457");
        assert_eq!(fmt_sig6(-0.0123456789), "-0.0123457");
        assert_eq!(fmt_sig6(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(999999.7), "1e+06");
    }
}
