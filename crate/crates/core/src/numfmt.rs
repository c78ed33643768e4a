/// Rounds to 9 significant decimal digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest text that reads back as `round_sig9(x)`.
pub fn sig9(x: f64) -> String {
    format!("{:?}", round_sig9(x))
}
