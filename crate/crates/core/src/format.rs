/// Scientific notation with `digits` significant digits, e.g. `sig(0.5, 3) == "5.00e-1"`.
pub fn sig(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}
