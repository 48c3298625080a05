use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("pass@k needs 0 <= c <= n and 1 <= k <= n (got n={n}, c={c}, k={k})")]
pub struct DomainError {
    pub n: u64,
    pub c: u64,
    pub k: u64,
}

/// Unbiased pass@k estimate from `n` samples of which `c` are correct:
/// `1 - C(n-c, k) / C(n, k)`, evaluated as a running product so no
/// binomial coefficient is ever formed.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, DomainError> {
    if c > n || k == 0 || k > n {
        return Err(DomainError { n, c, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// Formats `num/den` as a percentage truncated (not rounded) to two
/// decimals, computed in integers: 51/52 gives "98.07%".
pub fn format_percent(num: u64, den: u64) -> String {
    if den == 0 {
        return "n/a".into();
    }
    let basis_points = (num as u128 * 10_000) / den as u128;
    format!("{}.{:02}%", basis_points / 100, basis_points % 100)
}

/// Same truncation for a real-valued fraction in [0, 1].
pub fn format_fraction(x: f64) -> String {
    let basis_points = (x.clamp(0.0, 1.0) * 10_000.0 + 1e-9).floor() as u64;
    format!("{}.{:02}%", basis_points / 100, basis_points % 100)
}
