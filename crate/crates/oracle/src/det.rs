//! Exact integer determinants.

/// Fraction-free Gaussian elimination; every intermediate value is a minor
/// of the input, so `i128` is ample for the Laplacians handled here.
pub fn bareiss(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_determinants() {
        assert_eq!(bareiss(vec![]), 1);
        assert_eq!(bareiss(vec![vec![7]]), 7);
        assert_eq!(bareiss(vec![vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(bareiss(vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]]), 4);
        assert_eq!(bareiss(vec![vec![1, 2], vec![2, 4]]), 0);
    }
}
