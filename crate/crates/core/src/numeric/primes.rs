use alloc::vec::Vec;

use num_integer::Integer;

/// Prime factorisation by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Write `n >= 2` as `root^k` with `root` not a perfect power.
pub fn perfect_power_root(n: u64) -> (u64, u32) {
    let f = factorize(n);
    let g = f.iter().fold(0u32, |g, &(_, e)| g.gcd(&e));
    let root = f.iter().map(|&(p, e)| p.pow(e / g)).product();
    (root, g)
}

/// If `a` and `b` are multiplicatively dependent (`a^j = b^i` for some
/// positive integers), returns the exponents `(i, j)` with `a = r^i`,
/// `b = r^j` over the shared primitive root `r`. Exponent vectors are
/// compared exactly; no floating point is involved.
pub fn multiplicative_relation(a: u64, b: u64) -> Option<(u32, u32)> {
    let (ra, ia) = perfect_power_root(a);
    let (rb, ib) = perfect_power_root(b);
    (ra == rb).then_some((ia, ib))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorizations() {
        assert_eq!(factorize(12), [(2, 2), (3, 1)]);
        assert_eq!(factorize(97), [(97, 1)]);
        assert_eq!(factorize(1), []);
        assert_eq!(perfect_power_root(64), (2, 6));
        assert_eq!(perfect_power_root(36), (6, 2));
        assert_eq!(perfect_power_root(12), (12, 1));
    }

    #[test]
    fn dependence_is_proportional_exponents() {
        assert_eq!(multiplicative_relation(4, 2), Some((2, 1)));
        assert_eq!(multiplicative_relation(8, 4), Some((3, 2)));
        assert_eq!(multiplicative_relation(3, 2), None);
        assert_eq!(multiplicative_relation(12, 6), None);
        assert_eq!(multiplicative_relation(5, 5), Some((1, 1)));
    }

    #[test]
    fn dependence_matches_brute_force_powers() {
        // Oracle: search small exponents for a^j == b^i directly.
        for a in 2u64..40 {
            for b in 2u64..40 {
                let mut brute = false;
                for i in 1u32..7 {
                    for j in 1u32..7 {
                        if (a as u128).pow(j) == (b as u128).pow(i) {
                            brute = true;
                        }
                    }
                }
                assert_eq!(multiplicative_relation(a, b).is_some(), brute, "{a} {b}");
            }
        }
    }
}
