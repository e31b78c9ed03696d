//! Elementary number theory on machine integers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

/// Prime factorisation as sorted `(prime, exponent)` pairs.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    fn rec(n: u64, out: &mut Vec<u64>) {
        if n == 1 {
            return;
        }
        if is_prime(n) {
            out.push(n);
            return;
        }
        for p in [2u64, 3, 5, 7, 11, 13] {
            if n % p == 0 {
                out.push(p);
                rec(n / p, out);
                return;
            }
        }
        let d = pollard_rho(n);
        rec(d, out);
        rec(n / d, out);
    }
    let mut primes = Vec::new();
    rec(n, &mut primes);
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factorize(n) {
        let base = divs.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            divs.extend(base.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    divs
}

/// Smallest primitive root modulo the prime `p`.
pub fn primitive_root(p: u64) -> Option<u64> {
    if !is_prime(p) {
        return None;
    }
    if p == 2 {
        return Some(1);
    }
    let factors = factorize(p - 1);
    (2..p).find(|&g| factors.iter().all(|&(q, _)| pow_mod(g, (p - 1) / q, p) != 1))
}

pub fn multiplicative_order(a: u64, p: u64) -> u64 {
    let n = p - 1;
    let mut ord = n;
    for (q, _) in factorize(n) {
        while ord % q == 0 && pow_mod(a, ord / q, p) == 1 {
            ord /= q;
        }
    }
    ord
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn next_prime(n: u64) -> u64 {
    let mut m = n.max(2);
    while !is_prime(m) {
        m += 1;
    }
    m
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut p = 2;
    while out.len() < count {
        if is_prime(p) {
            out.push(p);
        }
        p += 1;
    }
    out
}

/// Smallest `x >= 0` with `base^x >= n`, computed exactly.
pub fn ceil_log(base: u64, n: &BigUint) -> u64 {
    assert!(base >= 2);
    let b = BigUint::from(base);
    let mut acc = BigUint::one();
    let mut x = 0;
    while &acc < n {
        acc *= &b;
        x += 1;
    }
    x
}

pub fn log2_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map(f64::log2).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::MAX);
    top.log2() + shift as f64
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_prime(n: u64) -> bool {
        n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0..5000 {
            assert_eq!(is_prime(n), naive_prime(n), "{n}");
        }
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007u64 * 998_244_353));
    }

    #[test]
    fn factorization_roundtrip() {
        for n in 1..3000u64 {
            let f = factorize(n);
            assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), n);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
        let big = 1_000_000_007u64 * 998_244_353;
        assert_eq!(factorize(big), vec![(998_244_353, 1), (1_000_000_007, 1)]);
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(primitive_root(7), Some(3));
        assert_eq!(primitive_root(13), Some(2));
        assert_eq!(primitive_root(31), Some(3));
        assert_eq!(primitive_root(61), Some(2));
        assert_eq!(primitive_root(12), None);
    }

    #[test]
    fn inverses_and_logs() {
        assert_eq!(inv_mod(3, 7), Some(5));
        assert_eq!(inv_mod(2, 4), None);
        assert_eq!(ceil_log(3, &BigUint::from(9u32)), 2);
        assert_eq!(ceil_log(3, &BigUint::from(10u32)), 3);
        assert_eq!(ceil_log(5, &BigUint::from(1u32)), 0);
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(euler_phi(12), 4);
    }
}
