use super::{Base, MAX_TAU};

/// Cyclic de Bruijn sequence of order `tau` over `{A, C, G, T}`.
///
/// Uses the FKM (Lyndon word concatenation) construction, which yields the
/// lexicographically smallest such sequence; it starts with `tau` copies of `A`.
pub fn de_bruijn_sequence(tau: usize) -> Vec<Base> {
    assert!(tau >= 1 && tau <= MAX_TAU, "tau must be in 1..={MAX_TAU}");
    let k = 4usize;
    let mut a = vec![0usize; tau + 1];
    let mut out = Vec::with_capacity(k.pow(tau as u32));
    let mut t = 1;
    // iterative form of the recursive db(t, p) generator
    let mut p = 1;
    loop {
        if t > tau {
            if tau % p == 0 {
                out.extend(a[1..=p].iter().map(|&d| Base::ALL[d]));
            }
            // backtrack to the next prenecklace
            let mut i = tau;
            while i > 0 && a[i] == k - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            a[i] += 1;
            for j in i + 1..=tau {
                a[j] = a[j - i];
            }
            p = i;
            t = tau + 1;
            continue;
        }
        a[t] = a[t - p];
        t += 1;
    }
    out
}

/// Linear form of [`de_bruijn_sequence`]: the cyclic sequence followed by its
/// first `tau - 1` bases, so every τ-mer appears exactly once as a window.
pub fn de_bruijn_linear(tau: usize) -> Vec<Base> {
    let mut seq = de_bruijn_sequence(tau);
    let wrap: Vec<Base> = seq[..tau - 1].to_vec();
    seq.extend(wrap);
    seq
}
