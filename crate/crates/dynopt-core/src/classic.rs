//! Classic deterministic dynamic programs used both as standalone utilities
//! and as small, fully checkable oracles.

/// Largest product of `n` non-negative integers summing to `a`, via the
/// recursion `v_n(a) = max_{0 ≤ y ≤ a} y · v_{n−1}(a − y)`.
///
/// Edge cases: `a = 0` gives 0; `n = 1` gives `a`.
pub fn max_product_partition(n: usize, a: u64) -> u64 {
    assert!(n >= 1, "need at least one part");
    if a == 0 {
        return 0;
    }
    if n == 1 {
        return a;
    }
    let a = a as usize;
    // table[k][b] = best product of k parts summing to b.
    let mut prev: Vec<u64> = (0..=a as u64).collect(); // one part: identity
    for _ in 2..=n {
        let mut current = vec![0u64; a + 1];
        for b in 0..=a {
            let mut best = 0;
            for y in 0..=b {
                best = best.max(y as u64 * prev[b - y]);
            }
            current[b] = best;
        }
        prev = current;
    }
    prev[a]
}

/// Minimum number of values from `numbers` (with repetition) summing to
/// `amount`; `None` when the amount is not representable.
pub fn coin_change_min(numbers: &[u64], amount: u64) -> Option<u64> {
    assert!(!numbers.is_empty(), "need at least one denomination");
    assert!(numbers.iter().all(|&c| c > 0), "denominations must be positive");
    let amount = amount as usize;
    let mut table = vec![u64::MAX; amount + 1];
    table[0] = 0;
    for b in 1..=amount {
        for &c in numbers {
            let c = c as usize;
            if c <= b && table[b - c] != u64::MAX {
                table[b] = table[b].min(table[b - c] + 1);
            }
        }
    }
    (table[amount] != u64::MAX).then(|| table[amount])
}

/// Minimum number of single-character edits (insertions, deletions, or
/// substitutions) turning `w1` into `w2`, with `V(0,j) = j`, `V(i,0) = i`.
pub fn edit_distance(w1: &str, w2: &str) -> usize {
    let a: Vec<char> = w1.chars().collect();
    let b: Vec<char> = w2.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + (ca != cb) as usize;
            let del = prev[j + 1] + 1;
            let ins = current[j] + 1;
            current.push(sub.min(del).min(ins));
        }
        prev = current;
    }
    prev[b.len()]
}
