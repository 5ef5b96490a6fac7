//! Subset and tuple enumeration shared by the basis indexing and the
//! star-vector spanning checks.
//!
//! Sorted q-subsets of `{0..n-1}` are ordered lexicographically, e.g. for
//! `(n, q) = (4, 2)`: `{0,1} < {0,2} < {0,3} < {1,2} < {1,3} < {2,3}`.

/// Binomial coefficient C(n, q) as u64; zero when `q > n`.
pub fn binomial(n: usize, q: usize) -> u64 {
    if q > n {
        return 0;
    }
    let q = q.min(n - q);
    let mut acc: u128 = 1;
    for i in 0..q {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All sorted q-subsets of `{0..n-1}` in lexicographic order.
pub fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if q > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..q).collect();
    loop {
        out.push(cur.clone());
        // advance to the next subset in lex order
        let mut i = q;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - q {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..q {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Lexicographic rank of a sorted subset of `{0..n-1}`.
pub fn subset_rank(n: usize, subset: &[usize]) -> usize {
    let q = subset.len();
    let mut rank = 0u64;
    let mut prev: isize = -1;
    for (i, &c) in subset.iter().enumerate() {
        for x in (prev + 1) as usize..c {
            rank += binomial(n - 1 - x, q - 1 - i);
        }
        prev = c as isize;
    }
    rank as usize
}

/// Sorted subset of `{0..n-1}` with the given lexicographic rank.
pub fn subset_unrank(n: usize, q: usize, mut rank: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(q);
    let mut x = 0usize;
    for i in 0..q {
        loop {
            let block = binomial(n - 1 - x, q - 1 - i) as usize;
            if rank < block {
                out.push(x);
                x += 1;
                break;
            }
            rank -= block;
            x += 1;
        }
    }
    out
}

/// All p-tuples over `{0..base-1}` in lexicographic order (first position
/// most significant). For `p = 0` the single empty tuple.
pub fn tuples(base: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![vec![]];
    }
    if base == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(base.pow(p as u32));
    let mut cur = vec![0usize; p];
    loop {
        out.push(cur.clone());
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < base {
                break;
            }
            cur[i] = 0;
            if i == 0 {
                return out;
            }
        }
    }
}

/// Lexicographic rank of a tuple over `{0..base-1}`.
pub fn tuple_rank(base: usize, tuple: &[usize]) -> usize {
    let mut rank = 0usize;
    for &t in tuple {
        rank = rank * base + t;
    }
    rank
}

/// Tuple over `{0..base-1}` of length p with the given rank.
pub fn tuple_unrank(base: usize, p: usize, mut rank: usize) -> Vec<usize> {
    let mut out = vec![0usize; p];
    for i in (0..p).rev() {
        out[i] = rank % base;
        rank /= base;
    }
    out
}

/// Rank of the tuple obtained by inserting `coord` at position `gap` into
/// the length-p tuple of the given rank (lexicographic, first position most
/// significant).
pub fn tuple_insert_rank(base: usize, p: usize, rank: usize, gap: usize, coord: usize) -> usize {
    let pow = base.pow((p - gap) as u32);
    let high = rank / pow;
    let low = rank % pow;
    (high * base + coord) * pow + low
}

/// Number of inversions of a word, i.e. pairs `i < j` with `word[i] > word[j]`.
pub fn inversions(word: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..word.len() {
        for j in i + 1..word.len() {
            if word[i] > word[j] {
                count += 1;
            }
        }
    }
    count
}
