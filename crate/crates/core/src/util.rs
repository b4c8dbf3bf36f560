//! Small deterministic enumeration helpers shared across modules.

/// All k-tuples over 0..universe in lexicographic order. k = 0 yields the
/// single empty tuple regardless of the universe.
pub fn k_tuples(universe: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    if universe == 0 {
        return out;
    }
    let mut t = vec![0usize; k];
    loop {
        out.push(t.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            t[pos] += 1;
            if t[pos] < universe {
                break;
            }
            t[pos] = 0;
        }
    }
}

/// All strictly increasing k-subsets of 0..n in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut s: Vec<usize> = (0..k).collect();
    loop {
        out.push(s.clone());
        // advance rightmost index that can still move
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if s[i] < n - (k - i) {
                s[i] += 1;
                for j in i + 1..k {
                    s[j] = s[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Rank of a tuple over 0..universe in row-major order.
pub fn tuple_rank(universe: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &v| acc * universe + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuples_row_major() {
        let t = k_tuples(2, 2);
        assert_eq!(t, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(k_tuples(3, 0), vec![Vec::<usize>::new()]);
        assert!(k_tuples(0, 2).is_empty());
        for (i, tu) in t.iter().enumerate() {
            assert_eq!(tuple_rank(2, tu), i);
        }
    }

    #[test]
    fn subsets_lexicographic() {
        assert_eq!(
            k_subsets(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(k_subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(k_subsets(2, 3).is_empty());
    }
}
