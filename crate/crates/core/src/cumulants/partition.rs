/// All unordered set partitions of `{0, …, n−1}`; blocks are sorted and
/// listed by their smallest element.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, n: usize, used: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let mut blocks = vec![Vec::new(); used];
            for (k, &l) in labels.iter().enumerate() {
                blocks[l].push(k);
            }
            out.push(blocks);
            return;
        }
        // restricted growth strings enumerate each partition once
        for l in 0..=used {
            labels[i] = l;
            rec(i + 1, n, used.max(l + 1), labels, out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    rec(0, n, 0, &mut labels, &mut out);
    out
}

/// Bit mask of a block.
pub fn mask(block: &[usize]) -> usize {
    block.iter().fold(0, |m, i| m | (1 << i))
}

/// `(|ρ|−1)! (−1)^{|ρ|−1}`.
pub fn partition_coefficient(blocks: usize) -> f64 {
    let f: f64 = (1..blocks).map(|k| k as f64).product();
    if blocks % 2 == 1 {
        f
    } else {
        -f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52];
        for (n, b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), *b);
        }
    }

    #[test]
    fn partitions_are_valid_and_distinct() {
        let ps = set_partitions(4);
        let mut seen = std::collections::HashSet::new();
        for p in &ps {
            let mut all: Vec<usize> = p.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, vec![0, 1, 2, 3]);
            assert!(p.windows(2).all(|b| b[0][0] < b[1][0]));
            assert!(seen.insert(p.clone()));
        }
        assert_eq!(ps.iter().filter(|p| p.len() == 2).count(), 7);
    }

    #[test]
    fn coefficients() {
        assert_eq!(partition_coefficient(1), 1.0);
        assert_eq!(partition_coefficient(2), -1.0);
        assert_eq!(partition_coefficient(3), 2.0);
        assert_eq!(partition_coefficient(4), -6.0);
        assert_eq!(mask(&[0, 2]), 5);
    }
}
