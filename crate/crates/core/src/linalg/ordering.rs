use std::collections::BTreeSet;

use super::sparse::CscMatrix;

/// Minimum-degree elimination order on the symmetrized graph of `A + A^T`.
///
/// Works on the explicit elimination graph; ties are broken by the smaller
/// index so the order is reproducible.
pub fn minimum_degree<T>(a: &CscMatrix<T>) -> Vec<usize> {
    minimum_degree_deferred(a, a.ncols)
}

/// Minimum-degree order in which the indices from `lead` on become
/// eligible only after one of their neighbours has been eliminated. Used for
/// saddle systems whose trailing block has a zero diagonal, so that those
/// columns carry fill on the diagonal when they are reached.
pub fn minimum_degree_deferred<T>(a: &CscMatrix<T>, lead: usize) -> Vec<usize> {
    let n = a.ncols;
    let lead = lead.min(n);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for &i in &a.row_idx[a.col_ptr[j]..a.col_ptr[j + 1]] {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut locked: Vec<bool> = (0..n).map(|v| v >= lead).collect();
    let mut queue: BTreeSet<(usize, usize)> =
        adj.iter().enumerate().filter(|(v, _)| !locked[*v]).map(|(v, l)| (l.len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let clique = std::mem::take(&mut adj[v]);
        for &u in &clique {
            if !locked[u] {
                queue.remove(&(adj[u].len(), u));
            }
            merged.clear();
            let (mut p, mut q) = (0, 0);
            let (left, right) = (&adj[u], &clique);
            while p < left.len() || q < right.len() {
                let next = match (left.get(p), right.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        q += 1;
                        y
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            locked[u] = false;
            queue.insert((adj[u].len(), u));
        }
        if queue.is_empty() {
            // Isolated locked indices.
            if let Some(v) = locked.iter().position(|&l| l) {
                locked[v] = false;
                queue.insert((adj[v].len(), v));
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_a_permutation() {
        // Arrow matrix: the hub must be eliminated last.
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0));
            if i > 0 {
                t.push((0, i, 1.0));
                t.push((i, 0, 1.0));
            }
        }
        let a = CscMatrix::from_triplets(n, n, &t);
        let order = minimum_degree(&a);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        // Leaves go first; the hub only once its degree has dropped to one.
        assert!(!order[..n - 2].contains(&0));
    }

    #[test]
    fn deferred_indices_follow_a_neighbour() {
        // Path 0 - 1 - 2 with a zero-diagonal index 3 attached to 2.
        let t = [(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 3, 1.0), (3, 2, 1.0)];
        let a = CscMatrix::from_triplets(4, 4, &t);
        let order = minimum_degree_deferred(&a, 3);
        let pos = |v| order.iter().position(|&x| x == v).unwrap();
        assert!(pos(3) > pos(2));
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }
}
