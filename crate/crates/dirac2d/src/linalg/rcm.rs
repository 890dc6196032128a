//! Reverse Cuthill-McKee ordering for bandwidth reduction.
//!
//! Operates on a symmetric sparsity pattern in CSR form (both triangles
//! present). The returned permutation lists old indices in their new order.
//! Ties are broken by node index, so the ordering is deterministic.

fn degree(u: usize, row_ptr: &[usize]) -> usize {
    row_ptr[u + 1] - row_ptr[u]
}

/// BFS distances from `root` within its component; unreached nodes stay at
/// usize::MAX. Returns the eccentricity of `root` in the component.
fn bfs_distances(root: usize, row_ptr: &[usize], col_idx: &[usize], dist: &mut [usize]) -> usize {
    dist.iter_mut().for_each(|d| *d = usize::MAX);
    dist[root] = 0;
    let mut height = 0usize;
    let mut q = std::collections::VecDeque::from([root]);
    while let Some(u) = q.pop_front() {
        for &v in &col_idx[row_ptr[u]..row_ptr[u + 1]] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                height = height.max(dist[v]);
                q.push_back(v);
            }
        }
    }
    height
}

/// Pseudo-peripheral node of the component containing `seed` (George-Liu:
/// repeatedly jump to a min-degree node of the deepest BFS level until the
/// eccentricity stops growing).
fn pseudo_peripheral(seed: usize, row_ptr: &[usize], col_idx: &[usize], n: usize) -> usize {
    let mut dist = vec![usize::MAX; n];
    let mut height = bfs_distances(seed, row_ptr, col_idx, &mut dist);
    loop {
        let cand = dist
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d == height)
            .min_by_key(|&(i, _)| (degree(i, row_ptr), i))
            .map(|(i, _)| i)
            .expect("deepest BFS level is nonempty");
        let new_height = bfs_distances(cand, row_ptr, col_idx, &mut dist);
        if new_height <= height {
            return cand;
        }
        height = new_height;
    }
}

/// Reverse Cuthill-McKee permutation: `perm[new] = old`.
pub fn rcm_order(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    let mut neighbors = Vec::new();
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // root each component at a pseudo-peripheral node, found starting
        // from the component's min-degree node
        let comp_seed = component_min_degree(seed, row_ptr, col_idx, &visited);
        let root = pseudo_peripheral(comp_seed, row_ptr, col_idx, n);
        let start = perm.len();
        perm.push(root);
        visited[root] = true;
        let mut qi = start;
        while qi < perm.len() {
            let u = perm[qi];
            qi += 1;
            neighbors.clear();
            for &v in &col_idx[row_ptr[u]..row_ptr[u + 1]] {
                if !visited[v] {
                    visited[v] = true;
                    neighbors.push(v);
                }
            }
            neighbors.sort_unstable_by_key(|&v| (degree(v, row_ptr), v));
            perm.extend_from_slice(&neighbors);
        }
    }
    perm.reverse();
    perm
}

/// Min-degree unvisited node reachable from `seed`.
fn component_min_degree(
    seed: usize,
    row_ptr: &[usize],
    col_idx: &[usize],
    visited: &[bool],
) -> usize {
    let mut best = seed;
    let mut seen = vec![false; visited.len()];
    seen[seed] = true;
    let mut stack = vec![seed];
    while let Some(u) = stack.pop() {
        if degree(u, row_ptr) < degree(best, row_ptr)
            || (degree(u, row_ptr) == degree(best, row_ptr) && u < best)
        {
            best = u;
        }
        for &v in &col_idx[row_ptr[u]..row_ptr[u + 1]] {
            if !seen[v] && !visited[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    best
}

/// Half-bandwidth of the pattern under `perm` (`perm[new] = old`).
pub fn permuted_bandwidth(n: usize, row_ptr: &[usize], col_idx: &[usize], perm: &[usize]) -> usize {
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut bw = 0usize;
    for old_i in 0..n {
        let ni = inv[old_i];
        for &old_j in &col_idx[row_ptr[old_i]..row_ptr[old_i + 1]] {
            let nj = inv[old_j];
            bw = bw.max(ni.abs_diff(nj));
        }
    }
    bw
}

#[cfg(test)]
mod tests {
    use super::*;

    /// CSR for a path graph 0-1-2-...-(n-1) given in scrambled vertex labels.
    fn scrambled_path(n: usize, label: impl Fn(usize) -> usize) -> (Vec<usize>, Vec<usize>) {
        let mut adj = vec![Vec::new(); n];
        for i in 0..n - 1 {
            let (a, b) = (label(i), label(i + 1));
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        for mut nb in adj {
            nb.sort_unstable();
            col_idx.extend_from_slice(&nb);
            row_ptr.push(col_idx.len());
        }
        (row_ptr, col_idx)
    }

    #[test]
    fn path_graph_recovers_unit_bandwidth() {
        let n = 37;
        // labels jump around: i -> (7i + 3) mod n, a bijection since gcd(7, 37) = 1
        let (rp, ci) = scrambled_path(n, |i| (7 * i + 3) % n);
        assert!(permuted_bandwidth(n, &rp, &ci, &(0..n).collect::<Vec<_>>()) > 1);
        let perm = rcm_order(n, &rp, &ci);
        assert_eq!(permuted_bandwidth(n, &rp, &ci, &perm), 1);
    }

    #[test]
    fn permutation_is_a_bijection_with_isolated_nodes() {
        // two path components plus two isolated vertices
        let n = 12;
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &[(0, 5), (5, 2), (2, 9), (1, 7), (7, 4)] {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        for mut nb in adj {
            nb.sort_unstable();
            col_idx.extend_from_slice(&nb);
            row_ptr.push(col_idx.len());
        }
        let perm = rcm_order(n, &row_ptr, &col_idx);
        let mut seen = vec![false; n];
        for &p in &perm {
            assert!(!seen[p], "index {p} repeated");
            seen[p] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn grid_bandwidth_close_to_side_length() {
        // 2D grid graph L x L: optimal bandwidth is L, RCM should land near it.
        let l = 12usize;
        let n = l * l;
        let mut adj = vec![Vec::new(); n];
        for x in 0..l {
            for y in 0..l {
                let u = x * l + y;
                if x + 1 < l {
                    adj[u].push((x + 1) * l + y);
                    adj[(x + 1) * l + y].push(u);
                }
                if y + 1 < l {
                    adj[u].push(x * l + y + 1);
                    adj[x * l + y + 1].push(u);
                }
            }
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        for mut nb in adj {
            nb.sort_unstable();
            col_idx.extend_from_slice(&nb);
            row_ptr.push(col_idx.len());
        }
        let perm = rcm_order(n, &row_ptr, &col_idx);
        let bw = permuted_bandwidth(n, &row_ptr, &col_idx, &perm);
        assert!(bw <= 2 * l, "bandwidth {bw} too large for {l}x{l} grid");
    }
}
