use std::collections::VecDeque;

use nalgebra::DMatrix;

/// Row permutation that places a maximum-product transversal on the
/// diagonal: row `i` of the permuted matrix is row `perm[i]` of `a`.
///
/// Solves the assignment problem on costs `log max_k |a_kj| − log |a_ij|`
/// with the Hungarian method. Returns `None` for structurally singular
/// matrices.
pub fn max_product_matching(a: &DMatrix<f64>) -> Option<Vec<usize>> {
    let n = a.nrows();
    const ABSENT: f64 = 1e12;
    let col_max: Vec<f64> = (0..n).map(|j| a.column(j).amax()).collect();
    let cost = |i: usize, j: usize| {
        let v = a[(i, j)].abs();
        if v == 0.0 {
            ABSENT
        } else {
            col_max[j].ln() - v.ln()
        }
    };

    // 1-based potentials; p[j] is the row matched to column j
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let perm: Vec<usize> = (1..=n).map(|j| p[j] - 1).collect();
    if perm.iter().enumerate().any(|(j, &i)| a[(i, j)] == 0.0) {
        return None;
    }
    Some(perm)
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern of `a`:
/// position `i` of the reordered matrix holds original index `perm[i]`.
pub fn reverse_cuthill_mckee(a: &DMatrix<f64>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && (a[(i, j)] != 0.0 || a[(j, i)] != 0.0)).collect()).collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let bfs_levels = |start: usize, visited: &[bool]| -> Vec<usize> {
        let mut level = vec![usize::MAX; n];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut last = vec![start];
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !visited[y] && level[y] == usize::MAX {
                    level[y] = level[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let depth = (0..n).filter(|&i| level[i] != usize::MAX).map(|i| level[i]).max().unwrap_or(0);
        last.clear();
        last.extend((0..n).filter(|&i| level[i] == depth));
        last
    };

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let mut start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        // a couple of sweeps towards a pseudo-peripheral node
        for _ in 0..2 {
            let far = bfs_levels(start, &visited);
            let candidate = *far.iter().min_by_key(|&&i| (degree[i], i)).unwrap();
            if candidate == start {
                break;
            }
            start = candidate;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            let mut next: Vec<usize> = adj[x].iter().copied().filter(|&y| !visited[y]).collect();
            next.sort_by_key(|&y| (degree[y], y));
            for y in next {
                visited[y] = true;
                queue.push_back(y);
            }
        }
    }
    order.reverse();
    order
}
