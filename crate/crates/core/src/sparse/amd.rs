//! Approximate minimum degree ordering on a quotient graph.
//!
//! Eliminated nodes become *elements*; a variable's degree is bounded by the
//! sizes of its adjacent elements rather than computed exactly. Aggressive
//! absorption and supervariable detection are not performed, and ties are
//! broken towards the smallest index, so the ordering is a deterministic
//! function of the pattern alone.

use std::collections::BTreeSet;

use super::SparseCcs;
use crate::error::{Error, Result};

/// Fill-reducing permutation for the symmetric matrix whose pattern (upper
/// triangle, or both triangles) is `pattern`. `perm[k]` is the original index
/// eliminated at step `k`.
pub fn amd_order(pattern: &SparseCcs) -> Result<Vec<usize>> {
    let n = pattern.ncols();
    if pattern.nrows() != n {
        return Err(Error::NotSquare(pattern.nrows(), n));
    }

    let mut vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, c, _) in pattern.entries() {
        if r != c {
            vars[r].push(c);
            vars[c].push(r);
        }
    }
    for v in &mut vars {
        v.sort_unstable();
        v.dedup();
    }

    let mut elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    // Variables of each element (valid once the node has been eliminated).
    let mut le: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut eliminated = vec![false; n];
    let mut degree: Vec<usize> = vars.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();

    // mark[i] == stamp  <=>  i is in the current pivot's element
    let mut mark = vec![usize::MAX; n];
    // Scratch for |Le \ Lp| per element, valid while wstamp[e] == stamp.
    let mut wval = vec![0usize; n];
    let mut wstamp = vec![usize::MAX; n];
    let mut perm = Vec::with_capacity(n);
    let mut lp: Vec<usize> = Vec::new();

    for stamp in 0..n {
        let (_, p) = queue.pop_first().expect("queue holds every uneliminated node");
        eliminated[p] = true;
        perm.push(p);

        // Lp = vars(p) ∪ (∪ Le over adjacent elements), minus eliminated nodes.
        lp.clear();
        for &v in &vars[p] {
            if !eliminated[v] && mark[v] != stamp {
                mark[v] = stamp;
                lp.push(v);
            }
        }
        let absorbed = std::mem::take(&mut elems[p]);
        for &e in &absorbed {
            for &v in &le[e] {
                if !eliminated[v] && mark[v] != stamp {
                    mark[v] = stamp;
                    lp.push(v);
                }
            }
            le[e].clear();
        }
        lp.sort_unstable();
        vars[p].clear();

        // Update adjacency of every variable in Lp.
        for &i in &lp {
            vars[i].retain(|&v| !eliminated[v] && mark[v] != stamp);
            elems[i].retain(|e| absorbed.binary_search(e).is_err());
            elems[i].push(p);
        }

        // |Le \ Lp| for every element adjacent to Lp.
        for &i in &lp {
            for &e in &elems[i] {
                if e != p && wstamp[e] != stamp {
                    wstamp[e] = stamp;
                    wval[e] = le[e].iter().filter(|&&v| !eliminated[v] && mark[v] != stamp).count();
                }
            }
        }

        let remaining = n - stamp - 1;
        for &i in &lp {
            let ext: usize = elems[i].iter().filter(|&&e| e != p).map(|&e| wval[e]).sum();
            let approx = vars[i].len() + (lp.len() - 1) + ext;
            let bound = degree[i] + lp.len() - 1;
            let d = approx.min(bound).min(remaining.saturating_sub(1));
            if d != degree[i] {
                queue.remove(&(degree[i], i));
                degree[i] = d;
                queue.insert((d, i));
            }
        }

        le[p].clone_from(&lp);
    }
    Ok(perm)
}
