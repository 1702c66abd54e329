//! Approximate minimum degree ordering on the quotient graph.

use std::collections::BTreeSet;

use super::Pattern;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Variable,
    Element,
    Absorbed,
}

/// Fill-reducing elimination order for the symmetric pattern, returned as
/// `perm[new] = old`.
///
/// Degrees are the usual approximate external degrees, bounded by the exact
/// count of remaining variables. Elements whose variables are all covered by
/// the new pivot element are absorbed. Ties break on the smallest index so the
/// result depends only on the pattern.
pub fn minimum_degree(pattern: &Pattern) -> Vec<usize> {
    let n = pattern.n();
    let mut vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in pattern.entries() {
        if i != j {
            vars[i].push(j);
            vars[j].push(i);
        }
    }
    let mut elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut evars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut state = vec![Node::Variable; n];
    let mut degree: Vec<usize> = vars.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();

    let mut in_lp = vec![usize::MAX; n];
    let mut wstamp = vec![usize::MAX; n];
    let mut w = vec![0usize; n];
    let mut perm = Vec::with_capacity(n);

    for k in 0..n {
        let (_, p) = queue.pop_first().expect("queue holds every remaining variable");
        perm.push(p);

        // Lp: variables adjacent to p directly or through its elements.
        let mut lp = Vec::new();
        in_lp[p] = k;
        for &v in &vars[p] {
            if in_lp[v] != k {
                in_lp[v] = k;
                lp.push(v);
            }
        }
        for &e in &elems[p] {
            for &v in &evars[e] {
                if in_lp[v] != k {
                    in_lp[v] = k;
                    lp.push(v);
                }
            }
            state[e] = Node::Absorbed;
            evars[e] = Vec::new();
        }
        vars[p] = Vec::new();
        elems[p] = Vec::new();
        state[p] = Node::Element;

        for &i in &lp {
            elems[i].retain(|&e| state[e] == Node::Element && e != p);
            vars[i].retain(|&v| in_lp[v] != k && v != p);
        }

        // |Le \ Lp| for every element touching Lp.
        for &i in &lp {
            for &e in &elems[i] {
                if wstamp[e] != k {
                    wstamp[e] = k;
                    w[e] = evars[e].len();
                }
                w[e] -= 1;
            }
        }

        let remaining = n - k - 1;
        let lp_len = lp.len();
        for &i in &lp {
            let mut external = 0usize;
            elems[i].retain(|&e| {
                if w[e] == 0 {
                    // Le is contained in Lp: absorbed into the new element.
                    state[e] = Node::Absorbed;
                    false
                } else {
                    external += w[e];
                    true
                }
            });
            elems[i].push(p);
            let approx = vars[i].len() + (lp_len - 1) + external;
            let d = approx.min(degree[i] + lp_len - 1).min(remaining);
            queue.remove(&(degree[i], i));
            degree[i] = d;
            queue.insert((d, i));
        }
        evars[p] = lp;
    }
    perm
}
