//! Progressive edge-growth construction of regular parity-check matrices.

use rand::seq::IndexedRandom;

use super::LdpcCode;
use crate::error::{config, Result};
use crate::numkit::rng::rng_from_seed;

/// Builds an `(dv, dc)`-regular code of length `n` by progressive edge growth.
///
/// Each new edge of a variable node goes to the open check farthest from
/// it in the current graph (unreachable checks first), preferring the
/// lowest check degree. Ties are broken with a seeded generator.
pub fn peg_regular(n: usize, dv: usize, dc: usize, seed: u64) -> Result<LdpcCode> {
    if dv == 0 || dc == 0 || !(n * dv).is_multiple_of(dc) {
        return Err(config(format!("no ({dv},{dc})-regular graph with {n} variables")));
    }
    let m = n * dv / dc;
    let mut rng = rng_from_seed(seed);
    let mut cn_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut vn_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dist = vec![usize::MAX; m];
    let mut vn_seen = vec![false; n];

    for v in 0..n {
        for _ in 0..dv {
            // Breadth-first distances from `v` to every check; unreachable stays MAX.
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            vn_seen.iter_mut().for_each(|s| *s = false);
            vn_seen[v] = true;
            let mut frontier: Vec<usize> = vn_adj[v].clone();
            for &c in &frontier {
                dist[c] = 0;
            }
            let mut depth = 0;
            while !frontier.is_empty() {
                depth += 1;
                let mut next = Vec::new();
                for &c in &frontier {
                    for &u in &cn_adj[c] {
                        if std::mem::replace(&mut vn_seen[u], true) {
                            continue;
                        }
                        for &c2 in &vn_adj[u] {
                            if dist[c2] == usize::MAX {
                                dist[c2] = depth;
                                next.push(c2);
                            }
                        }
                    }
                }
                frontier = next;
            }
            let key = |c: usize| (dist[c], std::cmp::Reverse(cn_adj[c].len()));
            let best_key = (0..m)
                .filter(|&c| cn_adj[c].len() < dc && dist[c] != 0)
                .map(key)
                .max()
                .ok_or_else(|| config(format!("edge growth stalled at variable {v}")))?;
            let best: Vec<usize> =
                (0..m).filter(|&c| cn_adj[c].len() < dc && dist[c] != 0 && key(c) == best_key).collect();
            let c = *best.choose(&mut rng).expect("non-empty candidate set");
            cn_adj[c].push(v);
            vn_adj[v].push(c);
        }
    }
    for vs in cn_adj.iter_mut() {
        vs.sort_unstable();
    }
    LdpcCode::from_checks(n, cn_adj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_regular_code_has_exact_degrees() {
        let c = peg_regular(96, 3, 6, 1).unwrap();
        assert_eq!(c.m(), 48);
        assert!((0..96).all(|v| c.variable(v).len() == 3));
        assert!((0..48).all(|k| c.check(k).len() == 6));
    }

    #[test]
    fn no_length_four_cycles() {
        let c = peg_regular(240, 3, 6, 2).unwrap();
        for a in 0..c.m() {
            for b in a + 1..c.m() {
                let shared = c.check(a).iter().filter(|v| c.check(b).contains(v)).count();
                assert!(shared <= 1, "checks {a},{b} share {shared} variables");
            }
        }
    }

    #[test]
    #[ignore = "regenerates the bundled asset (slow)"]
    fn bundled_asset_matches_construction() {
        let c = peg_regular(2400, 3, 6, super::super::BUNDLED_SEED).unwrap();
        assert_eq!(c.to_alist(), LdpcCode::bundled().to_alist());
    }
}
