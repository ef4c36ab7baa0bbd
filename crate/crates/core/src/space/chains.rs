//! Enlargements, exhausting sequences and doubling chains.

use super::basis::BallBasis;
use super::region::{AtomSet, Region};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enlargement {
    Star,
    Hull,
    Star2,
    Hull2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Enlarged {
    Set(Region),
    Ball(usize),
}

impl Enlarged {
    pub fn to_bits(&self, basis: &BallBasis) -> AtomSet {
        match self {
            Enlarged::Set(r) => r.to_bits(basis.n_atoms()),
            Enlarged::Ball(b) => basis.ball_set(*b),
        }
    }
}

/// `B*`, `[B]`, `B**` or `[[B]]`.
pub fn enlarge(basis: &BallBasis, id: usize, mode: Enlargement) -> Result<Enlarged> {
    basis.try_ball(id)?;
    Ok(match mode {
        Enlargement::Star => Enlarged::Set(basis.star(id).clone()),
        Enlargement::Hull => Enlarged::Ball(basis.hull(id)),
        Enlargement::Star2 => {
            let star = basis.star_set(id);
            let s2 = basis.star_of_set(&star);
            Enlarged::Set(Region::from_bits(s2).expect("stars are non-empty"))
        }
        Enlargement::Hull2 => Enlarged::Ball(basis.hull(basis.hull(id))),
    })
}

/// `B**` as an atom set.
pub fn double_star(basis: &BallBasis, id: usize) -> AtomSet {
    basis.star_of_set(&basis.star_set(id))
}

/// Increasing chain of balls through atom 0: each step takes the smallest
/// strict superset, so the chain ends at a maximal ball. Every ball of the
/// basis lies inside the last element when the basis contains `X`.
pub fn exhausting_sequence(basis: &BallBasis) -> Vec<usize> {
    let mut chain = vec![basis.containing(0)[0] as usize];
    loop {
        let cur = *chain.last().unwrap();
        match basis.supersets(cur, true).first() {
            Some(&next) => chain.push(next),
            None => break,
        }
    }
    chain
}

/// Whether every ball lies inside some element of the chain (exact check).
pub fn chain_exhausts(basis: &BallBasis, chain: &[usize]) -> bool {
    basis.balls().iter().all(|b| {
        chain
            .iter()
            .any(|&g| b.members.is_subset(&basis.ball(g).members))
    })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DoublingChain {
    pub balls: Vec<usize>,
    /// Largest ratio of consecutive measures.
    pub max_ratio: f64,
    /// The admissible ratio `ηK`.
    pub bound: f64,
    /// `log2(μ(B)/μ(A))` for comparison with the chain length.
    pub log_ratio: f64,
}

/// Chain `A = A_0 ⊂ … ⊂ A_n = [B]`. Each step moves to the smallest ball
/// inside `[B]` that strictly contains the current one and has at least
/// twice its measure, or to `[B]` itself when no such ball exists.
pub fn doubling_chain(basis: &BallBasis, a: usize, b: usize) -> Result<DoublingChain> {
    let eta = basis.eta().ok_or(Error::NotDoubling)?;
    let (ball_a, ball_b) = (basis.try_ball(a)?, basis.try_ball(b)?);
    if !ball_a.members.is_subset(&ball_b.members) {
        return Err(Error::NotComparable { a, b });
    }
    let target = basis.hull(b);
    let t_members = &basis.ball(target).members;
    let mut chain = vec![a];
    let mut max_ratio: f64 = 1.0;
    if a == b {
        if target != a {
            chain.push(target);
            max_ratio = basis.measure(target) / ball_a.measure;
        }
        return Ok(DoublingChain {
            balls: chain,
            max_ratio,
            bound: eta * basis.k(),
            log_ratio: 0.0,
        });
    }
    loop {
        let cur = *chain.last().unwrap();
        let cur_ball = basis.ball(cur);
        if cur_ball.members.len() == t_members.len() {
            break;
        }
        let inside: Vec<usize> = basis
            .supersets(cur, true)
            .into_iter()
            .filter(|&c| basis.ball(c).members.is_subset(t_members))
            .collect();
        let next = inside
            .iter()
            .copied()
            .find(|&c| basis.measure(c) >= 2.0 * cur_ball.measure)
            .unwrap_or(target);
        max_ratio = max_ratio.max(basis.measure(next) / cur_ball.measure);
        chain.push(next);
    }
    Ok(DoublingChain {
        balls: chain,
        max_ratio,
        bound: eta * basis.k(),
        log_ratio: (ball_b.measure / ball_a.measure).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhausting_chains() {
        let d3 = BallBasis::dyadic(3).unwrap();
        let chain = exhausting_sequence(&d3);
        // [0,1/8) ⊂ [0,1/4) ⊂ [0,1/2) ⊂ [0,1)
        assert_eq!(chain, vec![7, 3, 1, 0]);
        assert!(chain_exhausts(&d3, &chain));
        let g4 = BallBasis::grid(4).unwrap();
        let chain = exhausting_sequence(&g4);
        let spans: Vec<_> = chain.iter().map(|&b| g4.ball(b).members.as_span().unwrap()).collect();
        assert_eq!(spans, vec![(0, 0), (0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn doubling_chain_examples() {
        let d6 = BallBasis::dyadic(6).unwrap();
        let atom = d6.filtration().unwrap().generations[6][0];
        let c = doubling_chain(&d6, atom, 0).unwrap();
        assert_eq!(c.balls.len(), 7);
        assert_eq!(c.max_ratio, 2.0);
        let g = BallBasis::grid(64).unwrap();
        let c = doubling_chain(&g, g.grid_ball(0, 0).unwrap(), g.grid_ball(0, 63).unwrap()).unwrap();
        assert!(c.max_ratio <= c.bound);
        assert_eq!(*c.balls.last().unwrap(), g.hull(g.grid_ball(0, 63).unwrap()));
        let same = doubling_chain(&g, 5, 5).unwrap();
        assert_eq!(same.balls, vec![5, g.hull(5)]);
    }

    #[test]
    fn enlarge_modes() {
        let g8 = BallBasis::grid(8).unwrap();
        let b = g8.grid_ball(3, 4).unwrap();
        let h2 = enlarge(&g8, b, Enlargement::Hull2).unwrap();
        assert_eq!(h2, Enlarged::Ball(g8.grid_ball(0, 7).unwrap()));
        let d = BallBasis::dyadic(2).unwrap();
        let s2 = enlarge(&d, 1, Enlargement::Star2).unwrap();
        assert_eq!(s2, Enlarged::Set(Region::span(0, 3)));
    }
}
