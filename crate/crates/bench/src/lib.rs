//! Fixtures shared by the benchmarks in `benches/`.

use indax_core::model::{parse_formula, Signature, Structure, Theory};

pub fn digraph() -> Signature {
    Signature::from_pairs([("R", 2)]).expect("valid signature")
}

/// The directed cycle on `n` points.
pub fn cycle(n: usize) -> Structure {
    let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    Structure::from_tuples(digraph(), n, [("R", edges)]).expect("edges in range")
}

/// The directed path on `n` points; its height grows with `n`, unlike the cycle's.
pub fn path(n: usize) -> Structure {
    let edges: Vec<Vec<usize>> = (1..n).map(|i| vec![i - 1, i]).collect();
    Structure::from_tuples(digraph(), n, [("R", edges)]).expect("edges in range")
}

/// A small dependent theory over one unary and one binary relation.
pub fn sample_theory() -> Theory {
    [
        "(exists x (atom P x))",
        "(exists x (exists y (atom R x y)))",
        "(forall x (not (atom R x x)))",
        "(exists x (and (atom P x) (exists y (atom R x y))))",
    ]
    .iter()
    .map(|s| parse_formula(s).expect("well formed"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        assert_eq!(cycle(5).tuples(0).len(), 5);
        assert_eq!(path(5).tuples(0).len(), 4);
        assert_eq!(sample_theory().len(), 4);
    }
}
