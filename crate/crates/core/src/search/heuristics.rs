use crate::domain::{BlocksState, MazeState};

pub fn manhattan(a: MazeState, b: MazeState) -> u32 {
    (a.row.abs_diff(b.row) + a.col.abs_diff(b.col)) as u32
}

/// Number of blocks whose support (the block underneath, or the table)
/// differs between `a` and `b`. Each move changes one block's support, so
/// this never overestimates the remaining plan length.
pub fn blocks_mismatch(a: &BlocksState, b: &BlocksState) -> u32 {
    a.blocks()
        .into_iter()
        .filter(|blk| a.below(*blk) != b.below(*blk))
        .count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan(MazeState::new(0, 0), MazeState::new(3, 4)), 7);
        assert_eq!(manhattan(MazeState::new(2, 2), MazeState::new(2, 2)), 0);
    }

    #[test]
    fn mismatch_examples() {
        let s = |l: &[&str]| BlocksState::from_labels(l).unwrap();
        assert_eq!(blocks_mismatch(&s(&["AB", "C"]), &s(&["AB", "C"])), 0);
        assert_eq!(blocks_mismatch(&s(&["AB"]), &s(&["A", "B"])), 1);
        assert_eq!(blocks_mismatch(&s(&["AB"]), &s(&["BA"])), 2);
    }

    proptest! {
        #[test]
        fn manhattan_is_symmetric(a in (0usize..9, 0usize..9), b in (0usize..9, 0usize..9)) {
            let (a, b) = (MazeState::new(a.0, a.1), MazeState::new(b.0, b.1));
            prop_assert_eq!(manhattan(a, b), manhattan(b, a));
        }
    }
}
