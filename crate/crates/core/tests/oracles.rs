mod common;

use common::oracle;
use fixprint::pattern::{shape_distance, shape_similarity, similarity, AbstractionLevel, FixPattern};
use fixprint::syntax::C_GRAMMAR_ID;
use fixprint::treediff::{diff, MatchConfig, TreeIndex};

fn ours(b: &fixprint::SyntaxTree, a: &fixprint::SyntaxTree) -> (Vec<Option<usize>>, usize) {
    let (m, s) = diff(b, a, &MatchConfig::default()).unwrap();
    let fwd = (0..m.before_len()).map(|i| m.after_of(i)).collect();
    (fwd, s.len())
}

#[test]
fn tree_edit_distance_matches_enumeration() {
    let mut rng = common::rng(11);
    for _ in 0..400 {
        let a = common::random_shape(&mut rng, 8);
        let b = common::random_shape(&mut rng, 8);
        assert_eq!(shape_distance(&a, &b), oracle::ted(&a, &b), "{}\n{}", a.to_sexpr(), b.to_sexpr());
        assert_eq!(shape_similarity(&a, &b), oracle::similarity(&a, &b));
    }
}

#[test]
fn pattern_similarity_matches_enumeration() {
    let mut rng = common::rng(12);
    let wrap = |shape| FixPattern {
        level: AbstractionLevel::IdentifiersAndLiterals,
        grammar_id: C_GRAMMAR_ID.into(),
        shape,
    };
    for _ in 0..200 {
        let a = common::random_shape(&mut rng, 8);
        let b = common::random_shape(&mut rng, 8);
        let want = oracle::similarity(&a, &b);
        assert_eq!(similarity(&wrap(a), &wrap(b)).unwrap(), want);
    }
}

#[test]
fn script_is_shortest_for_its_own_mapping() {
    let mut rng = common::rng(13);
    for round in 0..600 {
        let b = common::random_tree(&mut rng, 12);
        let a = if round % 2 == 0 {
            common::mutate_tree(&mut rng, &b, 12)
        } else {
            common::random_tree(&mut rng, 12)
        };
        let (fwd, len) = ours(&b, &a);
        let cost = oracle::script_cost(&TreeIndex::new(&b.root), &TreeIndex::new(&a.root), &fwd);
        assert_eq!(len, cost, "{}\n{}", b.root.to_sexpr(), a.root.to_sexpr());
    }
}

#[test]
fn identical_trees_need_no_script() {
    let mut rng = common::rng(14);
    for _ in 0..200 {
        let t = common::random_tree(&mut rng, 12);
        let (fwd, len) = ours(&t, &t);
        assert_eq!(len, 0);
        assert!(fwd.iter().all(Option::is_some));
    }
}

/// General optimality is out of reach for the greedy matcher; the exhaustive
/// optimum must still never exceed what it produces.
#[test]
fn optimum_never_exceeds_the_greedy_script() {
    let mut rng = common::rng(15);
    for _ in 0..300 {
        let b = common::random_tree(&mut rng, 9);
        let a = common::mutate_tree(&mut rng, &b, 9);
        let (fwd, len) = ours(&b, &a);
        let (bi, ai) = (TreeIndex::new(&b.root), TreeIndex::new(&a.root));
        let best = oracle::min_script_cost(&bi, &ai, usize::MAX);
        assert!(best <= len);
        assert!(best <= oracle::script_cost(&bi, &ai, &fwd));
    }
}

#[test]
fn relabeling_one_leaf_is_one_update() {
    let mut rng = common::rng(16);
    let mut checked = 0;
    while checked < 200 {
        let b = common::random_tree(&mut rng, 12);
        let mut root = b.root.clone();
        let leaf = root.preorder().position(|n| n.is_leaf()).unwrap();
        fn relabel(n: &mut fixprint::SyntaxNode, k: &mut usize) -> bool {
            if *k == 0 {
                let t = n.token.as_deref().unwrap();
                n.token = Some(format!("{t}_renamed"));
                return true;
            }
            *k -= 1;
            n.children.iter_mut().any(|c| relabel(c, k))
        }
        relabel(&mut root, &mut leaf.clone());
        let a = common::tree(root);
        let (fwd, len) = ours(&b, &a);
        assert_eq!(len, 1);
        assert!(fwd.iter().all(Option::is_some));
        let best = oracle::min_script_cost(&TreeIndex::new(&b.root), &TreeIndex::new(&a.root), usize::MAX);
        assert_eq!(best, 1);
        checked += 1;
    }
}

#[test]
fn consistent_renaming_maps_every_node() {
    let mut rng = common::rng(17);
    for _ in 0..200 {
        let b = common::random_tree(&mut rng, 12);
        let mut root = b.root.clone();
        fn rename(n: &mut fixprint::SyntaxNode) -> usize {
            let here = match n.token.as_deref() {
                Some("x") => {
                    n.token = Some("renamed".into());
                    1
                }
                _ => 0,
            };
            here + n.children.iter_mut().map(rename).sum::<usize>()
        }
        let changed = rename(&mut root);
        let a = common::tree(root);
        let (fwd, len) = ours(&b, &a);
        assert!(fwd.iter().all(Option::is_some), "{}", b.root.to_sexpr());
        assert_eq!(len, changed);
        let best = oracle::min_script_cost(&TreeIndex::new(&b.root), &TreeIndex::new(&a.root), usize::MAX);
        assert_eq!(best, changed);
    }
}

