use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqm_core::codes::{make_toric, Boundary};
use sqm_core::error::Error;
use sqm_core::fractal::{
    carpet, css_permutation_equivalent, cycle_code, hypergraph_product, locality_check,
    random_local_code, LocalCodeOnRegion, LocalCodeParams,
};
use sqm_core::linalg::quantum_dimension;
use sqm_core::{Fe, Field, SparseFqMatrix};

#[test]
fn carpet_counts_and_nesting() {
    for a in 3..=8usize {
        for i in 0..=4usize {
            if (a as u64).pow(i as u32) > 5000 {
                continue;
            }
            let c = carpet(a, i).unwrap();
            assert_eq!(c.len() as u128, c.expected_count());
            assert_eq!(c.len() as u64, (4 * a as u64 - 4).pow(i as u32));
            if i > 0 {
                assert_eq!(c.coarsen(), carpet(a, i - 1).unwrap().squares);
            }
            let side = c.side();
            assert!(c
                .squares
                .iter()
                .all(|&(x, y)| (0..side).contains(&x) && (0..side).contains(&y)));
        }
    }
}

/// A cell survives iff no base-A digit position has both digits interior.
fn in_carpet(a: i64, level: usize, mut x: i64, mut y: i64) -> bool {
    for _ in 0..level {
        let (dx, dy) = (x % a, y % a);
        if (1..a - 1).contains(&dx) && (1..a - 1).contains(&dy) {
            return false;
        }
        x /= a;
        y /= a;
    }
    true
}

#[test]
fn carpet_matches_digit_rule() {
    for a in 3..=5i64 {
        for level in 0..=3usize {
            let side = a.pow(level as u32);
            let expected: BTreeSet<(i64, i64)> = (0..side)
                .flat_map(|x| (0..side).map(move |y| (x, y)))
                .filter(|&(x, y)| in_carpet(a, level, x, y))
                .collect();
            assert_eq!(carpet(a as usize, level).unwrap().squares, expected);
        }
    }
}

#[test]
fn random_local_code_on_level_two_carpet() {
    let region = carpet(3, 2).unwrap();
    let f = Field::binary();
    let code = random_local_code(&region, &f, &LocalCodeParams::with_seed(4)).unwrap();
    let h = code.matrix();
    assert_eq!((h.rows(), h.cols()), (64, 64));
    let rep = code.locality();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.max_distance <= 2.0);
    assert!(h.max_row_weight() == 3 && h.max_col_weight() <= 6);
    for c in 0..64 {
        assert_eq!(h.row(c).len(), 3);
    }
    for b in 0..64 {
        assert!(!h.col(b).is_empty());
    }
    let supports: BTreeSet<Vec<usize>> = (0..64)
        .map(|r| h.row(r).iter().map(|e| e.0).collect())
        .collect();
    assert_eq!(supports.len(), 64);

    let again = random_local_code(&region, &f, &LocalCodeParams::with_seed(4)).unwrap();
    assert_eq!(again.matrix(), h);
    let other = random_local_code(&region, &f, &LocalCodeParams::with_seed(5)).unwrap();
    assert_ne!(other.matrix(), h);

    let back = LocalCodeOnRegion::from_text(&code.to_text()).unwrap();
    assert_eq!(back.matrix(), h);
    assert_eq!(back.bit_coords, code.bit_coords);
    assert!(back.locality().pass);
}

#[test]
fn denser_local_codes_over_larger_fields() {
    let region = carpet(4, 2).unwrap();
    let f = Field::new(2, 2).unwrap();
    let p = LocalCodeParams {
        bits_per_square: 2,
        checks_per_square: 2,
        radius: 1.5,
        check_weight: 4,
        max_bit_degree: 5,
        max_retries: 10_000,
        seed: 1,
    };
    let code = random_local_code(&region, &f, &p).unwrap();
    assert!(code.locality().pass);
    assert_eq!(code.matrix().cols(), 2 * 144);
    assert!(code.matrix().max_col_weight() <= 5);
}

#[test]
fn degenerate_and_infeasible_specs() {
    let region = carpet(3, 1).unwrap();
    let f = Field::binary();
    let mut p = LocalCodeParams::with_seed(0);
    p.checks_per_square = 0;
    assert!(matches!(
        random_local_code(&region, &f, &p),
        Err(Error::Degenerate(_))
    ));
    let mut p = LocalCodeParams::with_seed(0);
    p.check_weight = 10;
    p.max_bit_degree = 2;
    assert!(random_local_code(&region, &f, &p).is_err());
    // radius 0 leaves each check a single bit: repeated supports cannot be avoided
    let mut p = LocalCodeParams::with_seed(0);
    p.radius = 0.0;
    p.check_weight = 1;
    p.checks_per_square = 2;
    p.max_retries = 50;
    assert!(matches!(
        random_local_code(&region, &f, &p),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn long_edge_is_reported() {
    let f = Field::binary();
    let h = SparseFqMatrix::from_triples(
        &f,
        2,
        2,
        [(0, 0, Fe::ONE), (1, 1, Fe::ONE), (1, 0, Fe::ONE)],
    )
    .unwrap();
    let bits = vec![vec![0, 0], vec![5, 0]];
    let checks = vec![vec![0, 1], vec![5, 1]];
    let rep = locality_check(&h, &checks, &bits, 2.0, 2);
    assert!(!rep.pass);
    assert_eq!(rep.long_edges.len(), 1);
    assert_eq!((rep.long_edges[0].check, rep.long_edges[0].bit), (1, 0));
    assert!((rep.max_distance - 26f64.sqrt()).abs() < 1e-12);
}

/// Applies a qubit permutation and compares row sets.
fn same_rows(a: &SparseFqMatrix, b: &SparseFqMatrix, perm: &[usize]) -> bool {
    let rows = |m: &SparseFqMatrix, p: Option<&[usize]>| -> BTreeSet<Vec<(usize, u16)>> {
        (0..m.rows())
            .map(|r| {
                let mut v: Vec<(usize, u16)> = m
                    .row(r)
                    .iter()
                    .map(|&(c, x)| (p.map_or(c, |p| p[c]), x.0))
                    .collect();
                v.sort_unstable();
                v
            })
            .collect()
    };
    rows(a, Some(perm)) == rows(b, None)
}

#[test]
fn product_of_cycles_is_the_toric_code() {
    let f = Field::binary();
    for l in 2..=4 {
        let h = cycle_code(&f, l).unwrap();
        let cc = hypergraph_product(&h, &h).unwrap();
        let hgp = cc.to_quantum("hgp").unwrap();
        let toric = make_toric().instantiate(&[l], Boundary::Torus).unwrap();
        assert_eq!(hgp.n(), toric.n());
        assert_eq!(quantum_dimension(&hgp).unwrap(), 2);
        let perm = css_permutation_equivalent(&hgp, &toric)
            .unwrap()
            .expect("equivalent");
        let (ax, az) = hgp.quantum_matrices().unwrap();
        let (bx, bz) = toric.quantum_matrices().unwrap();
        assert!(
            (same_rows(ax, bx, &perm) && same_rows(az, bz, &perm))
                || (same_rows(ax, bz, &perm) && same_rows(az, bx, &perm))
        );
    }
}

#[test]
fn inequivalent_codes_are_told_apart() {
    let f = Field::binary();
    let h3 = cycle_code(&f, 3).unwrap();
    let h = SparseFqMatrix::from_triples(
        &f,
        3,
        3,
        [
            (0, 0, Fe::ONE),
            (0, 1, Fe::ONE),
            (1, 1, Fe::ONE),
            (1, 2, Fe::ONE),
            (2, 0, Fe::ONE),
            (2, 2, Fe::ONE),
            (2, 1, Fe::ONE),
        ],
    );
    let other = hypergraph_product(&h3, &h.unwrap())
        .unwrap()
        .to_quantum("x")
        .unwrap();
    let toric = make_toric().instantiate(&[3], Boundary::Torus).unwrap();
    assert!(css_permutation_equivalent(&other, &toric)
        .unwrap()
        .is_none());
}

#[test]
fn degenerate_product_is_still_a_complex() {
    let f = Field::new(3, 1).unwrap();
    let z = SparseFqMatrix::zeros(&f, 1, 1);
    let h = cycle_code(&f, 3).unwrap();
    let cc = hypergraph_product(&z, &h).unwrap();
    assert!(cc.is_complex().unwrap());
    assert_eq!(cc.dims(), [3, 3 + 3, 3]);
    assert!(cc.boundary1().mul(&cc.boundary2()).unwrap().is_zero());
}

#[test]
fn product_embedding_is_local_in_four_dimensions() {
    let region = carpet(3, 1).unwrap();
    let f = Field::binary();
    let c1 = random_local_code(&region, &f, &LocalCodeParams::with_seed(1)).unwrap();
    let c2 = random_local_code(&region, &f, &LocalCodeParams::with_seed(2)).unwrap();
    let cc = hypergraph_product(c1.matrix(), c2.matrix()).unwrap();
    let coords = cc
        .product_embedding(
            (&c1.bit_coords, &c1.check_coords),
            (&c2.bit_coords, &c2.check_coords),
        )
        .unwrap();
    assert!(coords.iter().all(|v| v.iter().all(|p| p.len() == 4)));
    let rep = cc.product_locality(&coords, 2.0, c1.density_cap * c2.density_cap);
    assert!(rep.pass, "{rep:?}");
    assert!(rep.max_distance <= 2.0);
    assert_eq!(rep.max_population, 4);
}

fn random_matrix(f: &Field, rng: &mut ChaCha8Rng) -> SparseFqMatrix {
    let rows = rng.gen_range(1..6);
    let cols = rng.gen_range(1..6);
    let triples: Vec<(usize, usize, Fe)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .filter_map(|(r, c)| {
            rng.gen_bool(0.4)
                .then_some(())
                .map(|_| (r, c, f.random_nonzero(rng)))
        })
        .collect();
    SparseFqMatrix::from_triples(f, rows, cols, triples).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]
    #[test]
    fn random_products_are_complexes(seed in any::<u64>(), qi in 0usize..5) {
        let (p, e) = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1)][qi];
        let f = Field::new(p, e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&f, &mut rng);
        let b = random_matrix(&f, &mut rng);
        let cc = hypergraph_product(&a, &b).unwrap();
        prop_assert!(cc.is_complex().unwrap());
        let q = cc.to_quantum("hgp").unwrap();
        prop_assert_eq!(q.n(), a.cols() * b.rows() + a.rows() * b.cols());
    }
}
