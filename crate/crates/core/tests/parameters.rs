use sqm_core::codes::{
    make_haah_family, make_ising, make_toric, make_toric_over, Boundary, CodeInstance, Sector,
};
use sqm_core::linalg::{
    classical_dimension, coset_min_weight, distance, is_trivial_logical, kernel_basis,
    quantum_dimension, rank, sector_distance, DistanceMode, Echelon,
};
use sqm_core::{Fe, Field, LaurentPoly, SparseFqMatrix, SparseWord};

/// Minimum nontrivial weight by scanning all q^n words.
fn naive_distance(inst: &CodeInstance, sector: Sector) -> Option<usize> {
    let field = inst.field();
    let q = field.order() as u64;
    let n = inst.n();
    let h = inst.sector_matrix(sector).unwrap();
    let stab = inst.stabilizer_matrix(sector).unwrap().map(Echelon::new);
    let mut best = None;
    for code in 1..q.pow(n as u32) {
        let mut x = code;
        let dense: Vec<Fe> = (0..n)
            .map(|_| {
                let d = (x % q) as u16;
                x /= q;
                Fe(d)
            })
            .collect();
        if h.mul_dense(&dense).iter().any(|v| !v.is_zero()) {
            continue;
        }
        let w = SparseWord::from_dense(&dense);
        if stab.as_ref().is_some_and(|s| s.contains(&w)) {
            continue;
        }
        let wt = w.weight();
        if best.is_none_or(|b| wt < b) {
            best = Some(wt);
        }
    }
    best
}

#[test]
fn ising_chain_parameters() {
    let inst = make_ising(1)
        .unwrap()
        .instantiate(&[5], Boundary::Torus)
        .unwrap();
    let h = inst.classical_matrix().unwrap();
    assert_eq!(rank(h), 4);
    let ker = kernel_basis(h);
    assert_eq!(ker.len(), 1);
    assert_eq!(ker[0].weight(), 5);
    let d = distance(&inst, DistanceMode::Exact, 1 << 20).unwrap();
    assert_eq!(d.distance, Some(5));
    assert!(d.exact);
}

#[test]
fn ising_square_torus_has_only_all_ones() {
    let inst = make_ising(2)
        .unwrap()
        .instantiate(&[3], Boundary::Torus)
        .unwrap();
    assert_eq!(classical_dimension(&inst).unwrap(), 1);
    assert_eq!(
        distance(&inst, DistanceMode::Exact, 1 << 20)
            .unwrap()
            .distance,
        Some(9)
    );
}

#[test]
fn toric_parameters() {
    let i2 = make_toric().instantiate(&[2], Boundary::Torus).unwrap();
    assert_eq!(quantum_dimension(&i2).unwrap(), 2);
    let i3 = make_toric().instantiate(&[3], Boundary::Torus).unwrap();
    let (hx, hz) = i3.quantum_matrices().unwrap();
    assert_eq!((rank(hx), rank(hz)), (8, 8));
    assert_eq!(quantum_dimension(&i3).unwrap(), 2);
    let d = distance(&i3, DistanceMode::Exact, 1 << 20).unwrap();
    assert_eq!(d.distance, Some(3));
    assert_eq!(d.sectors.len(), 2);
    for s in &d.sectors {
        let w = s.witness.as_ref().unwrap();
        assert!(!is_trivial_logical(&i3, s.sector, w).unwrap());
    }
}

#[test]
fn toric_logicals_and_stabilizers() {
    let inst = make_toric().instantiate(&[3], Boundary::Torus).unwrap();
    let lat = inst.lattice().unwrap().clone();
    let n = inst.n();
    assert!(is_trivial_logical(&inst, Sector::X, &SparseWord::zero(n)).unwrap());
    // an X-check row of H_Z is a trivial X-logical
    let (_, hz) = inst.quantum_matrices().unwrap();
    let star = SparseWord::from_entries(n, hz.row(4).iter().copied()).unwrap();
    assert!(is_trivial_logical(&inst, Sector::X, &star).unwrap());
    // qubit 1 of each site along the x axis: a non-contractible loop
    let loop_word =
        SparseWord::from_entries(n, (0..3).map(|x| (lat.coord_index(&[x, 0], 1), Fe::ONE)))
            .unwrap();
    let loop_x =
        SparseWord::from_entries(n, (0..3).map(|x| (lat.coord_index(&[x, 0], 0), Fe::ONE)))
            .unwrap();
    let (hx, _) = inst.quantum_matrices().unwrap();
    let closed = [loop_word, loop_x]
        .into_iter()
        .find(|w| hx.mul_word(w).unwrap().is_zero())
        .unwrap();
    assert!(!is_trivial_logical(&inst, Sector::X, &closed).unwrap());
    let single = SparseWord::from_entries(n, [(0, Fe::ONE)]).unwrap();
    assert!(is_trivial_logical(&inst, Sector::X, &single).is_err());
}

#[test]
fn coset_weight_on_small_toric() {
    let inst = make_toric().instantiate(&[2], Boundary::Torus).unwrap();
    let (_, hz) = inst.quantum_matrices().unwrap();
    let field = inst.field().clone();
    for i in 0..inst.n() {
        let c = SparseWord::from_entries(8, [(i, Fe::ONE)]).unwrap();
        let r = coset_min_weight(hz, &c, 1 << 16).unwrap();
        assert!(r.exact);
        assert_eq!(r.weight, 1);
    }
    // brute force over all 2^8 words and their stabilizer cosets
    let rows: Vec<SparseWord> = (0..hz.rows())
        .map(|r| SparseWord::from_entries(8, hz.row(r).iter().copied()).unwrap())
        .collect();
    for code in 0u32..256 {
        let dense: Vec<Fe> = (0..8).map(|k| Fe(((code >> k) & 1) as u16)).collect();
        let c = SparseWord::from_dense(&dense);
        let mut best = usize::MAX;
        for mask in 0u32..(1 << rows.len()) {
            let mut w = c.clone();
            for (k, r) in rows.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    w = w.add(r, &field);
                }
            }
            best = best.min(w.weight());
        }
        let r = coset_min_weight(hz, &c, 1 << 16).unwrap();
        assert_eq!(r.weight, best);
        assert!(r.weight <= c.weight());
    }
}

#[test]
fn exact_distance_matches_full_enumeration() {
    let f2 = Field::binary();
    let f3 = Field::new(3, 1).unwrap();
    let cases: Vec<CodeInstance> = vec![
        make_ising(1)
            .unwrap()
            .instantiate(&[6], Boundary::Torus)
            .unwrap(),
        make_ising(2)
            .unwrap()
            .instantiate(&[3], Boundary::Torus)
            .unwrap(),
        make_ising(2)
            .unwrap()
            .instantiate(&[3, 4], Boundary::Torus)
            .unwrap(),
        make_toric().instantiate(&[2], Boundary::Torus).unwrap(),
        make_toric().instantiate(&[2, 3], Boundary::Torus).unwrap(),
        make_toric_over(&f3)
            .instantiate(&[2], Boundary::Torus)
            .unwrap(),
        make_haah_family(
            &LaurentPoly::parse("1+x+y", &f2, 2).unwrap(),
            &LaurentPoly::parse("1+x*y", &f2, 2).unwrap(),
        )
        .unwrap()
        .instantiate(&[2, 3], Boundary::Torus)
        .unwrap(),
    ];
    for inst in &cases {
        let q = inst.field().order() as f64;
        assert!(q.powi(inst.n() as i32) <= (1u64 << 20) as f64);
        for sector in inst.sectors() {
            let got = sector_distance(inst, sector, DistanceMode::Exact, 1 << 22).unwrap();
            assert_eq!(
                got.distance,
                naive_distance(inst, sector),
                "{:?} {sector}",
                inst.provenance().family
            );
        }
    }
}

#[test]
fn weight_sorted_search_agrees_with_span_enumeration() {
    let inst = make_toric().instantiate(&[3], Boundary::Torus).unwrap();
    // a budget below 2^10 forces the weight-sorted path
    let small = sector_distance(&inst, Sector::X, DistanceMode::Exact, 1000).unwrap();
    assert_eq!(small.distance, Some(3));
    assert!(sector_distance(&inst, Sector::X, DistanceMode::Exact, 10).is_err());
}

#[test]
fn estimate_is_an_upper_bound() {
    let inst = make_toric().instantiate(&[4], Boundary::Torus).unwrap();
    let est = distance(
        &inst,
        DistanceMode::Estimate {
            trials: 200,
            seed: 7,
        },
        0,
    )
    .unwrap();
    assert!(!est.exact);
    let d = est.distance.unwrap();
    assert!(d >= 4);
    let again = distance(
        &inst,
        DistanceMode::Estimate {
            trials: 200,
            seed: 7,
        },
        0,
    )
    .unwrap();
    assert_eq!(again.distance, est.distance);
}

#[test]
fn dimension_invariant_under_row_operations() {
    let inst = make_toric().instantiate(&[3], Boundary::Torus).unwrap();
    let (hx, hz) = inst.quantum_matrices().unwrap();
    let field = inst.field().clone();
    // append sums of rows and permute
    let extra = SparseFqMatrix::from_triples(
        &field,
        1,
        hx.cols(),
        hx.row(0).iter().chain(hx.row(1)).map(|&(c, v)| (0, c, v)),
    )
    .unwrap();
    let hx2 = hx.vstack(&extra).unwrap();
    let perm: Vec<usize> = (0..hx2.rows()).rev().collect();
    let hx2 = hx2
        .permute(&perm, &(0..hx2.cols()).collect::<Vec<_>>())
        .unwrap();
    let other = CodeInstance::from_quantum_matrices("toric-rows", hx2, hz.clone()).unwrap();
    assert_eq!(quantum_dimension(&other).unwrap(), 2);
}
