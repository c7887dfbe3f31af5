//! Acceptance suite: every headline claim of the construction, checked at
//! its stated tolerance. Each test prints one PASS line (visible with
//! `cargo test --test acceptance -- --nocapture`); a failed assertion marks
//! the criterion FAILED.

use pdem_core::*;

const SPECTRUM_TOL: f64 = 1e-4;
const OVERLAP_DEFICIT: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-12;
const RICCATI_TOL: f64 = 1e-10;

fn scarf2(k: f64, b: f64, mass: MassProfile) -> AlgebraRealization {
    AlgebraRealization::new(RealizationClass::NegOmega, k, b, 0.0, mass).unwrap()
}

fn morse(k: f64, b: f64, mass: MassProfile) -> AlgebraRealization {
    AlgebraRealization::new(RealizationClass::ZeroOmega(Sign::Plus), k, b, 0.0, mass).unwrap()
}

fn poschl_teller(k: f64, b: f64, mass: MassProfile) -> AlgebraRealization {
    AlgebraRealization::new(RealizationClass::PosOmega, k, b, 0.0, mass).unwrap()
}

fn spectrum_on_default_grid(r: &AlgebraRealization, levels: usize) -> SpectrumReport {
    let (xl, xr) = solver_domain(r, 20.0).unwrap();
    let n = 4001;
    let h = (xr - xl) / (n - 1) as f64;
    verify_spectrum(r, levels, xl, h, n, true).unwrap()
}

/// A1: the constant-mass Scarf II class (k=2, b=1, c=0) on the default
/// half-width-20 box, 4001 points, Richardson over h and h/2, reproduces
/// the two bound levels -2.25 and -0.25 within 1e-4 each.
#[test]
fn a1_spectrum_constant_mass_scarf2() {
    let r = scarf2(2.0, 1.0, MassProfile::constant());
    let rep = spectrum_on_default_grid(&r, 2);
    assert_eq!(rep.analytic, vec![-2.25, -0.25]);
    for (n, err) in rep.level_errors.iter().enumerate() {
        assert!(
            *err <= SPECTRUM_TOL,
            "level {n}: error {err} exceeds {SPECTRUM_TOL}"
        );
    }
    println!(
        "A1 spectrum reproduction, constant mass: PASS (errors {:.2e}, {:.2e})",
        rep.level_errors[0], rep.level_errors[1]
    );
}

/// A2: deforming the mass (q = 0.5, 1, 2) leaves both levels in place
/// within 1e-4 while V_eff and psi_n change by a table-visible amount.
#[test]
fn a2_mass_independence_of_spectrum() {
    let base = scarf2(2.0, 1.0, MassProfile::constant());
    let base_rep = spectrum_on_default_grid(&base, 2);
    for q in [0.5, 1.0, 2.0] {
        let r = scarf2(2.0, 1.0, MassProfile::rational_deformed(q).unwrap());
        let rep = spectrum_on_default_grid(&r, 2);
        for (n, err) in rep.level_errors.iter().enumerate() {
            assert!(
                *err <= SPECTRUM_TOL,
                "q={q} level {n}: error {err} exceeds {SPECTRUM_TOL}"
            );
        }
        // same grid for both realizations, so pointwise diffs are meaningful
        let veff_base =
            GridFunction::from_fn(rep.x0, rep.h, rep.n, |x| base.potential_veff(2.0, x)).unwrap();
        let veff_q =
            GridFunction::from_fn(rep.x0, rep.h, rep.n, |x| r.potential_veff(2.0, x)).unwrap();
        let dv = veff_base.zip_with(&veff_q, |a, b| (a - b).abs()).unwrap().max_abs();
        // the two domains agree to ~1e-15 (inverse-map rounding), so compare
        // the eigenvector tables index-by-index
        let dpsi = base_rep.eigenvectors[0]
            .values()
            .iter()
            .zip(rep.eigenvectors[0].values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(dv > 1e-3, "q={q}: V_eff unchanged (max diff {dv})");
        assert!(dpsi > 1e-3, "q={q}: psi_0 unchanged (max diff {dpsi})");
    }
    println!("A2 mass-independence of the spectrum (q = 0.5, 1, 2): PASS");
}

/// A3: the other two classes reproduce their towers within 1e-4.
///
/// Morse (k=1, b=1) has the single level -0.25. For the generalized
/// Poschl-Teller class the chain member chi_n is normalizable at the wall
/// only when b > k - n; with the nominal (k=2, b=1) the analytic ground
/// state is excluded and the half-line problem binds exactly one level, the
/// n=1 tower member -0.25. The full two-level tower is verified at b=3.
#[test]
fn a3_all_three_classes() {
    // Morse
    let rm = morse(1.0, 1.0, MassProfile::constant());
    let rep = spectrum_on_default_grid(&rm, 1);
    assert_eq!(rep.analytic, vec![-0.25]);
    assert!(
        rep.level_errors[0] <= SPECTRUM_TOL,
        "Morse level error {}",
        rep.level_errors[0]
    );

    // gen. Poschl-Teller, nominal b = 1 < k = 2: chi_0 fails the wall test,
    // chi_1 is regular, and the numeric problem binds exactly one level
    let rp1 = poschl_teller(2.0, 1.0, MassProfile::constant());
    let (xl, xr) = solver_domain(&rp1, 20.0).unwrap();
    let n = 4001;
    let h = (xr - xl) / (n - 1) as f64;
    assert!(matches!(
        chain_member(&rp1, 0, xl, h, n),
        Err(CoreError::NonNormalizable { n: 0, .. })
    ));
    assert!(chain_member(&rp1, 1, xl, h, n).is_ok());
    let solve2 = |width: f64| {
        let (xl, xr) = solver_domain(&rp1, width).unwrap();
        let h = (xr - xl) / (n - 1) as f64;
        let coarse = discretize_realization(&rp1, xl, h, n).unwrap();
        let fine = discretize_realization(&rp1, xl, 0.5 * h, 2 * n - 1).unwrap();
        let ec: Vec<f64> = coarse.lowest_eigenpairs(2).unwrap().iter().map(|p| p.0).collect();
        let ef: Vec<f64> = fine.lowest_eigenpairs(2).unwrap().iter().map(|p| p.0).collect();
        vec![
            (4.0 * ef[0] - ec[0]) / 3.0,
            (4.0 * ef[1] - ec[1]) / 3.0,
        ]
    };
    let e20 = solve2(20.0);
    let e26 = solve2(26.0);
    // the bound level is the n=1 tower member and is domain-insensitive
    assert!(
        (e20[0] - (-0.25)).abs() <= SPECTRUM_TOL,
        "gPT b=1 bound level {} vs -0.25",
        e20[0]
    );
    assert!((e20[0] - e26[0]).abs() < 1e-6);
    // the next eigenvalue is a box state: nonnegative-ish and box-size
    // dependent, so the -2.25 tower member has no bound counterpart
    assert!(e20[1] > -1e-3, "unexpected second bound level {}", e20[1]);
    assert!((e20[1] - e26[1]).abs() > 1e-4, "second level does not scale with the box");

    // b = 3 > k: the whole tower is regular at the wall and reproduced
    let rp3 = poschl_teller(2.0, 3.0, MassProfile::constant());
    let rep3 = spectrum_on_default_grid(&rp3, 2);
    assert_eq!(rep3.analytic, vec![-2.25, -0.25]);
    for (n, err) in rep3.level_errors.iter().enumerate() {
        assert!(
            *err <= SPECTRUM_TOL,
            "gPT b=3 level {n}: error {err}"
        );
    }
    println!(
        "A3 all three classes: PASS (Morse {:.2e}; gPT b=1 binds only the n=1 member, {:.2e}; gPT b=3 tower {:.2e}, {:.2e})",
        rep.level_errors[0],
        (e20[0] - (-0.25)).abs(),
        rep3.level_errors[0],
        rep3.level_errors[1]
    );
}

/// A4: the differential constraints decay at second order (log-log slope in
/// [1.8, 2.2] over three grids), the algebraic relation stays at 1e-12
/// independent of h, and the three V_k routes agree to 1e-12 pointwise.
#[test]
fn a4_constraint_identities() {
    let r = scarf2(2.0, 1.0, MassProfile::rational_deformed(1.0).unwrap());
    let grids = [(4e-3, 4001usize), (2e-3, 8001), (1e-3, 16001)];
    let mut data = Vec::new();
    for (h, n) in grids {
        let res = r.check_constraints(-8.0, h, n).unwrap();
        assert!(res.r3 <= IDENTITY_TOL, "r3 = {} at h = {h}", res.r3);
        data.push((h, res));
    }
    let slope = |pick: fn(&ConstraintResiduals) -> f64| {
        let pts: Vec<(f64, f64)> = data
            .iter()
            .map(|(h, r)| (h.ln(), pick(r).ln()))
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        num / den
    };
    let s1 = slope(|r| r.r1);
    let s2 = slope(|r| r.r2);
    assert!((1.8..=2.2).contains(&s1), "r1 slope {s1}");
    assert!((1.8..=2.2).contains(&s2), "r2 slope {s2}");

    // algebraic relation for the other classes, h-independent
    let rz = morse(1.3, 1.1, MassProfile::rational_deformed(1.0).unwrap());
    for (h, n) in [(2e-2, 501usize), (1e-2, 1001)] {
        let res = rz.check_constraints(-2.0, h, n).unwrap();
        assert_eq!(res.r3, 0.0, "omega = 0 relation is exact");
    }
    let rp = poschl_teller(2.0, 3.0, MassProfile::rational_deformed(1.0).unwrap());
    for (h, n) in [(2e-2, 501usize), (1e-2, 1001)] {
        let res = rp.check_constraints(0.5, h, n).unwrap();
        assert!(res.r3 <= IDENTITY_TOL, "gPT r3 = {}", res.r3);
    }

    // three-way potential equality per class on domains where the
    // potentials are O(10^2) at most
    let deformed = MassProfile::rational_deformed(1.0).unwrap();
    let cases: Vec<(AlgebraRealization, f64, f64, usize)> = vec![
        (scarf2(2.0, 1.0, MassProfile::constant()), -8.0, 0.01, 1601),
        (scarf2(2.0, 1.0, deformed.clone()), -8.0, 0.01, 1601),
        (morse(1.3, 1.1, deformed.clone()), -2.0, 0.01, 1001),
        (
            AlgebraRealization::new(
                RealizationClass::ZeroOmega(Sign::Minus),
                1.3,
                1.1,
                0.0,
                deformed.clone(),
            )
            .unwrap(),
            -8.0,
            0.01,
            901,
        ),
        (poschl_teller(2.0, 3.0, deformed), 0.5, 0.01, 1501),
    ];
    for (r, x0, h, n) in &cases {
        for i in 0..*n {
            let x = x0 + i as f64 * h;
            let vmu = r.potential_vmu(r.k(), x).unwrap();
            let vk = r.potential_vk(x).unwrap();
            let cf = r.potential_vk_closed_form(x).unwrap();
            assert!(
                (vmu - vk).abs() <= IDENTITY_TOL && (vk - cf).abs() <= IDENTITY_TOL,
                "{:?} at x = {x}: {vmu} / {vk} / {cf}",
                r.class()
            );
        }
    }
    println!("A4 constraint identities: PASS (slopes r1 {s1:.2}, r2 {s2:.2}; r3 and V_k equality at 1e-12)");
}

/// A5: V_eff assembled from the bare potential of five random ambiguity
/// pairs agrees with the direct route to 1e-12 pointwise.
#[test]
fn a5_ambiguity_invariance() {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x4a5_0001);
    let deformed = MassProfile::rational_deformed(1.0).unwrap();
    let realizations = vec![
        (scarf2(2.0, 1.0, deformed.clone()), -8.0, 0.02, 801usize),
        (morse(1.3, 1.1, deformed.clone()), -2.0, 0.02, 501),
        (poschl_teller(2.0, 3.0, deformed), 0.5, 0.02, 751),
    ];
    for trial in 0..5 {
        let alpha: f64 = rng.random_range(-2.0..2.0);
        let beta: f64 = rng.random_range(-2.0..2.0);
        let a = AmbiguityParams::new(alpha, beta).unwrap();
        for (r, x0, h, n) in &realizations {
            for i in 0..*n {
                let x = x0 + i as f64 * h;
                let direct = r.potential_veff(r.k(), x).unwrap();
                let via = r.potential_veff_via_ambiguity(&a, r.k(), x).unwrap();
                assert!(
                    (direct - via).abs() <= IDENTITY_TOL,
                    "trial {trial} ({alpha}, {beta}) {:?} x themselves = {x}: {direct} vs {via}",
                    r.class()
                );
            }
        }
    }
    println!("A5 ambiguity invariance (5 random pairs, 3 classes): PASS");
}

/// A6: the algebraic structure survives discretization: J_- annihilates
/// chi_0 and the commutator closes, both decaying at second order across
/// two resolutions, while raising chi_0 reproduces the analytic mu = k+1
/// member with overlap >= 1 - 1e-6.
#[test]
fn a6_algebraic_structure() {
    let r = scarf2(2.0, 1.0, MassProfile::rational_deformed(1.0).unwrap());
    let run = |h: f64, n: usize| {
        let chi = chi0(&r, -12.0, h, n).unwrap();
        let ann = ladder_apply(&r, LadderDirection::Lower, r.k(), &chi).unwrap();
        let ann_res = ann.max_abs() / chi.max_abs();

        let raised = ladder_apply(&r, LadderDirection::Raise, r.k(), &chi).unwrap();
        let target = GridFunction::from_fn(-12.0, h, n, |x| {
            let (f, g) = r.fg_at(x)?;
            Ok(g - r.k() * f)
        })
        .unwrap()
        .zip_with(&chi, |fac, c| fac * c)
        .unwrap();
        let cos = raised.inner_product(&target).unwrap() / (raised.l2_norm() * target.l2_norm());

        let mu = 1.7;
        let g = GridFunction::from_fn(-12.0, h, n, |x| Ok((-(x - 0.4) * (x - 0.4) / 2.0).exp()))
            .unwrap();
        let jm = ladder_apply(&r, LadderDirection::Lower, mu, &g).unwrap();
        let jpjm = ladder_apply(&r, LadderDirection::Raise, mu - 1.0, &jm).unwrap();
        let jp = ladder_apply(&r, LadderDirection::Raise, mu, &g).unwrap();
        let jmjp = ladder_apply(&r, LadderDirection::Lower, mu + 1.0, &jp).unwrap();
        let mut comm = 0.0f64;
        for i in 2..n - 2 {
            comm = comm
                .max((jpjm.values()[i] - jmjp.values()[i] + 2.0 * mu * g.values()[i]).abs());
        }
        (ann_res, cos.abs(), comm / g.max_abs())
    };
    let (ann_a, cos_a, comm_a) = run(1e-3, 24001);
    let (ann_b, cos_b, comm_b) = run(5e-4, 48001);
    assert!(ann_a <= 1e-4, "annihilation residual {ann_a}");
    assert!(ann_a / ann_b > 3.0, "annihilation ratio {}", ann_a / ann_b);
    assert!(comm_a <= 1e-4, "commutator defect {comm_a}");
    assert!(comm_a / comm_b > 3.0, "commutator ratio {}", comm_a / comm_b);
    assert!(cos_a >= 1.0 - OVERLAP_DEFICIT, "ladder overlap {cos_a}");
    assert!(cos_b >= 1.0 - OVERLAP_DEFICIT, "ladder overlap {cos_b}");
    println!(
        "A6 algebraic structure: PASS (J- {:.1e} ratio {:.1}, commutator {:.1e} ratio {:.1}, overlap deficits {:.1e}/{:.1e})",
        ann_a,
        ann_a / ann_b,
        comm_a,
        comm_a / comm_b,
        1.0 - cos_a,
        1.0 - cos_b
    );
}

/// A7: intertwining: the Riccati residual sits at rounding level for both
/// branches on all classes, the operator defect decays under refinement,
/// the Plus-branch partner spectrum equals the base spectrum with the
/// lowest level deleted, and lambda_+ is the ground-state energy bitwise.
#[test]
fn a7_intertwining() {
    let deformed = MassProfile::rational_deformed(1.0).unwrap();
    let cases: Vec<(AlgebraRealization, f64, f64, usize)> = vec![
        (scarf2(2.0, 1.0, MassProfile::constant()), -10.0, 0.01, 2001),
        (scarf2(2.0, 1.0, deformed.clone()), -10.0, 0.01, 2001),
        (morse(1.0, 1.0, deformed.clone()), -1.5, 0.01, 2001),
        (
            AlgebraRealization::new(
                RealizationClass::ZeroOmega(Sign::Minus),
                1.0,
                1.0,
                0.0,
                deformed.clone(),
            )
            .unwrap(),
            -18.5,
            0.01,
            2001,
        ),
        (poschl_teller(2.0, 3.0, deformed.clone()), 0.5, 0.01, 1951),
    ];
    for (r, x0, h, n) in &cases {
        for branch in [Branch::Plus, Branch::Minus] {
            let sol = build_intertwiner(r, branch, *x0, *h, *n).unwrap();
            let res = riccati_residual(&sol, r).unwrap();
            assert!(
                res <= RICCATI_TOL,
                "{:?} {branch:?}: Riccati residual {res}",
                r.class()
            );
            assert_eq!(
                sol.lambda(),
                match branch {
                    Branch::Plus => -(r.k() - 0.5) * (r.k() - 0.5),
                    Branch::Minus => -(r.k() + 0.5) * (r.k() + 0.5),
                }
            );
        }
        // lambda_+ is E_0 bit-for-bit
        let plus = build_intertwiner(r, Branch::Plus, *x0, *h, *n).unwrap();
        assert_eq!(plus.lambda().to_bits(), r.energy(0).to_bits());
    }

    // operator defect on 10 seeded test functions decays under refinement
    let rc = scarf2(2.0, 1.0, MassProfile::constant());
    let defect = |h: f64, n: usize| {
        let sol = build_intertwiner(&rc, Branch::Plus, -12.0, h, n).unwrap();
        verify_intertwining(&sol, &rc, 10, 20240901).unwrap()
    };
    let da = defect(2e-3, 12001);
    let db = defect(1e-3, 24001);
    assert!(db <= 1e-3, "defect {db} at h = 1e-3");
    assert!(db <= 0.6 * da, "defect should at least halve: {da} -> {db}");

    // eta annihilates psi_0 at stencil accuracy
    let sol = build_intertwiner(&rc, Branch::Plus, -12.0, 1e-3, 24001).unwrap();
    let ch = chain(&rc, 0, -12.0, 1e-3, 24001).unwrap();
    let eta_psi0 = sol.apply_eta(ch.psi(0)).unwrap();
    let eta_ratio = eta_psi0.max_abs() / ch.psi(0).max_abs();
    assert!(eta_ratio <= 1e-3, "|eta psi_0| ratio {eta_ratio}");

    // spectral shift: lowest level of H_1 = second level of H within 1e-4
    let (xl, xr) = solver_domain(&rc, 20.0).unwrap();
    let n = 4001;
    let h = (xr - xl) / (n - 1) as f64;
    let partner = |nn: usize, hh: f64| {
        let s = build_intertwiner(&rc, Branch::Plus, xl, hh, nn).unwrap();
        let hd = discretize(s.v1_eff(), rc.mass()).unwrap();
        hd.lowest_eigenpairs(1).unwrap()[0].0
    };
    let p_h = partner(n, h);
    let p_h2 = partner(2 * n - 1, 0.5 * h);
    let partner_lowest = (4.0 * p_h2 - p_h) / 3.0;
    let base = spectrum_on_default_grid(&rc, 2);
    let base_second = base.extrapolated.as_ref().unwrap()[1];
    assert!(
        (partner_lowest - base_second).abs() <= SPECTRUM_TOL,
        "partner lowest {partner_lowest} vs base second {base_second}"
    );
    println!(
        "A7 intertwining: PASS (Riccati at rounding, defect {:.1e} -> {:.1e}, |eta psi0| {:.1e}, shift error {:.1e})",
        da,
        db,
        eta_ratio,
        (partner_lowest - base_second).abs()
    );
}

/// A8: closed-form psi_n and numeric eigenvectors overlap to 1 - 1e-6 with
/// exact node counts, for every state the closed forms define (n <= 2).
#[test]
fn a8_eigenfunction_cross_validation() {
    // k = 3 supports three states, exercising chi_2
    for (mass, label) in [
        (MassProfile::constant(), "constant"),
        (MassProfile::rational_deformed(1.0).unwrap(), "q=1"),
    ] {
        let r = scarf2(3.0, 1.0, mass);
        let rep = spectrum_on_default_grid(&r, 3);
        for n in 0..3 {
            let overlap = rep.overlaps[n].expect("closed form exists");
            assert!(
                overlap >= 1.0 - OVERLAP_DEFICIT,
                "{label} n={n}: overlap {overlap}"
            );
            assert_eq!(
                rep.eigenvectors[n].sign_changes(1e-8),
                n,
                "{label} n={n}: node count"
            );
        }
    }
    // half-line class with a regular chain
    let rp = poschl_teller(2.0, 3.0, MassProfile::constant());
    let rep = spectrum_on_default_grid(&rp, 2);
    for n in 0..2 {
        let overlap = rep.overlaps[n].expect("closed form exists");
        assert!(overlap >= 1.0 - OVERLAP_DEFICIT, "gPT n={n}: overlap {overlap}");
        assert_eq!(rep.eigenvectors[n].sign_changes(1e-8), n);
    }
    println!("A8 eigenfunction cross-validation: PASS (overlaps >= 1 - 1e-6, node counts exact)");
}
