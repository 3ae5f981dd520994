use kacrice::crn::{conservation_basis, mass_action_rhs, parse_network, reduced_system, stoichiometric_matrix};
use kacrice::polysys::{decompose_linear, ParametrizedSystem};
use num_traits::{ToPrimitive, Zero};
use kacrice::sampling::RngStream;

fn net(name: &str) -> kacrice::crn::ReactionNetwork {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_network(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn conservation_laws_annihilate_stoichiometry() {
    for name in ["hk.net", "joshi.net", "dualphos.net"] {
        let n = net(name);
        let n_mat = stoichiometric_matrix(&n);
        let w = conservation_basis(&n_mat);
        for row in &w {
            for j in 0..n.reactions.len() {
                let s = row
                    .iter()
                    .zip(&n_mat)
                    .fold(num_rational::BigRational::zero(), |acc, (c, nr)| {
                        acc + c * num_rational::BigRational::from_integer(nr[j].into())
                    });
                assert!(s.is_zero(), "{name}");
            }
        }
    }
}

#[test]
fn dual_phosphorylation_has_three_conservation_laws() {
    let n = net("dualphos.net");
    assert_eq!((n.species.len(), n.reactions.len()), (9, 12));
    let w = conservation_basis(&stoichiometric_matrix(&n));
    let rows: Vec<Vec<i64>> = w
        .iter()
        .map(|r| r.iter().map(|x| x.to_integer().to_i64().unwrap()).collect())
        .collect();
    assert_eq!(
        rows,
        vec![
            vec![1, 1, 1, 0, 0, 1, 1, 1, 1],
            vec![0, 0, 0, 1, 0, 1, 1, 0, 0],
            vec![0, 0, 0, 0, 1, 0, 0, 1, 1],
        ]
    );
}

#[test]
fn reduced_systems_decompose_with_monomial_coefficients() {
    for name in ["hk.net", "joshi.net", "dualphos.net"] {
        let n = net(name);
        let red = reduced_system(&n).unwrap();
        assert_eq!(red.sys.n(), n.species.len());
        assert_eq!(red.sys.m(), n.reactions.len() + red.conservation.len());
        let dec = decompose_linear(&red.sys, &red.linear_params).unwrap();
        for h in &dec.h {
            assert_eq!(h.num_terms(), 1, "{name}");
            assert!(h.terms().next().unwrap().1 > 0.0);
        }
        let back = ParametrizedSystem::parse(&red.sys.to_text()).unwrap();
        assert_eq!(back, red.sys);
    }
}

/// The kept rows of the steady-state equations are an invertible linear
/// combination of the reduced equations, so both vanish together.
#[test]
fn reduced_equations_span_the_kept_rows() {
    let mut rng = RngStream::new(7, 0);
    for name in ["hk.net", "joshi.net", "dualphos.net"] {
        let n = net(name);
        let f = mass_action_rhs(&n).unwrap();
        let red = reduced_system(&n).unwrap();
        let n_mat = stoichiometric_matrix(&n);
        let species = n.species.len();
        let r = n.reactions.len();
        for _ in 0..20 {
            let x: Vec<f64> = (0..species).map(|_| 0.1 + 2.9 * rng.next_open01()).collect();
            let k: Vec<f64> = (0..r).map(|_| 0.1 + 2.9 * rng.next_open01()).collect();
            let mut p_f = x.clone();
            p_f.extend(&k);
            let mut p_g = p_f.clone();
            p_g.extend(std::iter::repeat_n(1.0, red.conservation.len()));
            let g: Vec<f64> = red.sys.equations[..red.rows.len()]
                .iter()
                .map(|e| e.evaluate(&p_g).unwrap())
                .collect();
            for (&row, _) in red.rows.iter().zip(&g) {
                let combo: f64 = red
                    .columns
                    .iter()
                    .zip(&g)
                    .map(|(&c, gv)| n_mat[row][c] as f64 * gv)
                    .sum();
                let fv = f[row].evaluate(&p_f).unwrap();
                assert!((combo - fv).abs() <= 1e-10 * (1.0 + fv.abs()), "{name}: {combo} vs {fv}");
            }
        }
    }
}
