//! Field arithmetic against schoolbook polynomial arithmetic, and vector
//! predicates against brute-force scans.

use erdos_box::gf::{default_modulus, is_irreducible, Field, Scalar, Vector, VectorSpace};

const PRIME_POWERS: [(u32, u32); 10] = [
    (2, 1),
    (3, 1),
    (2, 2),
    (5, 1),
    (7, 1),
    (2, 3),
    (3, 2),
    (11, 1),
    (13, 1),
    (2, 4),
];

/// Product of two polynomials over Z_p reduced by a monic modulus, all
/// coefficient lists low to high.
fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let k = modulus.len() - 1;
    let mut prod = vec![0u32; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for deg in (k..prod.len()).rev() {
        let c = prod[deg];
        if c != 0 {
            for (i, &m) in modulus.iter().enumerate() {
                let t = deg - k + i;
                prod[t] = (prod[t] + p * p - c * m % p) % p;
            }
        }
    }
    prod.truncate(k);
    prod
}

fn all(f: &Field) -> Vec<Scalar> {
    f.elements().collect()
}

#[test]
fn multiplication_matches_polynomial_oracle() {
    for (p, k) in PRIME_POWERS {
        let f = Field::new(p, k, None).unwrap();
        let m = f.modulus().to_vec();
        for a in all(&f) {
            for b in all(&f) {
                let want = poly_mulmod(&f.coeffs(a), &f.coeffs(b), &m, p);
                assert_eq!(f.coeffs(f.mul(a, b)), want, "p={p} k={k} {a}*{b}");
                let sum: Vec<u32> = f
                    .coeffs(a)
                    .iter()
                    .zip(f.coeffs(b))
                    .map(|(x, y)| (x + y) % p)
                    .collect();
                assert_eq!(f.coeffs(f.add(a, b)), sum);
            }
        }
    }
}

#[test]
fn field_axioms_exhaustive() {
    for (p, k) in PRIME_POWERS {
        let f = Field::new(p, k, None).unwrap();
        let els = all(&f);
        assert_eq!(els.len() as u32, f.q());
        for &a in &els {
            assert_eq!(f.add(a, f.zero()), a);
            assert_eq!(f.mul(a, f.one()), a);
            assert_eq!(f.add(a, f.neg(a)), f.zero());
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
            }
            for &b in &els {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.sub(f.add(a, b), b), a);
                for &c in &els {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
        assert!(f.inv(f.zero()).is_err());
    }
}

#[test]
fn multiplicative_group_is_cyclic() {
    for (p, k) in PRIME_POWERS {
        let f = Field::new(p, k, None).unwrap();
        let order = |a: Scalar| {
            let mut x = a;
            let mut n = 1;
            while x != f.one() {
                x = f.mul(x, a);
                n += 1;
            }
            n
        };
        assert!(
            f.nonzero_elements().any(|a| order(a) == f.q() - 1),
            "q = {}",
            f.q()
        );
    }
}

#[test]
fn default_modulus_is_smallest_irreducible() {
    for (p, k) in PRIME_POWERS.into_iter().filter(|&(_, k)| k > 1) {
        let m = default_modulus(p, k);
        assert!(is_irreducible(&m, p));
        // enumerate monic candidates in order of (c_{k-1}, .., c_0)
        let first = (0..p.pow(k))
            .map(|mut i| {
                let mut c = vec![0u32; k as usize + 1];
                c[k as usize] = 1;
                for x in c.iter_mut().take(k as usize) {
                    *x = i % p;
                    i /= p;
                }
                c
            })
            .find(|c| {
                // no root and no factor: brute-force divisibility by every monic lower-degree polynomial
                (1..=k / 2).all(|deg| {
                    (0..p.pow(deg)).all(|mut j| {
                        let mut g = vec![0u32; deg as usize + 1];
                        g[deg as usize] = 1;
                        for x in g.iter_mut().take(deg as usize) {
                            *x = j % p;
                            j /= p;
                        }
                        !divides(&g, c, p)
                    })
                })
            })
            .unwrap();
        assert_eq!(m, first, "p={p} k={k}");
    }
}

fn divides(g: &[u32], c: &[u32], p: u32) -> bool {
    let mut r = c.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dg;
        for (i, &x) in g.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p * p - lead * x % p) % p;
        }
        r.pop();
    }
    r.iter().all(|&x| x == 0)
}

fn spaces() -> Vec<VectorSpace> {
    let mut out = Vec::new();
    for (p, k) in PRIME_POWERS {
        let f = Field::new(p, k, None).unwrap();
        for s in 1..=4usize {
            if (f.q() as u64).pow(s as u32) <= 81 {
                out.push(VectorSpace::new(f.clone(), s));
            }
        }
    }
    out
}

#[test]
fn independence_matches_coefficient_scan() {
    for space in spaces() {
        let f = space.field();
        let vs: Vec<Vector> = space.vectors().collect();
        for v in &vs {
            for w in &vs {
                let dependent = f.elements().any(|l| {
                    f.elements().any(|m| {
                        !(l.is_zero() && m.is_zero())
                            && f.add_vectors(&f.scale(l, v), &f.scale(m, w)).is_zero()
                    })
                });
                assert_eq!(f.linearly_independent(v, w).unwrap(), !dependent, "{v} {w}");
            }
        }
    }
}

#[test]
fn lines_are_canonical() {
    for space in spaces() {
        let f = space.field();
        let vs: Vec<Vector> = space.vectors().collect();
        for a in &vs {
            for b in &vs {
                if a == b {
                    continue;
                }
                let line = f.affine_line_through(a, b).unwrap();
                assert_eq!(line.points().len() as u32, f.q());
                assert!(line.contains(a) && line.contains(b));
                // brute-force point set: a + t (b - a)
                let mut pts: Vec<Vector> = f
                    .elements()
                    .map(|t| f.axpy(a, t, &f.sub_vectors(b, a)))
                    .collect();
                pts.sort();
                assert_eq!(line.points(), pts.as_slice());
                assert_eq!(line.base(), &pts[0]);
                let lead = line
                    .direction()
                    .entries()
                    .iter()
                    .find(|x| !x.is_zero())
                    .copied();
                assert_eq!(lead, Some(f.one()));
                for x in &pts {
                    for y in &pts {
                        if x != y {
                            assert_eq!(f.affine_line_through(x, y).unwrap(), line);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn coordinates_recover_combinations() {
    let f = Field::new(3, 2, None).unwrap();
    let space = VectorSpace::new(f.clone(), 3);
    let basis = vec![
        Vector::from_indices(&f, &[1, 0, 2]).unwrap(),
        Vector::from_indices(&f, &[0, 4, 1]).unwrap(),
    ];
    let mut inside = 0;
    for a in f.elements() {
        for b in f.elements() {
            let u = f.add_vectors(&f.scale(a, &basis[0]), &f.scale(b, &basis[1]));
            assert_eq!(f.coordinates(&basis, &u), Some(vec![a, b]));
            inside += 1;
        }
    }
    let outside = space
        .vectors()
        .filter(|u| f.coordinates(&basis, u).is_none())
        .count();
    assert_eq!(inside + outside, space.size().unwrap() as usize);
}
