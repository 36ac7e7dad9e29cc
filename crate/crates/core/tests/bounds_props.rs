use erdos_box::bounds::{
    check_params, comparison_table, deletion_alpha, grs_alpha, new_alpha, upper_alpha, Rounding,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;

fn mersenne(d: u32) -> BigInt {
    (BigInt::one() << d as usize) - 1
}

#[test]
fn new_beats_deletion_up_to_64() {
    for d in 2..=64 {
        assert!(
            new_alpha(d, 1).unwrap().alpha > deletion_alpha(d).unwrap(),
            "d = {d}"
        );
        assert!(new_alpha(d, 1).unwrap().alpha <= upper_alpha(d).unwrap());
    }
}

#[test]
fn new_dominates_grs_with_stated_equality() {
    let mut equal = Vec::new();
    for d in 2..=64u32 {
        let Some(g) = grs_alpha(d).unwrap() else {
            continue;
        };
        let m = mersenne(d);
        // ceil((2^d - 1)/d) from scratch
        let ceil = BigRational::from_integer(m.div_ceil(&BigInt::from(d)));
        let new = new_alpha(d, 1).unwrap().alpha;
        assert_eq!(new, ceil);
        assert!(new >= g.alpha, "d = {d}");
        if new == g.alpha {
            equal.push(d);
        }
    }
    assert_eq!(equal, [2, 4, 8, 16, 32, 64]);
}

#[test]
fn grs_absent_exactly_when_not_coprime() {
    for d in 2..=64u32 {
        let coprime = BigInt::from(d).gcd(&mersenne(d)).is_one();
        assert_eq!(grs_alpha(d).unwrap().is_some(), coprime, "d = {d}");
    }
    for base in [6u32, 12, 18, 20, 21] {
        for d in (base..=64).step_by(base as usize) {
            assert!(grs_alpha(d).unwrap().is_none(), "d = {d}");
        }
    }
}

#[test]
fn larger_r_never_helps() {
    for d in 2..=64u32 {
        let one = new_alpha(d, 1).unwrap();
        let many = new_alpha(d, 8).unwrap();
        assert_eq!(many.r, 1, "d = {d}");
        assert_eq!(many.alpha, one.alpha);
    }
}

#[test]
fn best_ratio_matches_brute_search() {
    for d in 2..=12u32 {
        for r_max in 1..=4u64 {
            let mut best = BigRational::from_integer(BigInt::from(0));
            for r in 1..=r_max {
                for s in 1..=(1u64 << d) * r {
                    let ratio = BigRational::new(s.into(), r.into());
                    if check_params(d, r, s) && ratio > best {
                        best = ratio;
                    }
                }
            }
            assert_eq!(
                new_alpha(d, r_max).unwrap().alpha,
                best,
                "d = {d}, r_max = {r_max}"
            );
        }
    }
}

#[test]
fn table_rows_render() {
    let rows = comparison_table(8, 12, 1).unwrap();
    assert_eq!(
        rows[0].cells(Rounding::Truncate),
        ["8", "31.87", "32.00", "32.00"].map(String::from)
    );
    assert_eq!(
        rows[4].cells(Rounding::Truncate),
        ["12", "341.25", "", "342.00"].map(String::from)
    );
    let d19 = comparison_table(19, 19, 1).unwrap();
    assert_eq!(d19[0].cells(Rounding::Truncate)[1], "27594.05");
    assert_eq!(d19[0].cells(Rounding::HalfUp)[1], "27594.05");
}
