//! Dense multilinear forms `T: V_1 x ... x V_d -> F_q`.
//!
//! Coefficients are stored row-major: the entry for the multi-index
//! `(i_1, ..., i_d)` is `T(e_{i_1}, ..., e_{i_d})` and `i_1` varies slowest.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use smallvec::SmallVec;

use crate::gf::{Field, GfError, Scalar, Vector};

/// Header tag of the text serialization.
pub const FORM_FORMAT_TAG: &str = "mlform/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("arity must be at least 2, got {0}")]
    Arity(usize),
    #[error("slot dimensions must be positive")]
    ZeroDimension,
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("expected {expected} arguments, got {got}")]
    ArgumentCount { expected: usize, got: usize },
    #[error("slot {slot} has dimension {expected}, argument has {got}")]
    SlotDimension {
        slot: usize,
        expected: usize,
        got: usize,
    },
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("slot {0}: the pair is collinear")]
    CollinearPair(usize),
    #[error("slot {slot}: vector {vector} is outside the spanned subspace")]
    OutsideSpan { slot: usize, vector: String },
    #[error("forms live over different fields")]
    FieldMismatch,
    #[error("malformed serialized form: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A basis of a subspace `U` of an ambient space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceBasis {
    vectors: Vec<Vector>,
}

impl SubspaceBasis {
    pub fn new(field: &Field, vectors: Vec<Vector>) -> Result<SubspaceBasis, TensorError> {
        if vectors.is_empty() {
            return Err(TensorError::ZeroDimension);
        }
        let dim = vectors[0].dim();
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(GfError::DimensionMismatch(dim, v.dim()).into());
        }
        if field.rank(&vectors) != vectors.len() {
            return Err(TensorError::DependentBasis);
        }
        Ok(SubspaceBasis { vectors })
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors[0].dim()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct MultilinearForm {
    field: Field,
    dims: Vec<usize>,
    coeffs: Vec<Scalar>,
}

impl fmt::Debug for MultilinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultilinearForm({self})")
    }
}

fn check_dims(dims: &[usize]) -> Result<usize, TensorError> {
    if dims.len() < 2 {
        return Err(TensorError::Arity(dims.len()));
    }
    if dims.contains(&0) {
        return Err(TensorError::ZeroDimension);
    }
    Ok(dims.iter().product())
}

impl MultilinearForm {
    pub fn new(field: Field, dims: Vec<usize>, coeffs: Vec<Scalar>) -> Result<Self, TensorError> {
        let len = check_dims(&dims)?;
        if coeffs.len() != len {
            return Err(TensorError::CoefficientCount {
                expected: len,
                got: coeffs.len(),
            });
        }
        if let Some(&bad) = coeffs.iter().find(|&&c| !field.contains(c)) {
            return Err(GfError::NotAnElement {
                value: bad.index(),
                q: field.q(),
            }
            .into());
        }
        Ok(MultilinearForm {
            field,
            dims,
            coeffs,
        })
    }

    pub fn zero(field: Field, dims: Vec<usize>) -> Result<Self, TensorError> {
        let len = check_dims(&dims)?;
        Ok(MultilinearForm {
            field,
            dims,
            coeffs: vec![Scalar::ZERO; len],
        })
    }

    /// Every coefficient drawn independently and uniformly from the field.
    pub fn sample_uniform<R: Rng + ?Sized>(
        field: Field,
        dims: Vec<usize>,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let len = check_dims(&dims)?;
        let q = field.q();
        let coeffs = (0..len).map(|_| Scalar(rng.gen_range(0..q))).collect();
        Ok(MultilinearForm {
            field,
            dims,
            coeffs,
        })
    }

    /// Number `index` of the `q^(m_1 ... m_d)` forms with these dims, the
    /// last coefficient being the least significant base-q digit.
    pub fn from_index(field: Field, dims: Vec<usize>, mut index: u64) -> Result<Self, TensorError> {
        let len = check_dims(&dims)?;
        let q = field.q() as u64;
        let mut coeffs = vec![Scalar::ZERO; len];
        for c in coeffs.iter_mut().rev() {
            *c = Scalar((index % q) as u32);
            index /= q;
        }
        Ok(MultilinearForm {
            field,
            dims,
            coeffs,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    fn check_args(&self, args: &[&Vector], skip: Option<usize>) -> Result<(), TensorError> {
        if args.len() != self.arity() {
            return Err(TensorError::ArgumentCount {
                expected: self.arity(),
                got: args.len(),
            });
        }
        for (slot, (v, &m)) in args.iter().zip(&self.dims).enumerate() {
            if Some(slot) == skip {
                continue;
            }
            if v.dim() != m {
                return Err(TensorError::SlotDimension {
                    slot,
                    expected: m,
                    got: v.dim(),
                });
            }
            if let Some(&bad) = v.entries().iter().find(|&&x| !self.field.contains(x)) {
                return Err(GfError::NotAnElement {
                    value: bad.index(),
                    q: self.field.q(),
                }
                .into());
            }
        }
        Ok(())
    }

    /// `T(v_1, ..., v_d)`.
    pub fn evaluate(&self, args: &[&Vector]) -> Result<Scalar, TensorError> {
        self.check_args(args, None)?;
        Ok(self.eval_unchecked(args))
    }

    /// Contracts from the last slot inwards.
    pub(crate) fn eval_unchecked(&self, args: &[&Vector]) -> Scalar {
        let f = &self.field;
        let mut buf: Vec<Scalar> = self.coeffs.clone();
        let mut len = buf.len();
        for (v, &m) in args.iter().zip(&self.dims).rev() {
            let v = v.entries();
            len /= m;
            for i in 0..len {
                let x = f.dot(&buf[i * m..(i + 1) * m], v);
                buf[i] = x;
            }
        }
        buf[0]
    }

    /// The linear functional `x -> T(args with x in slot `free`)`, returned as
    /// its coefficient vector. The argument in slot `free` is ignored.
    pub fn functional(&self, free: usize, args: &[&Vector]) -> Result<Vec<Scalar>, TensorError> {
        if free >= self.arity() {
            return Err(TensorError::ArgumentCount {
                expected: self.arity(),
                got: free + 1,
            });
        }
        self.check_args(args, Some(free))?;
        Ok(self.functional_unchecked(free, args))
    }

    pub(crate) fn functional_unchecked(&self, free: usize, args: &[&Vector]) -> Vec<Scalar> {
        let mut out = vec![Scalar::ZERO; self.dims[free]];
        self.functional_into(free, args, &mut out);
        out
    }

    /// Writes the functional into `out`, which must have length `dims[free]`.
    pub(crate) fn functional_into(&self, free: usize, args: &[&Vector], out: &mut [Scalar]) {
        let f = &self.field;
        out.fill(Scalar::ZERO);
        let d = self.arity();
        let mut idx: SmallVec<[usize; 8]> = SmallVec::from_elem(0, d);
        for &c in &self.coeffs {
            if !c.is_zero() {
                let mut w = c;
                for slot in 0..d {
                    if slot != free {
                        w = f.mul(w, args[slot].entries()[idx[slot]]);
                        if w.is_zero() {
                            break;
                        }
                    }
                }
                out[idx[free]] = f.add(out[idx[free]], w);
            }
            // advance multi-index, last slot fastest
            for slot in (0..d).rev() {
                idx[slot] += 1;
                if idx[slot] < self.dims[slot] {
                    break;
                }
                idx[slot] = 0;
            }
        }
    }

    /// The restriction of `T` to `U_1 x ... x U_d`, in the coordinates given
    /// by the bases: coefficient `(i_1..i_d)` is `T(u^1_{i_1}, ..., u^d_{i_d})`.
    pub fn restrict(&self, bases: &[SubspaceBasis]) -> Result<MultilinearForm, TensorError> {
        if bases.len() != self.arity() {
            return Err(TensorError::ArgumentCount {
                expected: self.arity(),
                got: bases.len(),
            });
        }
        for (slot, (b, &m)) in bases.iter().zip(&self.dims).enumerate() {
            if b.ambient_dim() != m {
                return Err(TensorError::SlotDimension {
                    slot,
                    expected: m,
                    got: b.ambient_dim(),
                });
            }
        }
        let dims: Vec<usize> = bases.iter().map(SubspaceBasis::dim).collect();
        let total: usize = dims.iter().product();
        let d = dims.len();
        let mut idx = vec![0usize; d];
        let mut coeffs = Vec::with_capacity(total);
        for _ in 0..total {
            let args: Vec<&Vector> = (0..d).map(|j| &bases[j].vectors()[idx[j]]).collect();
            coeffs.push(self.evaluate(&args)?);
            for slot in (0..d).rev() {
                idx[slot] += 1;
                if idx[slot] < dims[slot] {
                    break;
                }
                idx[slot] = 0;
            }
        }
        MultilinearForm::new(self.field.clone(), dims, coeffs)
    }

    /// Single-line text form:
    /// `mlform/1 p=<p> k=<k> modulus=<c0,..,ck> d=<d> dims=<m1,..> coeffs=<x,..>`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(s: &str) -> Result<MultilinearForm, TensorError> {
        s.parse()
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for MultilinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{FORM_FORMAT_TAG} p={} k={} modulus={} d={} dims={} coeffs={}",
            self.field.p(),
            self.field.k(),
            join(self.field.modulus()),
            self.arity(),
            join(&self.dims),
            join(&self.coeffs)
        )
    }
}

impl FromStr for MultilinearForm {
    type Err = TensorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let perr = |m: &str| TensorError::Parse(m.to_string());
        let mut tokens = s.split_whitespace();
        if tokens.next() != Some(FORM_FORMAT_TAG) {
            return Err(perr("missing format tag"));
        }
        let mut fields = std::collections::BTreeMap::new();
        for tok in tokens {
            let (key, value) = tok.split_once('=').ok_or_else(|| perr(tok))?;
            if fields.insert(key, value).is_some() {
                return Err(perr(&format!("duplicate key {key}")));
            }
        }
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| perr(&format!("missing {key}")))
        };
        let num = |key: &str| -> Result<u32, TensorError> {
            get(key)?.parse().map_err(|_| perr(&format!("bad {key}")))
        };
        let list = |key: &str| -> Result<Vec<u32>, TensorError> {
            let v = get(key)?;
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',')
                .map(|x| x.parse().map_err(|_| perr(&format!("bad {key}"))))
                .collect()
        };
        let field = Field::new(num("p")?, num("k")?, Some(&list("modulus")?))?;
        let d = num("d")? as usize;
        let dims: Vec<usize> = list("dims")?.into_iter().map(|x| x as usize).collect();
        if dims.len() != d {
            return Err(perr("d disagrees with dims"));
        }
        let coeffs = list("coeffs")?
            .into_iter()
            .map(|x| field.element(x))
            .collect::<Result<Vec<_>, _>>()?;
        MultilinearForm::new(field, dims, coeffs)
    }
}

/// The unique form on `U_1 x ... x U_d`, `U_j = span(v_j^0, v_j^1)`, that is
/// 1 at every corner `(v_1^{e_1}, ..., v_d^{e_d})`.
#[derive(Debug, Clone)]
pub struct CornerInterpolant {
    form: MultilinearForm,
    bases: Vec<SubspaceBasis>,
}

impl CornerInterpolant {
    /// The form in corner coordinates.
    pub fn form(&self) -> &MultilinearForm {
        &self.form
    }

    pub fn bases(&self) -> &[SubspaceBasis] {
        &self.bases
    }

    /// Evaluates at ambient vectors, each of which must lie in its `U_j`.
    pub fn evaluate_ambient(&self, args: &[&Vector]) -> Result<Scalar, TensorError> {
        let field = self.form.field();
        if args.len() != self.bases.len() {
            return Err(TensorError::ArgumentCount {
                expected: self.bases.len(),
                got: args.len(),
            });
        }
        let coords = args
            .iter()
            .zip(&self.bases)
            .enumerate()
            .map(|(slot, (u, b))| {
                if u.dim() != b.ambient_dim() {
                    return Err(TensorError::SlotDimension {
                        slot,
                        expected: b.ambient_dim(),
                        got: u.dim(),
                    });
                }
                field
                    .coordinates(b.vectors(), u)
                    .map(Vector::new)
                    .ok_or_else(|| TensorError::OutsideSpan {
                        slot,
                        vector: u.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&Vector> = coords.iter().collect();
        self.form.evaluate(&refs)
    }
}

/// Builds the corner interpolant for `d` pairs of independent vectors.
pub fn corner_interpolant(
    field: &Field,
    pairs: &[(Vector, Vector)],
) -> Result<CornerInterpolant, TensorError> {
    let d = pairs.len();
    if d < 2 {
        return Err(TensorError::Arity(d));
    }
    let bases = pairs
        .iter()
        .enumerate()
        .map(|(slot, (a, b))| {
            if !field.linearly_independent(a, b)? {
                return Err(TensorError::CollinearPair(slot));
            }
            SubspaceBasis::new(field, vec![a.clone(), b.clone()])
        })
        .collect::<Result<Vec<_>, _>>()?;
    // The corners are the tensor products of basis vectors, so in corner
    // coordinates every coefficient is 1.
    let form = MultilinearForm::new(field.clone(), vec![2; d], vec![Scalar::ONE; 1 << d])?;
    Ok(CornerInterpolant { form, bases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::VectorSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f3() -> Field {
        Field::prime(3).unwrap()
    }

    fn v(field: &Field, e: &[u32]) -> Vector {
        Vector::from_indices(field, e).unwrap()
    }

    fn identity_form(field: &Field) -> MultilinearForm {
        MultilinearForm::new(
            field.clone(),
            vec![2, 2],
            vec![Scalar(1), Scalar(0), Scalar(0), Scalar(1)],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let f = f3();
        let t = identity_form(&f);
        assert_eq!(
            t.evaluate(&[&v(&f, &[1, 0]), &v(&f, &[0, 1])]).unwrap(),
            Scalar(0)
        );
        assert_eq!(
            t.evaluate(&[&v(&f, &[1, 1]), &v(&f, &[1, 1])]).unwrap(),
            Scalar(2)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = MultilinearForm::sample_uniform(f.clone(), vec![2, 3, 2], &mut rng).unwrap();
            let x = v(&f, &[2, 1, 1]);
            let y = v(&f, &[1, 2]);
            assert_eq!(t.evaluate(&[&Vector::zero(2), &x, &y]).unwrap(), Scalar(0));
            assert_eq!(t.evaluate(&[&y, &Vector::zero(3), &y]).unwrap(), Scalar(0));
        }
    }

    #[test]
    fn evaluate_errors() {
        let f = f3();
        let t = identity_form(&f);
        assert!(matches!(
            t.evaluate(&[&v(&f, &[1, 0])]),
            Err(TensorError::ArgumentCount { .. })
        ));
        assert!(matches!(
            t.evaluate(&[&v(&f, &[1, 0]), &v(&f, &[1, 0, 0])]),
            Err(TensorError::SlotDimension { slot: 1, .. })
        ));
        assert!(matches!(
            MultilinearForm::new(f.clone(), vec![2], vec![Scalar(0); 2]),
            Err(TensorError::Arity(1))
        ));
        assert!(matches!(
            MultilinearForm::new(f.clone(), vec![2, 2], vec![Scalar(0); 3]),
            Err(TensorError::CoefficientCount { .. })
        ));
    }

    #[test]
    fn functional_matches_evaluate() {
        let f = Field::new(2, 2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = MultilinearForm::sample_uniform(f.clone(), vec![2, 2, 2], &mut rng).unwrap();
        let space = VectorSpace::new(f.clone(), 2);
        let a = space.vector(7);
        let b = space.vector(13);
        let l = t.functional(1, &[&a, &Vector::zero(2), &b]).unwrap();
        for x in space.vectors() {
            assert_eq!(f.dot(&l, x.entries()), t.evaluate(&[&a, &x, &b]).unwrap());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = Field::prime(5).unwrap();
        let a = MultilinearForm::sample_uniform(
            f.clone(),
            vec![2, 2, 2],
            &mut ChaCha8Rng::seed_from_u64(42),
        )
        .unwrap();
        let b =
            MultilinearForm::sample_uniform(f, vec![2, 2, 2], &mut ChaCha8Rng::seed_from_u64(42))
                .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn restrict_examples() {
        let f = f3();
        let t = identity_form(&f);
        let space = VectorSpace::new(f.clone(), 2);
        let std = SubspaceBasis::new(&f, space.standard_basis()).unwrap();
        assert_eq!(
            t.restrict(&[std.clone(), std]).unwrap().coeffs(),
            t.coeffs()
        );

        let diag = SubspaceBasis::new(&f, vec![v(&f, &[1, 1])]).unwrap();
        let r = t.restrict(&[diag.clone(), diag]).unwrap();
        assert_eq!(r.dims(), &[1, 1]);
        assert_eq!(r.coeffs(), &[Scalar(2)]);

        assert_eq!(
            SubspaceBasis::new(&f, vec![v(&f, &[1, 1]), v(&f, &[2, 2])]),
            Err(TensorError::DependentBasis)
        );
    }

    #[test]
    fn text_round_trip() {
        let f = Field::new(3, 2, None).unwrap();
        let t = MultilinearForm::sample_uniform(f, vec![2, 3], &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let text = t.to_text();
        assert!(text.starts_with("mlform/1 p=3 k=2 modulus=1,0,1 d=2 dims=2,3 coeffs="));
        assert_eq!(MultilinearForm::from_text(&text).unwrap(), t);
    }

    #[test]
    fn text_exact_bytes() {
        let t = identity_form(&f3());
        assert_eq!(
            t.to_text(),
            "mlform/1 p=3 k=1 modulus=0,1 d=2 dims=2,2 coeffs=1,0,0,1"
        );
    }

    #[test]
    fn text_rejects_garbage() {
        for bad in [
            "",
            "mlform/2 p=3 k=1 modulus=0,1 d=2 dims=2,2 coeffs=1,0,0,1",
            "mlform/1 p=3 k=1 modulus=0,1 d=3 dims=2,2 coeffs=1,0,0,1",
            "mlform/1 p=3 k=1 modulus=0,1 d=2 dims=2,2 coeffs=1,0,0",
            "mlform/1 p=3 k=1 modulus=0,1 d=2 dims=2,2 coeffs=1,0,0,3",
            "mlform/1 p=4 k=1 modulus=0,1 d=2 dims=2,2 coeffs=1,0,0,1",
            "mlform/1 p=3 k=1 d=2 dims=2,2 coeffs=1,0,0,1",
        ] {
            assert!(MultilinearForm::from_text(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn corner_interpolant_on_line_grid() {
        let f = f3();
        let pairs = vec![
            (v(&f, &[1, 0]), v(&f, &[1, 2])),
            (v(&f, &[0, 1]), v(&f, &[2, 2])),
        ];
        let r = corner_interpolant(&f, &pairs).unwrap();
        assert!(r.form().coeffs().iter().all(|&c| c == Scalar::ONE));
        let l1 = f.affine_line_through(&pairs[0].0, &pairs[0].1).unwrap();
        let l2 = f.affine_line_through(&pairs[1].0, &pairs[1].1).unwrap();
        let mut count = 0;
        for a in l1.points() {
            for b in l2.points() {
                assert_eq!(r.evaluate_ambient(&[a, b]).unwrap(), Scalar::ONE);
                count += 1;
            }
        }
        assert_eq!(count, 9);
    }

    #[test]
    fn corner_interpolant_rejects_collinear() {
        let f = f3();
        let pairs = vec![
            (v(&f, &[1, 0]), v(&f, &[1, 2])),
            (v(&f, &[1, 1]), v(&f, &[2, 2])),
        ];
        assert_eq!(
            corner_interpolant(&f, &pairs).unwrap_err(),
            TensorError::CollinearPair(1)
        );
    }
}
