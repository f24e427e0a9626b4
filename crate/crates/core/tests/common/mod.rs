//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use cuntz::monoid_kernel::{ExtNat, Q};
use cuntz::multiplicity::{ClosedSet, Interval, MultiplicityFunction, Point, SpaceModel};
use cuntz::order_zero_lab::{random_commutative_diag, random_entry, OrderZeroMap};
use nalgebra::DMatrix;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Values are modelled as Option<u64> with None = ∞, so the oracles never touch
/// the library's ExtNat arithmetic.
pub type Ext = Option<u64>;

pub fn to_ext(k: ExtNat) -> Ext {
    k.finite()
}

pub fn from_ext(k: Ext) -> ExtNat {
    k.map_or(ExtNat::Inf, ExtNat::Fin)
}

pub fn ext_le(a: Ext, b: Ext) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

pub fn ext_add(a: Ext, b: Ext) -> Ext {
    Some(a? + b?)
}

pub fn ext_mul(a: Ext, b: Ext) -> Ext {
    match (a, b) {
        (Some(0), _) | (_, Some(0)) => Some(0),
        (Some(x), Some(y)) => Some(x * y),
        _ => None,
    }
}

/// A value from {0,1,2,∞}.
pub fn small_ext(rng: &mut impl Rng) -> Ext {
    [Some(0), Some(1), Some(2), None][rng.gen_range(0..4)]
}

pub fn discrete_values(rng: &mut impl Rng, k: usize) -> Vec<Ext> {
    (0..k).map(|_| small_ext(rng)).collect()
}

pub fn discrete_mf(space: &SpaceModel, vals: &[Ext]) -> MultiplicityFunction {
    let v: Vec<ExtNat> = vals.iter().map(|&x| from_ext(x)).collect();
    MultiplicityFunction::from_values(space.clone(), &v).unwrap()
}

/// Raw data of a function on [0,1]: atoms and closed intervals on the 1/8 grid.
#[derive(Debug, Clone)]
pub struct RawInterval {
    pub atoms: Vec<(Q, Ext)>,
    pub intervals: Vec<(Q, Q)>,
}

impl RawInterval {
    pub fn random(rng: &mut impl Rng) -> RawInterval {
        let atoms = (0..rng.gen_range(0..4))
            .map(|_| (Q::new(rng.gen_range(0..=8), 8), [Some(1), Some(2), None][rng.gen_range(0..3)]))
            .collect();
        let intervals = (0..rng.gen_range(0..3))
            .map(|_| {
                let a = rng.gen_range(0..=8);
                let b = rng.gen_range(a..=8.min(a + 4));
                (Q::new(a, 8), Q::new(b, 8))
            })
            .collect();
        RawInterval { atoms, intervals }
    }

    pub fn build(&self) -> MultiplicityFunction {
        MultiplicityFunction::new(
            SpaceModel::Interval,
            self.atoms.iter().map(|&(q, k)| (Point::At(q), from_ext(k))).collect(),
            self.intervals.iter().map(|&(a, b)| Interval::new(a, b).unwrap()).collect(),
        )
        .unwrap()
    }

    /// Value at x computed from the raw data.
    pub fn value(&self, x: Q) -> Ext {
        if self.intervals.iter().any(|&(a, b)| a <= x && x <= b) {
            return None;
        }
        self.atoms
            .iter()
            .filter(|(q, _)| *q == x)
            .fold(Some(0), |acc, &(_, k)| ext_add(acc, k))
    }

    pub fn sum(&self, other: &RawInterval) -> RawInterval {
        RawInterval {
            atoms: [self.atoms.clone(), other.atoms.clone()].concat(),
            intervals: [self.intervals.clone(), other.intervals.clone()].concat(),
        }
    }
}

/// The 1/16 grid: every generated interval of positive length meets an odd
/// multiple of 1/16, which no atom occupies.
pub fn grid() -> Vec<Q> {
    (0..=16).map(|k| Q::new(k, 16)).collect()
}

pub fn sampling_leq(nu: &RawInterval, mu: &RawInterval) -> bool {
    grid().into_iter().all(|x| ext_le(nu.value(x), mu.value(x)))
}

/// A closed subset of [0,1] as a union of grid intervals, with a membership oracle.
pub fn random_closed_intervals(rng: &mut impl Rng) -> Vec<(Q, Q)> {
    (0..rng.gen_range(0..3))
        .map(|_| {
            let a = rng.gen_range(0..=8);
            let b = rng.gen_range(a..=8);
            (Q::new(a, 8), Q::new(b, 8))
        })
        .collect()
}

pub fn closed_set(ivs: &[(Q, Q)]) -> ClosedSet {
    ClosedSet::intervals(ivs.iter().map(|&(a, b)| Interval::new(a, b).unwrap()).collect())
}

pub fn in_closed(ivs: &[(Q, Q)], x: Q) -> bool {
    ivs.iter().any(|&(a, b)| a <= x && x <= b)
}

/// A pair of commutative-domain maps; about half are built so that φ ≲ ψ.
pub fn random_oz_pair(rng: &mut impl Rng, max_points: usize, max_dim: usize) -> (OrderZeroMap, OrderZeroMap) {
    let k = rng.gen_range(1..=max_points);
    let phi = random_commutative_diag(rng, k, max_dim);
    let psi = if rng.gen_bool(0.5) {
        let mut blocks = diag_blocks(&phi);
        let mut room = max_dim - blocks.iter().map(Vec::len).sum::<usize>();
        for b in &mut blocks {
            for x in b.iter_mut() {
                if !x.is_zero() || rng.gen_bool(0.3) {
                    *x = nonzero_entry(rng);
                }
            }
            while room > 0 && rng.gen_bool(0.3) {
                b.push(random_entry(rng));
                room -= 1;
            }
        }
        OrderZeroMap::diagonal(blocks).unwrap()
    } else {
        random_commutative_diag(rng, k, max_dim)
    };
    (phi, psi)
}

pub fn nonzero_entry(rng: &mut impl Rng) -> Q {
    let d = rng.gen_range(1..=8i64);
    Q::new(rng.gen_range(1..=d), d)
}

pub fn diag_blocks(phi: &OrderZeroMap) -> Vec<Vec<Q>> {
    match phi.blocks() {
        cuntz::order_zero_lab::Blocks::Diagonal(d) => d.clone(),
        _ => panic!("diagonal map expected"),
    }
}

/// Rank of φ at each point, counted from the raw diagonal.
pub fn rank_profile(phi: &OrderZeroMap) -> Vec<usize> {
    diag_blocks(phi)
        .iter()
        .map(|b| b.iter().filter(|x| !x.is_zero()).count())
        .collect()
}

fn random_orthogonal(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

/// 0 ≤ a ≤ b with ‖a‖ ≤ 1 and σ(b − a) ⊆ [0.05, 1].
pub fn handelman_pair(rng: &mut impl Rng, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let u = random_orthogonal(rng, d);
    let la = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
        if rng.gen_bool(0.25) {
            0.0
        } else {
            rng.gen_range(0.0..1.0)
        }
    }));
    let a = &u * la * u.transpose();
    let v = random_orthogonal(rng, d);
    let lc = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| rng.gen_range(0.05..=1.0)));
    let c = &v * lc * v.transpose();
    let a = 0.5 * (&a + a.transpose());
    let b = &a + 0.5 * (&c + c.transpose());
    (a, b)
}

/// Shuffled labels for a discrete space of k points.
pub fn shuffled_space(rng: &mut impl Rng, k: usize) -> SpaceModel {
    let mut labels: Vec<String> = (0..k).map(|i| format!("p{}", rng.gen_range(0..1000) * 10 + i)).collect();
    labels.shuffle(rng);
    SpaceModel::discrete(&labels).unwrap()
}
