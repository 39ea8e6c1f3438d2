//! Independent reference computations used to validate `elastic-te`:
//! a fixed-point Bessel series and the published parameter sets.

use elastic_te::assembly::{assemble_block_system, BlockSystem, DensityPair, ElasticParams};
use elastic_te::mesh::{make_mesh, refine_times, Domain};
use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_traits::{ToPrimitive, Zero};

/// μ = 1/16, λ = 1/4, ρ₀ = 1, ρ₁ = 4.
pub fn params1() -> (ElasticParams, DensityPair) {
    (ElasticParams::new(1.0 / 16.0, 0.25).unwrap(), DensityPair::new(1.0, 4.0).unwrap())
}

/// μ = λ = 1/4, ρ₀ = 1/20, ρ₁ = 3.
pub fn params2() -> (ElasticParams, DensityPair) {
    (ElasticParams::new(0.25, 0.25).unwrap(), DensityPair::new(0.05, 3.0).unwrap())
}

pub fn system(domain: Domain, n: usize, refinements: usize) -> BlockSystem {
    let (p, d) = params1();
    assemble_block_system(&refine_times(&make_mesh(domain, n).unwrap(), refinements), p, d).unwrap()
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Fixed-point binary fraction bits (about 72 decimal digits).
const FRAC: u32 = 240;

#[derive(Clone)]
struct Fx {
    re: BigInt,
    im: BigInt,
}

fn fixed(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 { (bits & ((1 << 52) - 1)) << 1 } else { (bits & ((1 << 52) - 1)) | (1 << 52) };
    let shift = exp - 1075 + FRAC as i64;
    let m = BigInt::from(mant);
    let v = if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn to_f64(v: &BigInt) -> f64 {
    // Keep 64 significant bits before the final rounding.
    let bits = v.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (v >> drop as usize).to_f64().unwrap();
    top * 2f64.powi((drop - FRAC as i64) as i32)
}

fn mul(a: &Fx, b: &Fx) -> Fx {
    Fx {
        re: (&a.re * &b.re - &a.im * &b.im) >> FRAC as usize,
        im: (&a.re * &b.im + &a.im * &b.re) >> FRAC as usize,
    }
}

fn div_int(a: &Fx, k: u64) -> Fx {
    Fx {
        re: &a.re / k,
        im: &a.im / k,
    }
}

/// `J_order(z)` summed in 240-bit fixed point. Independent of the library's
/// double-double implementation.
pub fn bessel_oracle(order: u32, z: C64) -> C64 {
    let half = Fx {
        re: fixed(z.re / 2.0),
        im: fixed(z.im / 2.0),
    };
    let sq = mul(&half, &half);
    let w = Fx {
        re: -sq.re,
        im: -sq.im,
    };
    let mut term = Fx {
        re: BigInt::from(1) << FRAC as usize,
        im: BigInt::zero(),
    };
    for k in 1..=order as u64 {
        term = div_int(&mul(&term, &half), k);
    }
    let mut sum = term.clone();
    let eps = BigInt::from(1) << 16usize;
    let mut m = 0u64;
    loop {
        m += 1;
        term = div_int(&mul(&term, &w), m * (m + order as u64));
        sum.re += &term.re;
        sum.im += &term.im;
        if (m as f64) > z.norm() && term.re.magnitude() < eps.magnitude() && term.im.magnitude() < eps.magnitude() {
            break;
        }
    }
    C64::new(to_f64(&sum.re), to_f64(&sum.im))
}
