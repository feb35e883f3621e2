use oco_queue::instances::StockInstance;
use oco_queue::{linalg, OmegaStream};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIPLES: usize = 10_000;

// f(y) >= f(x) + <df(x), y - x> and the same for every g_k at a shared omega.
#[test]
fn stock_oracles_satisfy_subgradient_inequality() {
    for inst in StockInstance::ALL {
        let p = inst.build();
        let rounds = p.loss().rounds().unwrap_or(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut worst = f64::INFINITY;
        for _ in 0..TRIPLES {
            let x = p.set().sample(&mut rng);
            let y = p.set().sample(&mut rng);
            let t = rng.random_range(1..=rounds);
            let omega = p.constraints().sample(&mut rng);
            let d = linalg::sub(&y, &x);
            let fx = p.loss().evaluate(t, &x, &omega);
            let fy = p.loss().evaluate(t, &y, &omega);
            let scale = 1.0 + fx.value.abs() + fy.value.abs();
            worst = worst.min((fy.value - fx.value - linalg::dot(&fx.subgradient, &d)) / scale);
            let gx = p.constraints().evaluate(&x, &omega);
            let gy = p.constraints().evaluate(&y, &omega);
            for k in 0..p.constraint_count() {
                let scale = 1.0 + gx.values[k].abs() + gy.values[k].abs();
                let slack = gy.values[k] - gx.values[k] - linalg::dot(&gx.subgradients[k], &d);
                worst = worst.min(slack / scale);
            }
        }
        assert!(worst >= -1e-12, "{inst}: worst normalized slack {worst}");
    }
}

#[test]
fn realizations_depend_only_on_seed_and_round() {
    let p = StockInstance::Linear1d.build();
    let a = OmegaStream::new(42);
    let b = OmegaStream::new(42);
    let forward: Vec<_> = (1..=TRIPLES).map(|t| p.constraints().sample(&mut a.round_rng(t))).collect();
    for t in (1..=TRIPLES).rev() {
        assert_eq!(p.constraints().sample(&mut b.round_rng(t)), forward[t - 1], "round {t}");
    }
    let other = OmegaStream::new(43);
    let differ = (1..=100).filter(|&t| p.constraints().sample(&mut other.round_rng(t)) != forward[t - 1]).count();
    assert_eq!(differ, 100);
}

#[test]
fn stock_bounds_dominate_observed_feedback() {
    for inst in StockInstance::ALL {
        let p = inst.build();
        let b = *p.bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rounds = p.loss().rounds().unwrap_or(1000);
        for _ in 0..2000 {
            let x = p.set().sample(&mut rng);
            let omega = p.constraints().sample(&mut rng);
            let f = p.loss().evaluate(rng.random_range(1..=rounds), &x, &omega);
            assert!(linalg::norm(&f.subgradient) <= b.d1 * (1.0 + 1e-9), "{inst} D1");
            let g = p.constraints().evaluate(&x, &omega);
            for k in 0..p.constraint_count() {
                assert!(g.values[k].abs() <= b.g * (1.0 + 1e-9), "{inst} G");
                assert!(linalg::norm(&g.subgradients[k]) <= b.d2 * (1.0 + 1e-9), "{inst} D2");
            }
        }
        assert!(p.set().diameter() <= b.r * (1.0 + 1e-12), "{inst} R");
    }
}
