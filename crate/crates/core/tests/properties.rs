use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dcfsim::frame::{Direction, Frame, FrameType, MacHeader, NodeId, Position, TxInfo};
use dcfsim::phy::{classify, PhyParams, ReceptionClass, WirelessPhy};
use dcfsim::radio::{self, crossover_dist, friis_pr, get_dist, two_ray_pr, FadingModel, RadioParams};
use dcfsim::sim::{Scheduler, SimRng};

#[test]
fn million_random_events_dispatch_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut s: Scheduler<u32> = Scheduler::new();
    let mut times: Vec<f64> = (0..1_000_000).map(|_| rng.gen_range(0.0..100.0)).collect();
    for (i, &t) in times.iter().enumerate() {
        s.schedule(t, i as u32).unwrap();
    }
    let mut got = Vec::with_capacity(times.len());
    let n = s
        .run_until(100.0, |_, ev| {
            got.push(ev.time);
            Ok(())
        })
        .unwrap();
    assert_eq!(n, 1_000_000);
    times.sort_by(f64::total_cmp);
    assert_eq!(got, times);
}

proptest! {
    #[test]
    fn dispatch_is_time_then_uid_ordered(delays in prop::collection::vec(0u8..20, 1..300)) {
        let mut s: Scheduler<usize> = Scheduler::new();
        for (i, &d) in delays.iter().enumerate() {
            s.schedule(d as f64 * 1e-3, i).unwrap();
        }
        let mut seen: Vec<(f64, u64)> = Vec::new();
        s.run_until(1.0, |_, ev| { seen.push((ev.time, ev.uid.0)); Ok(()) }).unwrap();
        prop_assert_eq!(seen.len(), delays.len());
        for w in seen.windows(2) {
            prop_assert!(w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1));
        }
    }

    #[test]
    fn cancelled_events_never_fire(n in 1usize..200, mask in prop::collection::vec(any::<bool>(), 200)) {
        let mut s: Scheduler<usize> = Scheduler::new();
        let ids: Vec<_> = (0..n).map(|i| s.schedule((i % 7) as f64, i).unwrap()).collect();
        let mut cancelled = std::collections::HashSet::new();
        for (i, id) in ids.iter().enumerate() {
            if mask[i] {
                prop_assert!(s.cancel(*id));
                cancelled.insert(i);
            }
        }
        let mut fired = Vec::new();
        s.run_until(10.0, |_, ev| { fired.push(ev.payload); Ok(()) }).unwrap();
        prop_assert_eq!(fired.len(), n - cancelled.len());
        prop_assert!(fired.iter().all(|i| !cancelled.contains(i)));
        let mut dedup = fired.clone();
        dedup.sort();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), fired.len());
    }

    #[test]
    fn path_loss_strictly_decreasing(d in 1.0f64..2000.0, k in 1.001f64..3.0) {
        let p = RadioParams::default();
        prop_assert!(friis_pr(&p, d * k).unwrap() < friis_pr(&p, d).unwrap());
        prop_assert!(two_ray_pr(&p, d * k).unwrap() < two_ray_pr(&p, d).unwrap());
    }

    #[test]
    fn get_dist_inverts_two_ray(d in 0.5f64..5000.0) {
        let p = RadioParams::default();
        let back = get_dist(two_ray_pr(&p, d).unwrap(), &p).unwrap();
        prop_assert!((back - d).abs() / d < 1e-6, "{} -> {}", d, back);
    }

    #[test]
    fn classification_is_a_partition(pr in 1e-13f64..1e-7) {
        let phy = PhyParams::default();
        let c = classify(pr, &phy);
        let expect = if pr < phy.cs_thresh {
            ReceptionClass::NotSensed
        } else if pr < phy.rx_thresh {
            ReceptionClass::SensedError
        } else {
            ReceptionClass::Decodable
        };
        prop_assert_eq!(c, expect);
    }
}

#[test]
fn two_ray_continuous_at_crossover_for_various_heights() {
    for h in [0.5, 1.0, 1.5, 3.0, 10.0] {
        let p = RadioParams {
            ht: h,
            hr: h,
            ..RadioParams::default()
        };
        let dc = crossover_dist(h, h, p.lambda).unwrap();
        let four = p.pt * p.gt * p.gr * h.powi(4) / (dc.powi(4) * p.loss);
        let gap = (four - friis_pr(&p, dc).unwrap()).abs() / four;
        assert!(gap < 1e-9, "h={h} gap={gap}");
    }
}

#[test]
fn rayleigh_cdf_matches_exponential_law() {
    let mut rng = SimRng::new(11);
    let n = 100_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| radio::apply_fading(FadingModel::Rayleigh, 1.0, &mut rng).unwrap())
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() < 6.0 / (n as f64).sqrt(), "mean {mean}");
    for k in [0.5, 1.0, 2.0] {
        let emp = draws.iter().filter(|&&x| x < k).count() as f64 / n as f64;
        let want = 1.0 - (-k).exp();
        assert!((emp - want).abs() < 0.01, "k={k}: {emp} vs {want}");
    }
}

fn frame_from(x: f64) -> Frame {
    let mut f = Frame {
        uid: 1,
        direction: Direction::Down,
        size: 100,
        error: false,
        header: MacHeader {
            frame_type: FrameType::Data,
            duration_us: 0,
            src: NodeId(0),
            dst: NodeId(1),
            retry: false,
            seq: 0,
        },
        txinfo: TxInfo::default(),
        airtime: 1e-3,
        payload: None,
    };
    let mut tx = WirelessPhy::new(Position::new(x, 0.0, 1.5), RadioParams::default());
    tx.send_down(&mut f, 0.0, 10.0).unwrap();
    f
}

#[test]
fn fading_decodable_probability_at_fixed_distance() {
    let phy = PhyParams::default();
    let rx = WirelessPhy::new(Position::new(0.0, 0.0, 1.5), RadioParams::default());
    let proto = frame_from(200.0);
    let mean = rx.mean_rx_power(&proto).unwrap();
    let expect = (-phy.rx_thresh / mean).exp();
    let mut rng = SimRng::new(5);
    let n = 10_000;
    let ok = (0..n)
        .filter(|_| {
            let mut f = proto.clone();
            rx.send_up(&mut f, &phy, FadingModel::Rayleigh, &mut rng).unwrap() == ReceptionClass::Decodable
        })
        .count();
    let frac = ok as f64 / n as f64;
    assert!((frac - expect).abs() < 0.02, "{frac} vs {expect}");
}
