//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#[path = "../../core/tests/support/brute.rs"]
mod brute;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::rc::Rc;
use std::time::{Duration, Instant};

use mechnet::runner::{RoundOutcome, RunResult};
use mechnet::{run_scenario, Scenario};
use mechnet_core::catalog::{Mechanism, TypeReport};
use mechnet_core::mechanisms::buy_path::buy_path;
use mechnet_core::mechanisms::single_minded::single_minded_interval;
use mechnet_core::mechanisms::unit_demand::unit_demand;
use mechnet_core::mechanisms::vickrey::vickrey_redistribution;
use mechnet_core::scalar::kth_largest;
use mechnet_core::{apply_scheme, reduce_tax_scheme, Balances, Exact, IntervalBid, Network, Payee, TaxVector};
use mechnet_sim::dtd::{Dtd, DtdConfig};
use mechnet_sim::hlc::RegistrationRule;
use mechnet_sim::kernel::EventKind;
use mechnet_sim::protocol::Strategy;
use mechnet_sim::world::{run_world, PlayerSpec, WorldSpec};
use mechnet_sim::{Kernel, KernelConfig, ProcessId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-9;
const INTERVAL_AUCTION: &str = include_str!("../scenarios/interval-auction.scn");

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn scenario(text: &str) -> Scenario {
    Scenario::parse(text).unwrap_or_else(|e| panic!("bad scenario: {e:?}"))
}

fn run_exact(s: &Scenario, seed: Option<u64>) -> Result<RunResult<Exact>, String> {
    run_scenario::<Exact>(s, seed).map_err(|e| e.to_string())
}

fn q(v: i64) -> Exact {
    Exact::from_integer(v)
}

fn transfers(r: &RunResult<Exact>, round: usize) -> Result<Vec<(String, String, Exact)>, String> {
    match &r.rounds[round].outcome {
        RoundOutcome::Settled { transfers, .. } => Ok(transfers.clone()),
        RoundOutcome::Aborted(why) => Err(format!("round {} aborted: {why}", round + 1)),
    }
}

fn clean(r: &RunResult<Exact>) -> Result<(), String> {
    ensure(!r.violated(), || {
        format!(
            "violations {:?}, stalled {}, disagreements {:?}",
            r.report.violations, r.report.stalled, r.disagreements
        )
    })
}

fn interval_auction() -> Verdict {
    let start = Instant::now();
    let r = run_exact(&scenario(INTERVAL_AUCTION), None)?;
    let elapsed = start.elapsed();
    clean(&r)?;
    let got = transfers(&r, 0)?;
    let want = vec![("p2".to_string(), "TC".to_string(), q(28)), ("p3".to_string(), "TC".to_string(), q(10))];
    ensure(got == want, || format!("scheme {got:?}"))?;
    let RoundOutcome::Settled { decision, taxes, .. } = &r.rounds[0].outcome else { unreachable!() };
    ensure(decision == "winners p2 p3 p5", || format!("decision {decision}"))?;
    let p5 = taxes.iter().find(|(p, _)| p == "p5").map(|(_, t)| *t);
    ensure(p5 == Some(q(0)), || format!("p5 tax {p5:?}"))?;
    ensure(r.rounds[0].rejected == ["p6"], || format!("rejected {:?}", r.rounds[0].rejected))?;
    ensure(r.rounds[0].total == Some(q(38)), || format!("total {:?}", r.rounds[0].total))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("payments 28, 10, 0; total 38; p6 rejected; {elapsed:.0?}"))
}

fn value_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=10).map(f64::from).collect();
    g.extend([2.5, 7.5]);
    g
}

/// Truthful utility against every grid deviation of every player.
fn check_deviations(
    mech: &Mechanism<f64>,
    truth: &[TypeReport<f64>],
    lies: impl Fn(usize) -> Vec<TypeReport<f64>>,
    checked: &mut usize,
) -> Result<(), String> {
    for i in 0..truth.len() {
        let honest = brute::utility(mech, truth, i, &truth[i]);
        let grid = lies(i);
        if grid.len() < 9 {
            return Err(format!("grid has only {} points", grid.len()));
        }
        for lie in grid {
            let u = brute::utility(mech, truth, i, &lie);
            *checked += 1;
            if honest < u - EPS {
                return Err(format!(
                    "{:?}: player {i} gains by announcing {lie} instead of {} ({honest} < {u})",
                    mech.kind(),
                    truth[i]
                ));
            }
        }
    }
    Ok(())
}

fn strategy_proofness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0usize;
    let values = |g: &[f64]| g.iter().map(|&v| TypeReport::Value(v)).collect::<Vec<_>>();
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let truth: Vec<TypeReport<f64>> = (0..n).map(|_| TypeReport::Value(rng.gen_range(0..=10) as f64)).collect();
        check_deviations(&Mechanism::Vickrey, &truth, |_| values(&value_grid()), &mut checked)?;
        let cost = rng.gen_range(1..=20) as f64;
        check_deviations(&Mechanism::PublicProject { cost }, &truth, |_| values(&value_grid()), &mut checked)?;
    }
    for _ in 0..200 {
        let n = rng.gen_range(3..=4);
        let truth: Vec<TypeReport<f64>> = (0..n).map(|_| TypeReport::Value(rng.gen_range(0..=10) as f64)).collect();
        check_deviations(&Mechanism::VickreyRedistribution, &truth, |_| values(&value_grid()), &mut checked)?;
    }
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let items = rng.gen_range(1..=3);
        let truth: Vec<TypeReport<f64>> = brute::random_matrix(&mut rng, n, items)
            .into_iter()
            .map(TypeReport::Valuations)
            .collect();
        let lies: Vec<TypeReport<f64>> = brute::random_matrix(&mut rng, 10, items)
            .into_iter()
            .map(TypeReport::Valuations)
            .collect();
        check_deviations(&Mechanism::UnitDemand { items }, &truth, |_| lies.clone(), &mut checked)?;
    }
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let items = rng.gen_range(1..=4);
        let bids = brute::random_bids(&mut rng, n, items);
        let truth: Vec<TypeReport<f64>> = bids.iter().cloned().map(TypeReport::Bundle).collect();
        let lies = |i: usize| {
            let b = &bids[i];
            let mut out = Vec::new();
            for first in 1..=b.first {
                for last in b.last..=items {
                    for v in [0.0, 2.0, 4.5, 6.0, 8.0, 11.0, 15.0] {
                        out.push(TypeReport::Bundle(IntervalBid::new(first, last, v)));
                    }
                }
            }
            out.extend([1.0, 9.0, 13.0].map(|v| TypeReport::Bundle(IntervalBid::new(b.first, b.last, v))));
            out
        };
        check_deviations(&Mechanism::SingleMinded { items }, &truth, lies, &mut checked)?;
    }
    for _ in 0..200 {
        let network = brute::random_network(&mut rng, 4);
        let truth: Vec<TypeReport<f64>> = network
            .edges
            .iter()
            .map(|e| TypeReport::EdgeCost {
                edge: e.label.clone(),
                cost: rng.gen_range(0..=5) as f64,
            })
            .collect();
        let labels: Vec<String> = network.edges.iter().map(|e| e.label.clone()).collect();
        let lies = |i: usize| {
            value_grid()
                .into_iter()
                .map(|c| TypeReport::EdgeCost {
                    edge: labels[i].clone(),
                    cost: c,
                })
                .collect()
        };
        check_deviations(&Mechanism::BuyPath { network }, &truth, lies, &mut checked)?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("6 mechanisms x 200 instances, {checked} deviations; {elapsed:.1?}"))
}

fn feasibility() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..1000 {
        let n = rng.gen_range(1..=5);
        let values: Vec<TypeReport<f64>> = (0..n).map(|_| TypeReport::Value(rng.gen_range(0.0..10.0))).collect();
        let items = rng.gen_range(1..=4);
        let vcg = [
            (Mechanism::Vickrey, values.clone()),
            (Mechanism::PublicProject { cost: rng.gen_range(0.0..30.0) }, values.clone()),
            (
                Mechanism::UnitDemand { items },
                brute::random_matrix(&mut rng, n, items).into_iter().map(TypeReport::Valuations).collect(),
            ),
            (
                Mechanism::SingleMinded { items },
                brute::random_bids(&mut rng, n, items).into_iter().map(TypeReport::Bundle).collect(),
            ),
        ];
        for (mech, reports) in vcg {
            let total = mech.evaluate(&reports).map_err(|e| e.to_string())?.taxes.total();
            ensure(total <= EPS, || format!("instance {k}: {:?} collects {total}", mech.kind()))?;
        }

        let network = brute::random_network(&mut rng, 8);
        let costs: Vec<f64> = (0..network.edges.len()).map(|_| rng.gen_range(0.0..5.0)).collect();
        let out = buy_path(&network, &costs).map_err(|e| e.to_string())?;
        for &e in &out.path {
            ensure(out.taxes[e] >= -EPS, || format!("instance {k}: edge {e} claims {}", out.taxes[e]))?;
        }

        let x: Vec<f64> = (0..rng.gen_range(3..=6)).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let reports: Vec<TypeReport<f64>> = x.iter().map(|&v| TypeReport::Value(v)).collect();
        let total = Mechanism::Walker.evaluate(&reports).map_err(|e| e.to_string())?.taxes.total();
        ensure(total.abs() <= EPS, || format!("instance {k}: walker imbalance {total}"))?;

        let bids: Vec<f64> = (0..rng.gen_range(3..=6)).map(|_| rng.gen_range(0.0..50.0)).collect();
        let out = vickrey_redistribution(&bids).map_err(|e| e.to_string())?;
        let expected = 2.0 / bids.len() as f64 * (kth_largest(&bids, 2) - kth_largest(&bids, 3));
        ensure((out.collector - expected).abs() <= EPS, || {
            format!("instance {k}: collector {} expected {expected}", out.collector)
        })?;
    }
    Ok("1000 instances per property".into())
}

fn conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..10_000 {
        let n = rng.gen_range(0..=8);
        let taxes = TaxVector(
            (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => q(0),
                    _ => Exact::new(rng.gen_range(-40..=40), rng.gen_range(1..=6)),
                })
                .collect(),
        );
        let scheme = reduce_tax_scheme(&taxes);
        ensure(scheme.transfers.iter().all(|t| t.amount != q(0)), || format!("vector {k}: zero transfer"))?;
        let b = apply_scheme(&scheme, Balances::zeros(n));
        ensure(b.players == taxes.0, || format!("vector {k}: balances {:?} for {:?}", b.players, taxes.0))?;
        ensure(b.collector == -taxes.total(), || format!("vector {k}: collector {}", b.collector))?;
        for t in &scheme.transfers {
            if let Payee::Player(p) = t.payee {
                ensure(p != t.payer, || format!("vector {k}: self transfer"))?;
            }
        }
    }
    Ok("10000 random tax vectors, exact".into())
}

fn exact_solvers() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..1000 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=5);
        let w = brute::random_matrix(&mut rng, n, m);
        let out = unit_demand(&w, m).map_err(|e| e.to_string())?;
        let (_, assignment) = brute::unit_demand(&w, m, None);
        ensure(out.assignment == assignment, || format!("unit-demand {k}: assignment"))?;
        ensure(out.taxes.0 == brute::unit_demand_taxes(&w, m), || format!("unit-demand {k}: taxes"))?;

        let bids = brute::random_bids(&mut rng, n, m);
        let out = single_minded_interval(&bids, m).map_err(|e| e.to_string())?;
        ensure(out.winners == brute::single_minded(&bids, None).1, || format!("single-minded {k}: winners"))?;
        ensure(out.taxes.0 == brute::single_minded_taxes(&bids), || format!("single-minded {k}: taxes"))?;

        let net = brute::random_network(&mut rng, 8);
        let costs: Vec<f64> = (0..net.edges.len()).map(|_| rng.gen_range(0..=5) as f64).collect();
        let out = buy_path(&net, &costs).map_err(|e| e.to_string())?;
        let (path, claims) = brute::buy_path_claims(&net, &costs);
        ensure(out.path == path, || format!("buy-path {k}: path"))?;
        ensure(out.taxes.0 == claims, || format!("buy-path {k}: claims"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!("1000 instances per solver; {elapsed:.1?}"))
}

const DTD_PROCESSES: usize = 5;
const DTD_PHASES: usize = 3;
const MAX_LATENCY: u64 = 16;
const WAVE_INTERVAL: u64 = 4;
/// One wave needs a probe and an echo over every buddy hop, with a full
/// message delay per hop, plus the pause between waves.
const LATENCY_BOUND: u64 = MAX_LATENCY * (1 + 4 * (DTD_PROCESSES as u64 - 1)) + WAVE_INTERVAL;

type Flags = Rc<RefCell<Vec<Vec<bool>>>>;

/// Every process broadcasts once per phase over a ring of buddies.
fn dtd_run(seed: u64, crash: Option<(usize, u64)>) -> (mechnet_sim::RunReport, Vec<Vec<bool>>) {
    let n = DTD_PROCESSES;
    let mut kernel = Kernel::new(KernelConfig {
        seed,
        max_latency: MAX_LATENCY,
        ..KernelConfig::default()
    });
    let ids: Vec<ProcessId> = (0..n).map(|_| kernel.reserve()).collect();
    let config = DtdConfig {
        wave_interval: WAVE_INTERVAL,
        ..DtdConfig::new(ids[0])
    };
    let flags: Flags = Rc::new(RefCell::new(vec![Vec::new(); n]));
    for i in 0..n {
        let buddies = vec![ids[(i + 1) % n], ids[(i + n - 1) % n]];
        let others: Vec<ProcessId> = ids.iter().copied().filter(|&p| p != ids[i]).collect();
        let flags = flags.clone();
        kernel.spawn_as(ids[i], &format!("p{i}"), false, move |ctx| async move {
            let mut dtd = Dtd::new(ctx, config, buddies, true);
            for _ in 0..DTD_PHASES {
                dtd.initialize().unwrap();
                dtd.send("hello", vec![i as u8], &others);
                while dtd.passive_receive().await.is_some() {}
                let failed = dtd.had_failure_in_last_phase().unwrap();
                flags.borrow_mut()[i].push(failed);
            }
        });
    }
    if let Some((victim, at)) = crash {
        kernel.schedule_crash(ids[victim], at).unwrap();
    }
    let report = kernel.run();
    let flags = flags.borrow().clone();
    (report, flags)
}

fn dtd() -> Verdict {
    let mut worst = 0;
    for seed in 0..1000u64 {
        let (report, flags) = dtd_run(seed, None);
        ensure(report.violations.is_empty(), || format!("seed {seed}: {:?}", report.violations))?;
        ensure(!report.stalled, || format!("seed {seed}: stalled"))?;
        ensure(report.barriers.len() == DTD_PHASES, || format!("seed {seed}: {} barriers", report.barriers.len()))?;
        for b in &report.barriers {
            worst = worst.max(b.latency);
            ensure(b.latency <= LATENCY_BOUND, || {
                format!("seed {seed}: phase {} announced {} steps after quiescence", b.phase, b.latency)
            })?;
        }
        ensure(flags.iter().flatten().all(|f| !f), || format!("seed {seed}: spurious failure flag"))?;
    }
    for seed in 0..1000u64 {
        let victim = 1 + (seed % (DTD_PROCESSES as u64 - 1)) as usize;
        let (report, flags) = dtd_run(seed, Some((victim, 3)));
        ensure(report.violations.is_empty(), || format!("crash seed {seed}: {:?}", report.violations))?;
        ensure(!report.stalled, || format!("crash seed {seed}: stalled"))?;
        for (i, f) in flags.iter().enumerate().filter(|&(i, _)| i != victim) {
            ensure(f.len() == DTD_PHASES, || format!("crash seed {seed}: process {i} saw {} phases", f.len()))?;
            ensure(f[0], || format!("crash seed {seed}: process {i} missed the failure"))?;
            ensure(f[1..].iter().all(|x| !x), || format!("crash seed {seed}: process {i} repeats the failure"))?;
        }
    }
    Ok(format!("1000 + 1000 seeds; worst latency {worst} <= {LATENCY_BOUND}"))
}

fn agreement() -> Verdict {
    let s = scenario(INTERVAL_AUCTION);
    let mut reference = None;
    let mut orders = BTreeSet::new();
    for seed in 0..50 {
        let r = run_exact(&s, Some(seed))?;
        clean(&r).map_err(|e| format!("seed {seed}: {e}"))?;
        orders.insert(r.trace_lines());
        let outcome = r.rounds[0].outcome.clone();
        match &reference {
            None => reference = Some(outcome),
            Some(o) => ensure(o == &outcome, || format!("seed {seed}: {outcome:?} differs from {o:?}"))?,
        }
    }
    Ok(format!("50 seeds, one outcome, {} distinct traces", orders.len()))
}

fn vickrey_world(values: &[i64]) -> WorldSpec<Exact> {
    let players = values
        .iter()
        .enumerate()
        .map(|(i, &v)| PlayerSpec::honest(&format!("p{}", i + 1), "R1", TypeReport::Value(q(v))))
        .collect();
    WorldSpec::single_registry(Mechanism::Vickrey, players, RegistrationRule::Deadline { deadline: 200 })
}

fn policing() -> Verdict {
    let mut spec = vickrey_world(&[4, 9, 6, 2]);
    spec.policing = true;
    spec.players[2].strategy = Strategy::FalsifyScheme;
    let run = run_world(&spec)?;
    ensure(run.report.violations.is_empty() && !run.report.stalled, || format!("{:?}", run.report.violations))?;
    let falsifier = run.players[2].1;
    let expected: BTreeSet<ProcessId> = run.players.iter().map(|p| p.1).filter(|&p| p != falsifier).collect();
    for (name, id) in run.players.iter().filter(|p| p.1 != falsifier) {
        let view = &run.journal.players[id][0];
        ensure(view.finished, || format!("{name} did not finish"))?;
        ensure(view.honest.as_ref() == Some(&expected), || format!("{name} honest set {:?}", view.honest))?;
    }

    let mut spec = vickrey_world(&[4, 9, 6, 2]);
    spec.policing = true;
    spec.players[1].strategy = Strategy::DuplicateSubmit;
    let run = run_world(&spec)?;
    let blocked = run
        .report
        .trace
        .iter()
        .any(|e| e.kind == EventKind::Note && e.summary.starts_with("rejected duplicate POLICE_SUBMIT"));
    ensure(blocked, || "duplicate submission was not blocked".into())?;
    ensure(run.report.violations.is_empty(), || format!("{:?}", run.report.violations))?;
    Ok("falsifier isolated by all three honest players; duplicate blocked".into())
}

/// Outcome of `mechanism` evaluated directly on the given named types.
fn direct(s: &Scenario, names: &[&str]) -> Result<Vec<(String, String, Exact)>, String> {
    let mech = mechnet::types::build_mechanism::<Exact>(s)?;
    let reports = names
        .iter()
        .map(|n| {
            let p = s.players.iter().find(|p| p.name == *n).ok_or("no such player")?;
            mechnet::types::parse_report::<Exact>(s.mechanism, &p.announced)
        })
        .collect::<Result<Vec<_>, String>>()?;
    let out = mech.evaluate(&reports).map_err(|e| e.to_string())?;
    Ok(reduce_tax_scheme(&out.taxes)
        .transfers
        .into_iter()
        .map(|t| {
            let payee = match t.payee {
                Payee::Collector => "TC".to_string(),
                Payee::Player(p) => names[p].to_string(),
            };
            (names[t.payer].to_string(), payee, t.amount)
        })
        .collect())
}

/// Claims computed by exhaustive path search on the network without `gone`.
fn brute_claims(s: &Scenario, gone: &str) -> Vec<(String, String, Exact)> {
    let owner_of = |label: &str| {
        s.players
            .iter()
            .find(|p| p.announced.split(':').next() == Some(label))
            .map(|p| p.name.clone())
            .unwrap()
    };
    let edges: Vec<_> = s
        .edges
        .iter()
        .filter(|e| owner_of(&e.label) != gone)
        .map(|e| mechnet_core::Edge::new(&e.label, &e.from, &e.to))
        .collect();
    let net = Network::new(edges, "s", "t");
    let costs: Vec<f64> = net
        .edges
        .iter()
        .map(|e| {
            let p = s.players.iter().find(|p| p.name == owner_of(&e.label)).unwrap();
            p.announced.split(':').nth(1).unwrap().parse().unwrap()
        })
        .collect();
    let (path, claims) = brute::buy_path_claims(&net, &costs);
    // Exact scheme order follows player declaration order.
    let mut out: Vec<(usize, String, Exact)> = path
        .iter()
        .map(|&e| {
            let owner = owner_of(&net.edges[e].label);
            let index = s.players.iter().position(|p| p.name == owner).unwrap();
            (index, owner, -q(claims[e] as i64))
        })
        .collect();
    out.sort_by_key(|o| o.0);
    out.into_iter().map(|(_, o, a)| (o, "TC".into(), a)).collect()
}

const BUY_PATH_NET: &str = "mechanism buy-path\nsource s\nsink t\nedge sa s a\nedge at a t\nedge st s t\nedge sb s b\nedge bt b t\nregistry R1\n";

fn fault_recovery() -> Verdict {
    let vickrey = "mechanism vickrey\nregistry R1\nplayer p1 registry=R1 type=4\nplayer p3 registry=R1 type=6\nplayer p4 registry=R1 type=2\n";
    let bp_players = |crash: &str, who: &str| {
        ["p1 type=sa:2", "p2 type=at:1", "p3 type=st:4", "p4 type=sb:3", "p5 type=bt:3"]
            .iter()
            .map(|p| {
                let extra = if p.starts_with(who) { format!(" crash={crash}") } else { String::new() };
                let (name, ty) = p.split_once(' ').unwrap();
                format!("player {name} registry=R1 {ty}{extra}\n")
            })
            .collect::<String>()
    };
    struct Case {
        name: &'static str,
        text: String,
        crashed: &'static str,
        failure: bool,
    }
    let cases = [
        Case {
            name: "vickrey crash before type",
            text: format!("{vickrey}player p2 registry=R1 type=9 crash=before-type\n"),
            crashed: "p2",
            failure: true,
        },
        Case {
            name: "vickrey winner crash after type",
            text: format!("{vickrey}player p2 registry=R1 type=9 crash=after-type\n"),
            crashed: "p2",
            failure: true,
        },
        Case {
            name: "buy-path path owner crash after type",
            text: format!("{BUY_PATH_NET}{}", bp_players("after-type", "p1")),
            crashed: "p1",
            failure: true,
        },
        Case {
            name: "buy-path owner crash before type",
            text: format!("{BUY_PATH_NET}{}", bp_players("before-type", "p3")),
            crashed: "p3",
            failure: true,
        },
        Case {
            name: "public project pivotal crash",
            text: "mechanism public-project\ncost 10\nregistry R1\nplayer p1 registry=R1 type=8 crash=after-type\nplayer p2 registry=R1 type=2\nplayer p3 registry=R1 type=3\n".into(),
            crashed: "p1",
            failure: true,
        },
        Case {
            name: "public project non-pivotal crash",
            text: "mechanism public-project\ncost 9\nregistry R1\nplayer p1 registry=R1 type=3 crash=after-type\nplayer p2 registry=R1 type=5\nplayer p3 registry=R1 type=6\n".into(),
            crashed: "p1",
            failure: true,
        },
    ];
    for case in &cases {
        let fail = |e: String| format!("{}: {e}", case.name);
        let s = scenario(&case.text);
        let first = run_exact(&s, Some(1)).map_err(fail)?;
        let again = run_exact(&s, Some(1)).map_err(fail)?;
        ensure(first.rounds == again.rounds, || fail("not deterministic".into()))?;
        clean(&first).map_err(fail)?;
        let round = &first.rounds[0];
        ensure(round.failure == case.failure, || fail(format!("failure flag {}", round.failure)))?;
        ensure(!round.participants.iter().any(|p| p == case.crashed), || fail("crashed player still counted".into()))?;
        let survivors: Vec<&str> = s
            .players
            .iter()
            .map(|p| p.name.as_str())
            .filter(|n| *n != case.crashed)
            .collect();
        if s.mechanism == mechnet_core::catalog::MechanismKind::PublicProject {
            let mech = mechnet::types::build_mechanism::<Exact>(&s)?;
            let all: Vec<TypeReport<Exact>> = s
                .players
                .iter()
                .map(|p| mechnet::types::parse_report(s.mechanism, &p.announced))
                .collect::<Result<_, _>>()?;
            let full = mech.evaluate(&all).map_err(|e| e.to_string())?;
            let index = s.players.iter().position(|p| p.name == case.crashed).unwrap();
            let pivotal = full.taxes[index] < q(0);
            let aborted = matches!(round.outcome, RoundOutcome::Aborted(_));
            ensure(aborted == pivotal, || fail(format!("aborted {aborted}, clarke tax {}", full.taxes[index])))?;
            if !pivotal {
                ensure(transfers(&first, 0)? == direct(&s, &survivors)?, || fail("wrong n-1 outcome".into()))?;
            }
        } else if s.mechanism == mechnet_core::catalog::MechanismKind::BuyPath {
            let got = transfers(&first, 0).map_err(fail)?;
            let want = brute_claims(&s, case.crashed);
            ensure(got == want, || fail(format!("claims {got:?}, expected {want:?}")))?;
        } else {
            let got = transfers(&first, 0).map_err(fail)?;
            let want = direct(&s, &survivors)?;
            ensure(got == want, || fail(format!("scheme {got:?}, expected {want:?}")))?;
        }
    }
    Ok(format!("{} deterministic fault cases", cases.len()))
}

fn repeated_rounds() -> Verdict {
    let text = "mechanism vickrey\nrounds 3\nexclude-winners on\nregistry R1\nplayer p1 registry=R1 type=7\nplayer p2 registry=R1 type=9\nplayer p3 registry=R1 type=5\nplayer p4 registry=R1 type=3\n";
    let r = run_exact(&scenario(text), None)?;
    clean(&r)?;
    let mut winners = Vec::new();
    for round in &r.rounds {
        let t = transfers(&r, round.round as usize - 1)?;
        ensure(t.len() == 1, || format!("round {}: {t:?}", round.round))?;
        winners.push(t[0].0.clone());
    }
    let distinct: BTreeSet<&String> = winners.iter().collect();
    ensure(distinct.len() == 3, || format!("winners {winners:?}"))?;
    let barriers: Vec<u64> = r
        .report
        .trace
        .iter()
        .filter(|e| e.kind == EventKind::Barrier)
        .filter_map(|e| e.phase)
        .collect();
    // Register, Types, Scheme, Total and Final in each round.
    let per_round = 5;
    ensure(barriers.len() == 3 * per_round, || format!("{} barriers in the trace", barriers.len()))?;
    ensure(barriers.windows(2).all(|w| w[0] < w[1]), || "barrier phases out of order".into())?;
    Ok(format!("winners {}; {} barriers traced", winners.join(", "), barriers.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("interval-auction golden outcome", interval_auction),
        ("groves strategy-proofness", strategy_proofness),
        ("feasibility and budget balance", feasibility),
        ("tax scheme conservation", conservation),
        ("exact solvers match enumeration", exact_solvers),
        ("termination detection safety and liveness", dtd),
        ("agreement across schedules", agreement),
        ("policing", policing),
        ("fault recovery", fault_recovery),
        ("repeated rounds", repeated_rounds),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
