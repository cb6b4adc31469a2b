use hcm_core::coupling::CouplingSpec;
use hcm_core::dynamics::{simulate, SimState, SystemConfig};
use hcm_core::graph::{make_layered, LayeredOptions};
use hcm_core::reduced::{classify, lyapunov_trace, shadow_check, ReducedMap};
use hcm_core::torus::{circle_dist, wrap};

fn main() {
    let t_total = 10_000u64;
    let transient = 1000usize;
    let g = make_layered(
        20, 400,
        &[(1.0, 10), (0.5, 10), (0.25, 10)],
        20_000 - 30, 1, LayeredOptions::default(),
    ).unwrap();
    let cfg = SystemConfig::new(2, 0.6, &g, CouplingSpec::SineDiffusive).unwrap();
    let hubs: Vec<u32> = (g.n_low() as u32..g.n_nodes() as u32).collect();
    let init = SimState::random(g.n_nodes(), 42);
    let t0 = std::time::Instant::now();
    let traj = simulate(&cfg, &init, t_total, &hubs, 1, None).unwrap();
    eprintln!("simulate took {:?}", t0.elapsed());

    let report6 = classify(&ReducedMap::t_beta(0.6), 1e-10, 8, 20_000).unwrap();
    for k in 0..10 {
        let trace = traj.node_trace(hubs[k]).unwrap();
        let sr = shadow_check(trace, &report6, 0.05, transient).unwrap();
        println!("kappa=1 hub {k}: sup_dist {:.4} holds {}", sr.sup_dist, sr.holds);
    }
    for k in 10..20 {
        let trace = traj.node_trace(hubs[k]).unwrap();
        let sup = trace.iter().skip(transient)
            .map(|z| circle_dist(*z, wrap(0.0)))
            .fold(0.0f64, f64::max);
        println!("kappa=1/2 hub {}: sup |y| {:.4}", k - 10, sup);
    }
    let g15 = ReducedMap::t_beta(0.15);
    for k in 20..30 {
        let trace = traj.node_trace(hubs[k]).unwrap();
        let lyap = lyapunov_trace(&g15, &trace[transient..]).unwrap();
        println!("kappa=1/4 hub {}: lyapunov {:.4}", k - 20, lyap);
    }
}
