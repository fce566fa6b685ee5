use detwave::model::{validate_config, ModelConfig};
use detwave::profiles::*;

fn main() {
    let cfg = validate_config(ModelConfig::default()).unwrap();
    // weak deflagration: u_- = 1.8 -> u^i = 2.5, s from jump condition
    let s = (0.5*2.5f64*2.5 - 0.5*1.8*1.8) / (2.5 - 1.8 + 0.5);
    println!("s_defl = {s:.10}");
    let wave = classify_wave(&cfg, 1.8, 2.5, s).unwrap();
    println!("class = {:?}", wave.class);
    match compute_profile(&cfg, &wave, &LPolicy::default()) {
        Ok(p) => {
            println!("deflagration: L={:.2} n={} degenerate={} err={:?}", p.l, p.n(), p.degenerate, p.endstate_error);
            println!("  resid={:.3e} tails={:?}", p.fd_residual_max(), p.tail_decay_rates);
            let mono = p.u.windows(2).all(|w| w[1] >= w[0] - 1e-12)
                && p.z.windows(2).all(|w| w[1] >= w[0] - 1e-12);
            println!("  monotone increasing: {mono}");
            let (u0,_) = p.eval(0.0);
            println!("  u(0)-mid = {:+.2e}; u(+L)={:.8} z(+L)={:.10}", u0-2.15, p.u[p.n()-1], p.z[p.n()-1]);
        }
        Err(e) => println!("ERR: {e}"),
    }
}
