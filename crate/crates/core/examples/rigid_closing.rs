//! Twisting a linear flow: the closing parameters have a closed form.

use rotorlab::cfrac::{convergents, AlphaHandle};
use rotorlab::torus_flow::*;
use rotorlab::twist_closing::*;

fn main() {
    let alpha = AlphaHandle::golden();
    // a blow-up without cells is the linear flow, carrying its handle
    let f = build_blowup(&alpha, &[]).unwrap();
    let lp = TransverseLoop::vertical(0.0);
    let fam = build_twist_family(&f, &lp, 0.15, Profile::Poly, 0.5).unwrap();
    let ind = induced_family(&fam, 256).unwrap();
    let res = closing_search(&fam, &ind, 0.3, 3).unwrap();
    println!("c = {:.10}", fam.c);
    let conv = convergents(&alpha.expand(12).unwrap());
    for e in &res.entries {
        let c = conv[e.n];
        let oracle = (c.p as f64 / c.q as f64 - alpha.to_f64()) / fam.c;
        println!(
            "{}/{}: a = {:.12} (closed form {:.12}), residual {:.1e}",
            e.p_n, e.q_n, e.a_n, oracle, e.closure_residual
        );
    }
}
