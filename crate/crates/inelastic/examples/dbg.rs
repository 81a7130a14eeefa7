use inelastic::duhamel::*;
use inelastic::expansion::{order1_eval, XGrid};
use inelastic::model::{Model, ModelParams, Potential};

fn main() {
    let grid = XGrid::default();
    let n = 1usize;
    for eps in [0.025f64, 0.0125, 0.00625, 0.003125] {
        let m = Model::new(ModelParams::stationary_default(eps), Potential::default());
        let mut n1 = 0.0f64;
        for x in grid.points() {
            n1 += order1_eval(&m, n, x).norm_sqr() * grid.dx;
        }
        let dev = |z: &Vec<inelastic::C64>| -> f64 {
            let mut d = 0.0;
            for (j, x) in grid.points().enumerate() {
                d += (z[j] / eps - order1_eval(&m, n, x)).norm_sqr() * grid.dx;
            }
            (d / n1).sqrt()
        };
        print!("eps={eps:<9}");
        for n_w in [55usize, 109, 217] {
            let qp = DuhamelParams { n_w, ..DuhamelParams::default() };
            let z = duhamel_l1_zform(&m, n, grid, &qp).unwrap();
            print!("  n_w={n_w}: {:.3e}", dev(&z));
        }
        println!();
    }
}
