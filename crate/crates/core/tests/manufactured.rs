use slip_lab::discretization::{assemble, BoundaryMode, FunctionSpace, SlipCoefficient};
use slip_lab::geometry::{boundary_frame, build_mesh};
use slip_lab::stokes::{solve_steady, KernelPolicy, ManufacturedCase, ManufacturedErrors};

fn errors(case: &ManufacturedCase, h: f64, alpha: f64) -> ManufacturedErrors {
    let mesh = build_mesh(&case.domain, h).unwrap();
    let frame = boundary_frame(&mesh, 4);
    let space = FunctionSpace::new(&mesh, BoundaryMode::Slip);
    let ops = assemble(&space, &frame, &SlipCoefficient::constant(alpha)).unwrap();
    let (f, g) = case.loads(&ops, 0.0);
    let s = solve_steady(&ops, &f, Some(&g), KernelPolicy::Reject).unwrap();
    assert!(s.residual < 1e-10 && s.divergence < 1e-10);
    case.errors(&ops, &s.u, &s.p)
}

fn orders(case: &ManufacturedCase, hs: [f64; 3], alpha: f64) -> (f64, f64, f64) {
    let e: Vec<ManufacturedErrors> = hs.iter().map(|&h| errors(case, h, alpha)).collect();
    let r = (hs[1] / hs[2]).log2();
    for (h, x) in hs.iter().zip(&e) {
        println!("{} h={h}: {x:?}", case.id);
    }
    (
        (e[1].velocity_l2 / e[2].velocity_l2).log2() / r,
        (e[1].velocity_h1 / e[2].velocity_h1).log2() / r,
        (e[1].pressure_l2 / e[2].pressure_l2).log2() / r,
    )
}

#[test]
fn channel_wave_orders() {
    let (u, g, p) = orders(&ManufacturedCase::channel_wave(2.0, 1.0), [0.2, 0.1, 0.05], 1.0);
    println!("channel orders: u {u} grad {g} p {p}");
    assert!(u >= 2.8 && g >= 1.8 && p >= 1.8);
}

#[test]
fn disk_vortex_orders() {
    let (u, g, p) = orders(&ManufacturedCase::disk_vortex(1.0), [0.2, 0.1, 0.05], 1.0);
    println!("disk orders: u {u} grad {g} p {p}");
    assert!(u >= 2.8 && g >= 1.8 && p >= 1.8);
}
