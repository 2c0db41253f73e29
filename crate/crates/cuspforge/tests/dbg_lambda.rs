#[test]
fn dbg() {
    use cuspforge::analytic::hp::{Ctx, Cx};
    use cuspforge::analytic::lambda::modular_lambda;
    let ctx = Ctx::new(192);
    for &(x, y) in &[(0.21f64, 0.9f64), (-0.3, 1.4)] {
        let z = Cx::from_f64(&ctx, x, y);
        let l = modular_lambda(&ctx, &z).unwrap();
        let za = Cx::from_f64(&ctx, x + 2.0, y);
        let la = modular_lambda(&ctx, &za).unwrap();
        let d = ctx.to_f64(&l.dist(&ctx, &la));
        println!("z=({},{}) dist A = {:e}", x, y, d);
        let two_z_one = z.scale(&ctx, &ctx.int(2)).add(&ctx, &Cx::one(&ctx));
        let zb = z.div(&ctx, &two_z_one);
        let lb = modular_lambda(&ctx, &zb).unwrap();
        println!("  dist B = {:e}", ctx.to_f64(&l.dist(&ctx, &lb)));
        let zs = z.inv(&ctx).neg(&ctx);
        let ls = modular_lambda(&ctx, &zs).unwrap();
        let expect = Cx::one(&ctx).sub(&ctx, &l);
        println!("  dist S = {:e}", ctx.to_f64(&ls.dist(&ctx, &expect)));
    }
}
