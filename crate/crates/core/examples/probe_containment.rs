use bulgekit::builders::quad_double_scene;
use bulgekit::gluekit::certify_convexity;
use bulgekit::scene::GluingKit;

fn main() {
    let scene = quad_double_scene(std::f64::consts::FRAC_PI_3, 2.45, 7, 4, 2000).unwrap();
    let kit = GluingKit::compile(&scene).unwrap();
    let cert = certify_convexity(&kit, 4).unwrap();
    println!("pass={} containment entries: {}", cert.pass, cert.containment.len());
    for c in &cert.containment {
        println!("  wall {} pass={} margin={}", c.wall, c.pass, c.margin);
    }
}
