use isothermic::surface::parse_surface;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parser_never_panics(text in "\\PC{0,80}") {
        let _ = parse_surface(&text);
    }

    #[test]
    fn parser_never_panics_on_near_documents(
        z in "[xy0-9+*/^() .a-z-]{0,30}",
        key in prop::sample::select(vec!["X", "Y", "Z", "param a", "domain", "periodic", "name"]),
    ) {
        let _ = parse_surface(&format!("X = x\nY = y\nZ = {z}\n{key} = {z}"));
        let _ = parse_surface(&format!("builtin:torus?{z}"));
    }

    #[test]
    fn quadric_jets_are_exact(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -0.9f64..0.9, y in -0.9f64..0.9) {
        let s = parse_surface(&format!("param a = {a}\nparam b = {b}\nX = x\nY = y\nZ = a*x^2 + b*x*y")).unwrap();
        let j = s.jet(x, y).unwrap();
        prop_assert!((j.f.z - (a * x * x + b * x * y)).abs() < 1e-12);
        prop_assert!((j.fx.z - (2.0 * a * x + b * y)).abs() < 1e-12);
        prop_assert!((j.fy.z - b * x).abs() < 1e-12);
        prop_assert!((j.fxx.z - 2.0 * a).abs() < 1e-12);
        prop_assert!((j.fxy.z - b).abs() < 1e-12);
        prop_assert!(j.fyy.z.abs() < 1e-12);
    }
}
