use sparsesrc::ssn::StepControl;
use sparsesrc::{BuiltinExample, LinearMode, Medium, PeakSpec};
use sparsesrc_cli::{ConfigError, ExampleChoice, ExperimentConfig, Method, Overrides};

const FULL: &str = r#"
example = "peaks7_inhomo"
k = 10.0
grid_n = 40
medium = "inhomogeneous"
alpha = 2e-5
noise = 0.05
seed = 42
method = "both"
output_dir = "runs/inhomo"

[ssn]
gamma0 = 1e4
gamma_factor = 100.0
outer_steps = 3
inner_cap = 50
lin_tol = 1e-11
lin_mode = "iterative_normal"
step = "armijo"
"#;

fn err(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Ok(c) => panic!("{text:?} parsed: {c:?}"),
        Err(e) => e.to_string(),
    }
}

#[test]
fn minimal_config_takes_defaults() {
    let c = ExperimentConfig::parse("example = \"peaks4\"").unwrap();
    assert_eq!(
        c,
        ExperimentConfig::for_example(ExampleChoice::Builtin(BuiltinExample::Peaks4))
    );
    assert_eq!(c.alpha, 1e-5);
    assert_eq!(c.noise, 0.01);
    assert_eq!(c.method, Method::Ssn);
    assert_eq!(c.wavenumber(), 6.0);
    assert_eq!(c.grid().unwrap().n(), 24);
    assert_eq!(c.medium(), Medium::Homogeneous);
    let s = c.solver_config();
    assert_eq!(s.gammas(), [1e5, 1e6, 1e7, 1e8, 1e9, 1e10]);
    assert_eq!(s.lin_tol, 1e-10);
}

#[test]
fn full_config_parses() {
    let c = ExperimentConfig::parse(FULL).unwrap();
    assert_eq!(c.wavenumber(), 10.0);
    assert_eq!(c.grid().unwrap().n(), 40);
    assert_eq!(c.seed, 42);
    assert_eq!(c.ssn.lin_mode, LinearMode::IterativeNormal);
    assert_eq!(c.ssn.step, StepControl::Armijo);
    assert_eq!(c.solver_config().gammas(), [1e4, 1e6, 1e8]);
    assert_eq!(c.solver_config().alpha, 2e-5);
}

#[test]
fn round_trip() {
    for text in [
        FULL,
        "example = \"peaks9\"",
        "example = [{ x = 0.3, y = 0.6, sign = -1 }, { x = 0.7, y = 0.2, sign = 1 }]\nk = 8.5",
    ] {
        let c = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }
}

#[test]
fn peak_list() {
    let c = ExperimentConfig::parse("example = [{ x = 0.3, y = 0.6, sign = -1 }]\nk = 5").unwrap();
    assert_eq!(
        c.example,
        ExampleChoice::Peaks(vec![PeakSpec::new(0.3, 0.6, -1.0).unwrap()])
    );
    assert_eq!(c.example.name(), "custom");
    assert_eq!(c.medium(), Medium::Homogeneous);
}

#[test]
fn unknown_example_lists_names() {
    let e = err("seed = 1\nexample = \"peaks5\"\n");
    assert!(e.contains("line 2"), "{e}");
    assert!(e.contains("unknown example"), "{e}");
    for name in ["peaks4", "peaks9", "peaks7_inhomo"] {
        assert!(e.contains(name), "{e}");
    }
}

#[test]
fn errors_are_line_anchored() {
    let cases = [
        ("example = \"peaks4\"\nseed = \"x\"\n", "line 2"),
        ("example = \"peaks4\"\n\nalpha = 0\n", "line 3"),
        ("example = \"peaks4\"\nbogus = 1\n", "line 2"),
        ("example = \"peaks4\"\n[ssn]\nalpha = 1e-3\n", "line 3"),
        ("example = \"peaks4\"\n[ssn]\nouter_steps = 0\n", "line 2"),
        ("example = \"peaks4\"\nmethod = \"lasso\"\n", "line 2"),
        ("example = [{ x = 1.5, y = 0.5, sign = 1 }]\nk = 4\n", "line 1"),
        ("k = 4\nexample = []\n", "line 2"),
        ("example = [{ x = 0.5, y = 0.5, sign = 1 }]\n", "line 1"),
        ("example = \"peaks4\"\nk = 1.0\n", "line 2"),
        ("example = \"peaks7_inhomo\"\nmethod = \"ssn_real_part\"\n", "line 2"),
    ];
    for (text, line) in cases {
        let e = err(text);
        assert!(e.contains(line), "{text:?} -> {e}");
    }
}

#[test]
fn missing_example_rejected() {
    let e = err("k = 6\n");
    assert!(e.contains("example"), "{e}");
}

#[test]
fn overrides_apply_and_validate() {
    let mut c = ExperimentConfig::parse("example = \"peaks4\"").unwrap();
    c.apply(&Overrides {
        seed: Some(9),
        method: Some(Method::Tikhonov),
        alpha: Some(3e-5),
        noise: Some(0.0),
        output_dir: Some("elsewhere".into()),
    })
    .unwrap();
    assert_eq!((c.seed, c.method, c.alpha, c.noise), (9, Method::Tikhonov, 3e-5, 0.0));
    assert_eq!(c.output_dir, std::path::PathBuf::from("elsewhere"));

    let bad = c.apply(&Overrides {
        alpha: Some(-1.0),
        ..Overrides::default()
    });
    assert!(matches!(bad, Err(ConfigError::Override(_))));

    let mut inhomo = ExperimentConfig::parse("example = \"peaks7_inhomo\"").unwrap();
    let bad = inhomo.apply(&Overrides {
        method: Some(Method::SsnRealPart),
        ..Overrides::default()
    });
    assert!(bad.is_err());
}
