use std::path::PathBuf;

use nonloc::config::RunConfig;

#[test]
fn presets_survive_a_toml_round_trip() {
    for n in 1..=11 {
        let path =
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../presets/ac{n}.toml"));
        let cfg = RunConfig::load(&path, &[]).unwrap();
        let back = RunConfig::parse(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(cfg, back, "ac{n}");
    }
}

#[test]
fn overrides_replace_nested_values() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets/ac5.toml");
    let cfg = RunConfig::load(
        &path,
        &[
            "study.t_list=[0.02, 0.4]".into(),
            "grid.h_target=0.005".into(),
        ],
    )
    .unwrap();
    assert_eq!(cfg.study.unwrap().t_list, vec![0.02, 0.4]);
    assert_eq!(cfg.grid.h_target, 0.005);
}
