use alloyfreeze::config::*;

fn field_of(err: ConfigError) -> (String, String) {
    match err {
        ConfigError::Invalid { field, reason } => (field, reason),
        other => panic!("expected a field error, got {other}"),
    }
}

#[test]
fn minimal_document_fills_documented_defaults() {
    let cfg = parse_config("[grid]\nnx = 16\n").unwrap();
    assert_eq!(cfg.grid.nx, 16);
    assert_eq!(cfg.grid.ny, 32);
    assert_eq!(cfg.step, StepSection::default());
    assert_eq!(cfg.repro.eps_schedule, vec![0.1, 0.03, 0.01, 0.003]);
    assert_eq!(cfg.boundary, BoundarySection::default());
}

#[test]
fn excess_solute_cites_compatibility_relation() {
    let (field, reason) = field_of(parse_config("[physical]\nc_total = 0.6\n").unwrap_err());
    assert_eq!(field, "physical.c_total");
    assert!(reason.contains("compatibility relation"), "{reason}");
}

#[test]
fn eutectic_above_fusion_is_rejected() {
    let (field, _) = field_of(parse_config("[phase]\ntheta_e = 1.0\ntheta_f = 0.5\n").unwrap_err());
    assert!(field.starts_with("phase."), "{field}");
}

#[test]
fn unknown_keys_are_errors_with_location() {
    let err = parse_config("[grid]\nnx = 16\nnxx = 8\n").unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)));
    let msg = err.to_string();
    assert!(msg.contains("nxx") && msg.contains("line 3"), "{msg}");

    let err = parse_config("[boundary.top]\nprofile = { kind = \"constant\", valu = 1.0 }\n")
        .unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    assert!(parse_config("sed = 3\n").is_err());
}

#[test]
fn unknown_profile_kind_is_rejected() {
    assert!(parse_config("[boundary.top]\nprofile = { kind = \"cubic\", value = 1.0 }\n").is_err());
}

#[test]
fn wall_table_without_modulation_is_steady() {
    let cfg =
        parse_config("[boundary.top]\nprofile = { kind = \"constant\", value = 0.7 }\n").unwrap();
    assert_eq!(cfg.boundary.top.modulation, ModulationSpec::Steady);
    assert_eq!(cfg.boundary.bottom, BoundarySection::default().bottom);
}

#[test]
fn period_must_be_compatible_with_modulation() {
    let (field, _) = field_of(parse_config("[repro]\nperiod = 0.75\n").unwrap_err());
    assert_eq!(field, "repro.period");
    assert!(parse_config("[repro]\nperiod = 2.0\n").is_ok());
}

#[test]
fn tabulated_profile_is_validated() {
    let ok =
        "[boundary.top]\nprofile = { kind = \"tabulated\", x = [0.0, 1.0], values = [0.8, 0.9] }\n";
    assert!(parse_config(ok).is_ok());
    let bad =
        "[boundary.top]\nprofile = { kind = \"tabulated\", x = [1.0, 0.0], values = [0.8, 0.9] }\n";
    let (field, _) = field_of(parse_config(bad).unwrap_err());
    assert!(field.starts_with("boundary."), "{field}");
}

#[test]
fn snapshot_initial_state_needs_a_path() {
    let (field, _) = field_of(parse_config("[initial]\nkind = \"snapshot\"\n").unwrap_err());
    assert_eq!(field, "initial.path");
}

#[test]
fn step_and_repro_invariants_are_rechecked() {
    assert_eq!(
        field_of(parse_config("[step]\ndt = -1.0\n").unwrap_err()).0,
        "step.dt"
    );
    assert_eq!(
        field_of(parse_config("[repro]\neps_schedule = [0.01, 0.1]\n").unwrap_err()).0,
        "repro.eps_schedule"
    );
    assert_eq!(
        field_of(parse_config("[grid]\nnx = 2\n").unwrap_err()).0,
        "grid.nx"
    );
}

#[test]
fn serialized_config_parses_back_identically() {
    let mut cfg = RunConfig {
        seed: 42,
        ..RunConfig::default()
    };
    cfg.grid.lx = 2.0;
    cfg.physical.kappa = 0.123456789012345;
    cfg.boundary.bottom = WallSection {
        profile: ProfileSpec::Tabulated {
            x: vec![0.0, 0.3, 2.0],
            values: vec![0.0, 0.05, 0.02],
        },
        modulation: ModulationSpec::Sinusoidal {
            amplitude: 0.01,
            period: 0.5,
            phase: 1.0,
        },
    };
    cfg.step.momentum_time_coeff = TimeCoeff::Density;
    cfg.repro.homotopy = vec![0.25, 0.5, 1.0];
    cfg.initial.kind = InitialKind::Random;
    cfg.output.format = SnapshotFormat::Binary;
    cfg.output.trajectory = Some("runs/a".into());
    let text = cfg.to_toml().unwrap();
    assert_eq!(parse_config(&text).unwrap(), cfg);
}
