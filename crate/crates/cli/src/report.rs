//! JSON report assembly. Keys are sorted and numbers use the shortest
//! round-trip representation, so equal inputs give equal bytes.

use privecon_core::Distribution;
use privecon_core::economy::{EconomyAudit, EquilibriumCertificate, EquilibriumSearch, TypeCheck, Verification};
use privecon_core::game::{GameAudit, NashReport, NashSearch, StrategyProfile};
use serde_json::{Map, Value, json};

use crate::instance::{Model, profile_to_file};

pub fn distribution(d: &Distribution) -> Value {
    Value::Object(
        d.support()
            .iter()
            .zip(d.mass())
            .map(|(a, &m)| (a.clone(), json!(m)))
            .collect(),
    )
}

/// `{player: {action: mass}}`.
pub fn lambdas(model: &Model, ls: &[Distribution]) -> Value {
    Value::Object(
        model
            .player_names()
            .into_iter()
            .zip(ls)
            .map(|(name, d)| (name, distribution(d)))
            .collect(),
    )
}

/// `{player: {type: action}}`.
pub fn profile(model: &Model, p: &StrategyProfile) -> Value {
    serde_json::to_value(profile_to_file(p, model).strategies).expect("serializable")
}

fn per_player<T>(model: &Model, items: &[T], f: impl Fn(usize, &T) -> Value) -> Value {
    Value::Object(
        model
            .player_names()
            .into_iter()
            .zip(items.iter().enumerate())
            .map(|(name, (i, x))| (name, f(i, x)))
            .collect(),
    )
}

fn checks(model: &Model, cs: &[Vec<TypeCheck>]) -> Value {
    per_player(model, cs, |i, row| {
        let types = model.type_atoms(i);
        let actions = model.actions(i);
        Value::Object(
            row.iter()
                .map(|c| {
                    (
                        types[c.type_index].clone(),
                        json!({
                            "action": actions[c.action],
                            "weight": c.weight,
                            "in_alpha": c.in_alpha,
                            "preferred_feasible_empty": c.intersection_empty,
                            "passes": c.passes(),
                        }),
                    )
                })
                .collect(),
        )
    })
}

pub fn certificate(model: &Model, c: &EquilibriumCertificate) -> Value {
    json!({
        "profile": profile(model, &c.profile),
        "lambdas": lambdas(model, &c.lambdas),
        "checks": checks(model, &c.checks),
    })
}

pub fn equilibrium_search(model: &Model, s: &EquilibriumSearch) -> Value {
    json!({
        "found": s.certificate.is_some(),
        "certificate": s.certificate.as_ref().map_or(json!("none"), |c| certificate(model, c)),
        "strategy": s.strategy,
        "complete": s.complete,
        "candidates_examined": s.candidates_examined,
        "fixed_points": s.fixed_points.iter().map(|fp| json!({
            "lambdas": lambdas(model, &fp.lambdas),
            "certified": fp.certified,
        })).collect::<Vec<_>>(),
    })
}

pub fn verification(model: &Model, v: &Verification) -> Value {
    let names = model.player_names();
    json!({
        "verdict": if v.is_valid() { "valid" } else { "invalid" },
        "violations": v.violations.iter().map(|x| json!({
            "player": names[x.player],
            "type": model.type_atoms(x.player)[x.type_index],
            "condition": x.condition,
        })).collect::<Vec<_>>(),
        "lambdas": lambdas(model, &v.lambdas),
        "checks": checks(model, &v.checks),
    })
}

pub fn nash_report(model: &Model, r: &NashReport) -> Value {
    let names = model.player_names();
    json!({
        "verdict": if r.is_nash { "nash" } else { "not_nash" },
        "max_gain": r.max_gain,
        "gains": per_player(model, &r.gains, |_, g| json!(g)),
        "worst_player": r.worst_player.map(|i| names[i].clone()),
        "complete": r.complete,
    })
}

pub fn nash_search(model: &Model, s: &NashSearch, report: Option<&NashReport>) -> Value {
    json!({
        "found": s.profile.is_some(),
        "profile": s.profile.as_ref().map_or(json!("none"), |p| profile(model, p)),
        "strategy": s.strategy,
        "complete": s.complete,
        "profiles_checked": s.profiles_checked,
        "stop": s.stop,
        "nash": report.map(|r| nash_report(model, r)),
    })
}

pub fn game_audit(model: &Model, a: &GameAudit) -> Value {
    json!({
        "T2a": {
            "holds": a.atomless,
            "atomicity": per_player(model, &a.players, |_, p| json!(p.atomicity)),
        },
        "T2b": {
            "holds": a.independent,
            "independence": per_player(model, &a.players, |_, p| serde_json::to_value(p.independence).expect("serializable")),
        },
        "T2c": {
            "holds": a.continuous,
            "note": "finite action sets: payoffs are continuous in actions",
        },
        "T2d": {
            "holds": a.uniformly_integrable,
            "bound": per_player(model, &a.players, |_, p| json!({
                "mean": p.integrable_bound_mean,
                "max": p.integrable_bound_max,
            })),
        },
    })
}

pub fn economy_audit(model: &Model, a: &EconomyAudit) -> Value {
    let names = model.player_names();
    let mut out = Map::new();
    out.insert("grid".into(), serde_json::to_value(&a.grid).expect("serializable"));
    out.insert(
        "T3a".into(),
        json!({
            "holds": a.atomless.holds,
            "atomicity": per_player(model, &a.atomless.atomicity, |_, x| json!(x)),
        }),
    );
    out.insert("T3b".into(), serde_json::to_value(&a.constraint).expect("serializable"));
    out.insert("T3c".into(), serde_json::to_value(&a.alpha).expect("serializable"));
    out.insert("T3d".into(), serde_json::to_value(&a.preference).expect("serializable"));
    let e = &a.exclusion;
    out.insert(
        "T3e".into(),
        json!({
            "holds": e.holds,
            "against": e.against,
            "profiles_scanned": e.profiles_scanned,
            "complete": e.complete,
            "violations": e.violations,
            "examples": e.examples.iter().map(|x| json!({
                "profile_index": x.profile_index,
                "player": names[x.player],
                "type": model.type_atoms(x.player)[x.type_index],
                "action": model.actions(x.player)[x.action],
            })).collect::<Vec<_>>(),
        }),
    );
    out.insert(
        "T3f".into(),
        json!({
            "holds": a.openness.holds,
            "members": per_player(model, &a.openness.members, |_, x| json!(x)),
            "open_members": per_player(model, &a.openness.open_members, |_, x| json!(x)),
        }),
    );
    if let Some(s) = &a.selector {
        out.insert("T4d".into(), serde_json::to_value(s).expect("serializable"));
    }
    Value::Object(out)
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
