//! Scenario scripts: an ordered list of world operations with logical
//! timestamps and expected outcomes.
//!
//! Line grammar (one step per line, `#` comments):
//!
//! ```text
//! at <seconds> enroll <msisdn> "<display name>" mode=<1|2> validator=<yes|no> expect=<outcome>
//! at <seconds> send mode=<1|2> from=<id> to=<id> msg="<text>" expect=<outcome>
//! at <seconds> revoke <id> reason=<code> expect=<outcome>
//! at <seconds> renew <id> expect=<outcome>
//! at <seconds> query from=<id> target=<id> tag=<1|2> expect=<outcome>
//! at <seconds> fault <drop|corrupt|pass> [offset=<n>] expect=ok
//! ```
//!
//! Timestamps must be non-decreasing; the world clock is set to each
//! step's time before it runs. A run matches when every step's
//! classified outcome equals its `expect` token; the process exit code
//! reports exactly that.

use lpki_core::authorities::ra::normalize_msisdn;
use lpki_core::flows::{Fault, FlowError};
use lpki_core::ocsp::CertStatus;
use lpki_core::repository::subscriber_dn;
use lpki_core::world::World;
use std::fmt::Write as _;

#[derive(Debug)]
pub struct ScriptError {
    pub line: usize,
    pub detail: String,
}

impl std::fmt::Display for ScriptError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "script line {}: {}", self.line, self.detail)
    }
}

impl std::error::Error for ScriptError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Enroll {
        msisdn: String,
        display: String,
        mode: u8,
        validator: bool,
    },
    Send {
        mode: u8,
        from: String,
        to: String,
        msg: Vec<u8>,
    },
    Revoke {
        id: String,
        reason: u8,
    },
    Renew {
        id: String,
    },
    Query {
        from: String,
        target: String,
        tag: String,
    },
    Fault(Fault),
}

#[derive(Clone, Debug)]
pub struct Step {
    pub at: u64,
    pub line: usize,
    pub command: Command,
    pub expect: String,
}

/// Splits a line into whitespace-separated tokens; double quotes group.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut quoted = false;
    for ch in line.chars() {
        match ch {
            '"' => {
                quoted = !quoted;
                if !quoted && current.is_empty() {
                    // An explicitly empty quoted token still counts.
                    tokens.push(String::new());
                }
            }
            c if c.is_whitespace() && !quoted => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if quoted {
        return Err("unterminated quote".into());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    Ok(tokens)
}

fn kv<'a>(tokens: &'a [String], key: &str) -> Option<&'a str> {
    tokens
        .iter()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn require<'a>(tokens: &'a [String], key: &str, line: usize) -> Result<&'a str, ScriptError> {
    kv(tokens, key).ok_or_else(|| ScriptError {
        line,
        detail: format!("missing {key}=..."),
    })
}

pub fn parse_script(text: &str) -> Result<Vec<Step>, ScriptError> {
    let mut steps = Vec::new();
    let mut last_at = 0u64;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens = tokenize(line).map_err(|detail| ScriptError {
            line: line_no,
            detail,
        })?;
        let err = |detail: String| ScriptError {
            line: line_no,
            detail,
        };
        if tokens.len() < 3 || tokens[0] != "at" {
            return Err(err("expected: at <seconds> <command> ...".into()));
        }
        let at: u64 = tokens[1]
            .parse()
            .map_err(|_| err(format!("bad timestamp {:?}", tokens[1])))?;
        if at < last_at {
            return Err(err(format!(
                "timestamps must not decrease ({at} after {last_at})"
            )));
        }
        last_at = at;
        let expect = require(&tokens, "expect", line_no)?.to_string();
        let args = &tokens[3..];
        let command = match tokens[2].as_str() {
            "enroll" => {
                let positional: Vec<&String> =
                    args.iter().filter(|t| !t.contains('=')).collect();
                if positional.len() != 2 {
                    return Err(err(
                        "enroll needs <msisdn> \"<display name>\" and key=value options".into(),
                    ));
                }
                let mode: u8 = require(&tokens, "mode", line_no)?
                    .parse()
                    .map_err(|_| err("mode must be 1 or 2".into()))?;
                if mode != 1 && mode != 2 {
                    return Err(err("mode must be 1 or 2".into()));
                }
                let validator = match require(&tokens, "validator", line_no)? {
                    "yes" => true,
                    "no" => false,
                    other => return Err(err(format!("validator must be yes or no, got {other:?}"))),
                };
                Command::Enroll {
                    msisdn: positional[0].clone(),
                    display: positional[1].clone(),
                    mode,
                    validator,
                }
            }
            "send" => {
                let mode: u8 = require(&tokens, "mode", line_no)?
                    .parse()
                    .map_err(|_| err("mode must be 1 or 2".into()))?;
                Command::Send {
                    mode,
                    from: require(&tokens, "from", line_no)?.to_string(),
                    to: require(&tokens, "to", line_no)?.to_string(),
                    msg: require(&tokens, "msg", line_no)?.as_bytes().to_vec(),
                }
            }
            "revoke" => {
                let positional: Vec<&String> =
                    args.iter().filter(|t| !t.contains('=')).collect();
                if positional.len() != 1 {
                    return Err(err("revoke needs exactly one <id>".into()));
                }
                Command::Revoke {
                    id: positional[0].clone(),
                    reason: require(&tokens, "reason", line_no)?
                        .parse()
                        .map_err(|_| err("reason must be a small integer".into()))?,
                }
            }
            "renew" => {
                let positional: Vec<&String> =
                    args.iter().filter(|t| !t.contains('=')).collect();
                if positional.len() != 1 {
                    return Err(err("renew needs exactly one <id>".into()));
                }
                Command::Renew {
                    id: positional[0].clone(),
                }
            }
            "query" => Command::Query {
                from: require(&tokens, "from", line_no)?.to_string(),
                target: require(&tokens, "target", line_no)?.to_string(),
                tag: require(&tokens, "tag", line_no)?.to_string(),
            },
            "fault" => {
                let kind = args.first().map(String::as_str).unwrap_or("");
                let fault = match kind {
                    "drop" => Fault::DropNext,
                    "pass" => Fault::PassNext,
                    "corrupt" => Fault::CorruptNext {
                        offset: require(&tokens, "offset", line_no)?
                            .parse()
                            .map_err(|_| err("offset must be an integer".into()))?,
                    },
                    other => return Err(err(format!("unknown fault {other:?}"))),
                };
                Command::Fault(fault)
            }
            other => return Err(err(format!("unknown command {other:?}"))),
        };
        steps.push(Step {
            at,
            line: line_no,
            command,
            expect,
        });
    }
    Ok(steps)
}

/// Maps an operation result onto the outcome tokens scripts assert on.
fn classify<T>(result: &Result<T, FlowError>) -> &'static str {
    match result {
        Ok(_) => "ok",
        Err(e) => match e {
            FlowError::AlreadyCertified(_) => "already-certified",
            FlowError::SenderValidationFailed(_) => "sender-validation-failed",
            FlowError::RecipientValidationFailed(_) => "recipient-validation-failed",
            FlowError::DelegatedValidationFailed { .. } => "delegated-validation-failed",
            FlowError::Verification(_) | FlowError::MalformedEnvelope(_) => "verification-failed",
            FlowError::VaSignatureInvalid | FlowError::MalformedReport(_) => "report-invalid",
            FlowError::Transport(_) => "transport-failed",
            FlowError::Refused { .. } => "refused",
            FlowError::UnknownEntity(_) => "unknown-entity",
            FlowError::PeerError { .. } => "not-found",
            _ => "error",
        },
    }
}

fn describe(command: &Command) -> String {
    match command {
        Command::Enroll { msisdn, mode, .. } => format!("enroll {msisdn} mode={mode}"),
        Command::Send { mode, from, to, .. } => format!("send mode={mode} {from} -> {to}"),
        Command::Revoke { id, reason } => format!("revoke {id} reason={reason}"),
        Command::Renew { id } => format!("renew {id}"),
        Command::Query { from, target, tag } => format!("query {from} -> {target} tag={tag}"),
        Command::Fault(fault) => format!("fault {fault:?}"),
    }
}

pub struct RunOutcome {
    /// Deterministic full report: step lines, validator log, transcript.
    pub report: String,
    /// Whether every step matched its expectation.
    pub matched: bool,
    pub steps_run: usize,
}

/// Executes `steps` against `world`. Stops at the first expectation
/// mismatch (the remaining steps do not run); the report always ends
/// with the validator log and the network transcript.
pub fn run(world: &mut World, steps: &[Step]) -> RunOutcome {
    let mut report = String::new();
    let mut matched = true;
    let mut steps_run = 0;
    let _ = writeln!(report, "== steps ==");
    for (i, step) in steps.iter().enumerate() {
        world.clock = step.at;
        let outcome: &'static str = match &step.command {
            Command::Enroll {
                msisdn,
                display,
                mode,
                validator,
            } => classify(&world.enroll(msisdn, display, *mode, *validator)),
            Command::Send {
                mode,
                from,
                to,
                msg,
            } => {
                let result = match mode {
                    1 => world.mode1_send(from, to, msg),
                    _ => world.mode2_send(from, to, msg),
                };
                classify(&result)
            }
            Command::Revoke { id, reason } => {
                let normalized =
                    normalize_msisdn(id).unwrap_or_else(|_| id.clone());
                let serial = world
                    .repository
                    .fetch(&subscriber_dn(&normalized))
                    .map(|cert| cert.serial);
                match serial {
                    None => "unknown-entity",
                    Some(serial) => match world.ca.revoke(serial, world.clock, *reason) {
                        Ok(_) => "ok",
                        Err(_) => "error",
                    },
                }
            }
            Command::Renew { id } => classify(&world.renew(id)),
            Command::Query { from, target, tag } => {
                match world.gateway_fetch(from, target, tag) {
                    Ok((_, Some(token))) => match token.status {
                        CertStatus::Good => "good",
                        CertStatus::Revoked { .. } => "revoked",
                        CertStatus::Unknown => "unknown",
                    },
                    Ok((_, None)) => "ok",
                    Err(FlowError::PeerError { .. }) => "not-found",
                    Err(_) => "error",
                }
            }
            Command::Fault(fault) => {
                world.network.inject_fault(*fault);
                "ok"
            }
        };
        steps_run = i + 1;
        if outcome == step.expect {
            let _ = writeln!(
                report,
                "step {:>2} t={:<6} {} -> {outcome}",
                i + 1,
                step.at,
                describe(&step.command)
            );
        } else {
            let _ = writeln!(
                report,
                "step {:>2} t={:<6} {} -> {outcome} MISMATCH (expected {})",
                i + 1,
                step.at,
                describe(&step.command),
                step.expect
            );
            matched = false;
            break;
        }
    }
    let _ = writeln!(report, "\n== validation authority log ==");
    if world.va.log().is_empty() {
        let _ = writeln!(report, "(empty)");
    }
    for line in world.va.log() {
        let _ = writeln!(report, "{line}");
    }
    let _ = writeln!(report, "\n== network transcript ==");
    if world.network.transcript().is_empty() {
        let _ = writeln!(report, "(no frames)");
    }
    for line in world.network.transcript() {
        let _ = writeln!(report, "{line}");
    }
    let _ = writeln!(
        report,
        "\n== summary ==\nsteps={} matched={}",
        steps_run,
        if matched { "all" } else { "mismatch" }
    );
    RunOutcome {
        report,
        matched,
        steps_run,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpki_core::ec::DomainParameters;
    use lpki_core::world::WorldConfig;

    const SCRIPT: &str = r#"
# two subscribers, one revocation
at 0   enroll +15550101 "Alice Example" mode=2 validator=yes expect=ok
at 0   enroll +15550102 "Bob Example"   mode=1 validator=yes expect=ok
at 10  send mode=1 from=+15550101 to=+15550102 msg="hello" expect=ok
at 20  revoke +15550102 reason=1 expect=ok
at 30  send mode=1 from=+15550101 to=+15550102 msg="again" expect=sender-validation-failed
at 40  query from=+15550101 target=+15550102 tag=2 expect=revoked
"#;

    fn world(seed: u64) -> World {
        let mut config = WorldConfig::new(DomainParameters::toy17());
        config.seed = seed;
        World::new(config).unwrap()
    }

    #[test]
    fn script_parses_into_typed_steps() {
        let steps = parse_script(SCRIPT).unwrap();
        assert_eq!(steps.len(), 6);
        assert_eq!(steps[0].at, 0);
        assert!(matches!(
            &steps[2].command,
            Command::Send { mode: 1, .. }
        ));
        assert_eq!(steps[4].expect, "sender-validation-failed");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_script("at 5 enroll +1 \"X\" mode=3 validator=yes expect=ok").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.detail.contains("mode"));
        let err = parse_script("at 10 send mode=1 from=a to=b msg=\"m\" expect=ok\nat 5 renew a expect=ok").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.detail.contains("decrease"));
    }

    #[test]
    fn matching_script_reports_every_step_and_matches() {
        let steps = parse_script(SCRIPT).unwrap();
        let mut w = world(3);
        let outcome = run(&mut w, &steps);
        assert!(outcome.matched, "report:\n{}", outcome.report);
        assert_eq!(outcome.steps_run, 6);
        assert!(outcome.report.contains("== network transcript =="));
    }

    #[test]
    fn first_mismatch_stops_the_run() {
        let edited = SCRIPT.replace("expect=sender-validation-failed", "expect=ok");
        let steps = parse_script(&edited).unwrap();
        let mut w = world(3);
        let outcome = run(&mut w, &steps);
        assert!(!outcome.matched);
        assert_eq!(outcome.steps_run, 5, "stops at the mismatching step");
        assert!(outcome.report.contains("MISMATCH"));
    }

    #[test]
    fn identical_seed_and_script_give_identical_reports() {
        let steps = parse_script(SCRIPT).unwrap();
        let mut w1 = world(9);
        let mut w2 = world(9);
        let r1 = run(&mut w1, &steps);
        let r2 = run(&mut w2, &steps);
        assert_eq!(r1.report, r2.report);
        // Key material differs across seeds even though the report, which
        // never prints key bytes, stays byte-stable.
        let mut w3 = world(10);
        run(&mut w3, &steps);
        assert_ne!(
            w1.entity("+15550101").unwrap().certificate.subject_pk,
            w3.entity("+15550101").unwrap().certificate.subject_pk
        );
    }
}
