//! Command-line interface: graph export, scenario runs, codecs, live
//! emulators, and log replay.
//!
//! Exit codes: 0 success, 1 runtime or scenario-assertion failure, 2
//! usage error (from argument parsing).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alerts::{load_signatures, parse_alert_log, TrafficEvent};
use crate::bag::prior_propagate;
use crate::codecs::{
    crc32_hex, emotet_open, emotet_seal, zeus_open, zeus_seal, zitmo_decrypt, zitmo_encrypt,
    zitmo_format, zitmo_parse, EmotetKeyPair, EmotetPrivateKey, EmotetPublicKey, ZitMoMessage,
    ZITMO_DEFAULT_KEY,
};
use crate::datalog::export_dot;
use crate::defender::{CostModel, LikelihoodRatios};
use crate::emulators::{
    emotet_client_live, emotet_traffic, http, zeus_bot_run, zeus_bot_run_resumed,
    zeus_client_live, zitmo_client_live, zitmo_client_run, EmotetCnc, EmotetTrafficConfig,
    PayloadProfile, ZeusBotConfig, ZeusCnc, ZitMoClientConfig, ZitMoCnc, ZitMoLocalEvent,
};

use super::report::check_expectations;
use super::runner::{compile_model, replay_alerts, replay_events, run_scenario};
use super::scenario::load_scenario;

#[derive(Parser)]
#[command(
    name = "irsim",
    version,
    about = "Deterministic intrusion-response simulator with benign C2 traffic emulators"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a topology into tuples, the attack graph, and prior beliefs
    Graph(GraphArgs),
    /// Run a scenario and write its machine-readable report
    Run(RunArgs),
    /// Wire-format codecs (stdin -> stdout)
    Codec {
        #[command(subcommand)]
        codec: CodecCmd,
    },
    /// Protocol emulators: live HTTP client/server pairs or scripted event lists
    Emulate {
        #[command(subcommand)]
        family: EmulateCmd,
    },
    /// Re-drive the defender from a recorded alert or traffic-event log
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Topology document (JSON)
    #[arg(long)]
    topology: PathBuf,
    /// Datalog rule file replacing the built-in interaction rules
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Write the attack graph as GraphViz DOT here (stdout if omitted)
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the generated Datalog tuples here
    #[arg(long)]
    tuples: Option<PathBuf>,
    /// Write the prior belief table here
    #[arg(long)]
    beliefs: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario document (JSON)
    #[arg(long)]
    scenario: PathBuf,
    /// Write the full report (JSON) here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write deployed rule lines to a shell-sourceable file
    #[arg(long)]
    emit_rules: Option<PathBuf>,
    /// Run this command template per deployed rule line; `{}` is replaced
    /// with the line. Off by default, for lab use.
    #[arg(long)]
    exec: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SealDirection {
    Seal,
    Open,
}

#[derive(Clone, Copy, ValueEnum)]
enum ZitmoOp {
    Enc,
    Dec,
    Fmt,
    Parse,
}

#[derive(Subcommand)]
enum CodecCmd {
    /// RC4-over-chained-XOR sealing (binary stdin/stdout)
    Zeus {
        #[arg(value_enum)]
        direction: SealDirection,
        /// Botnet RC4 key
        #[arg(long)]
        key: String,
        /// Hex-encode output (seal) / hex-decode input (open)
        #[arg(long)]
        hex: bool,
    },
    /// AES-128-ECB + Base64 transport and message text formatting
    Zitmo {
        #[arg(value_enum)]
        op: ZitmoOp,
        /// Pre-shared 16-byte key
        #[arg(long, default_value = ZITMO_DEFAULT_KEY)]
        key: String,
    },
    /// Hybrid RSA + AES cookie envelope
    Emotet {
        #[command(subcommand)]
        op: EmotetOp,
    },
    /// CRC-32 of stdin, 8 uppercase hex digits
    Crc32,
}

#[derive(Subcommand)]
enum EmotetOp {
    /// Generate a deterministic keypair
    Keygen {
        #[arg(long, default_value_t = 2048)]
        bits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Public key output path (JSON)
        #[arg(long)]
        public: PathBuf,
        /// Private key output path (JSON)
        #[arg(long)]
        private: PathBuf,
    },
    /// Seal stdin into a cookie value
    Seal {
        #[arg(long)]
        public: PathBuf,
        /// 16-byte session key, 32 hex digits
        #[arg(long)]
        session_key: String,
    },
    /// Open a cookie value from stdin
    Open {
        #[arg(long)]
        private: PathBuf,
    },
}

#[derive(Subcommand)]
enum EmulateCmd {
    Zeus {
        #[command(subcommand)]
        mode: ZeusMode,
    },
    Zitmo {
        #[command(subcommand)]
        mode: ZitmoMode,
    },
    Emotet {
        #[command(subcommand)]
        mode: EmotetMode,
    },
}

#[derive(Args)]
struct BindArgs {
    /// Listen address (loopback only unless overridden)
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Allow binding a non-loopback address
    #[arg(long = "i-know-this-is-a-lab")]
    i_know_this_is_a_lab: bool,
}

#[derive(Subcommand)]
enum ZeusMode {
    /// C&C side: serves the sealed config, accepts sealed reports
    Serve {
        #[command(flatten)]
        bind: BindArgs,
        #[arg(long)]
        key: String,
        #[arg(long, default_value = "/cfg.bin")]
        cfg_uri: String,
        #[arg(long, default_value = "/gate.php")]
        gate_uri: String,
    },
    /// Bot side: config fetch plus periodic reports
    Client {
        /// C&C address (host:port) for live mode; omit for --scripted
        #[arg(long)]
        cnc: Option<String>,
        #[arg(long)]
        key: String,
        #[arg(long, default_value_t = 10)]
        ticks: u64,
        /// Wall-clock milliseconds per tick in live mode
        #[arg(long, default_value_t = 0)]
        tick_ms: u64,
        /// Resume an existing infection (immediate report on tick 1)
        #[arg(long)]
        resumed: bool,
        #[arg(long, default_value = "192.168.0.17")]
        bot_ip: String,
        #[arg(long, default_value = "172.16.4.67")]
        cnc_ip: String,
        #[arg(long, default_value_t = 25)]
        interval: u64,
        /// Emit the scripted event list as JSON lines instead of going live
        #[arg(long)]
        scripted: bool,
        /// Output path for --scripted (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ZitmoMode {
    Serve {
        #[command(flatten)]
        bind: BindArgs,
        #[arg(long, default_value = ZITMO_DEFAULT_KEY)]
        key: String,
        /// Queue a one-shot URL-list update (comma separated)
        #[arg(long)]
        push_urls: Option<String>,
    },
    Client {
        /// C&C address (host:port) for live mode; omit for --scripted
        #[arg(long)]
        cnc: Option<String>,
        #[arg(long, default_value = ZITMO_DEFAULT_KEY)]
        key: String,
        /// Script file: JSON array of local events
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value = "+15555215554")]
        phone: String,
        #[arg(long, default_value = "358240051111110")]
        devid: String,
        #[arg(long, default_value = "http://172.17.0.1:8000/ss/app.php")]
        url: String,
        #[arg(long, default_value_t = 15)]
        interval: u64,
        #[arg(long, default_value_t = 0)]
        tick_ms: u64,
        /// Bank account the victim enters; appends a report to the
        /// default script when no script file is given
        #[arg(long)]
        account: Option<String>,
        #[arg(long)]
        scripted: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Persist settings to this path after URL updates
        #[arg(long)]
        settings: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EmotetMode {
    Serve {
        #[command(flatten)]
        bind: BindArgs,
        /// Epoch private key (JSON)
        #[arg(long)]
        private: PathBuf,
    },
    Client {
        /// C&C address (host:port) for live mode; omit for --scripted
        #[arg(long)]
        cnc: Option<String>,
        /// Epoch public key (JSON)
        #[arg(long)]
        public: PathBuf,
        #[arg(long, default_value_t = 5)]
        ticks: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        tick_ms: u64,
        #[arg(long, default_value_t = 1)]
        interval: u64,
        #[arg(long, default_value = "192.168.0.23")]
        bot_ip: String,
        #[arg(long, default_value = "172.16.4.80")]
        cnc_ip: String,
        #[arg(long, value_enum, default_value_t = ProfileArg::Checkin)]
        profile: ProfileArg,
        #[arg(long)]
        scripted: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Checkin,
    ModuleFetch,
    Exfil,
}

impl From<ProfileArg> for PayloadProfile {
    fn from(value: ProfileArg) -> Self {
        match value {
            ProfileArg::Checkin => PayloadProfile::Checkin,
            ProfileArg::ModuleFetch => PayloadProfile::ModuleFetch,
            ProfileArg::Exfil => PayloadProfile::Exfil,
        }
    }
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// EVE-subset alert log (JSON lines)
    #[arg(long, conflicts_with = "events")]
    alerts: Option<PathBuf>,
    /// Traffic-event log (JSON lines); requires --signatures
    #[arg(long, requires = "signatures")]
    events: Option<PathBuf>,
    #[arg(long)]
    signatures: Option<PathBuf>,
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Cmd::Graph(args) => cmd_graph(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Codec { codec } => cmd_codec(codec),
        Cmd::Emulate { family } => cmd_emulate(family),
        Cmd::Replay(args) => cmd_replay(args),
    }
}

fn read_file(path: &PathBuf) -> Result<String, Box<dyn std::error::Error>> {
    Ok(std::fs::read_to_string(path).map_err(|e| format!("cannot read `{}`: {e}", path.display()))?)
}

fn cmd_graph(args: GraphArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let topology = read_file(&args.topology)?;
    let rules = match &args.rules {
        Some(path) => Some(read_file(path)?),
        None => None,
    };
    let compiled = compile_model(&topology, rules.as_deref())?;
    let dot = export_dot(&compiled.bag.lag);
    match &args.dot {
        Some(path) => std::fs::write(path, &dot)?,
        None => println!("{dot}"),
    }
    if let Some(path) = &args.tuples {
        std::fs::write(path, &compiled.tuples_text)?;
    }
    if let Some(path) = &args.beliefs {
        let priors: BTreeMap<usize, f64> = compiled.bag.leaf_ids().map(|id| (id, 1.0)).collect();
        let belief = prior_propagate(&compiled.bag, &priors);
        std::fs::write(path, belief.table(&compiled.bag))?;
    }
    if !compiled.unreachable_goals.is_empty() {
        eprintln!("warning: unreachable goals: {:?}", compiled.unreachable_goals);
    }
    eprintln!(
        "graph: {} nodes, {} edges, {} goal(s)",
        compiled.bag.lag.nodes.len(),
        compiled.bag.lag.edges.len(),
        compiled.bag.goal_ids().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let scenario = load_scenario(&args.scenario)?;
    let report = run_scenario(&scenario)?;
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json())?;
    }
    if let Some(path) = &args.emit_rules {
        let mut text = String::from("# firewall rules emitted by irsim run\n");
        for line in &report.rules {
            text.push_str(line);
            text.push('\n');
        }
        std::fs::write(path, text)?;
    }
    if let Some(template) = &args.exec {
        for line in &report.rules {
            let command = template.replace("{}", line);
            let status = std::process::Command::new("sh").arg("-c").arg(&command).status()?;
            if !status.success() {
                eprintln!("exec failed ({status}): {command}");
            }
        }
    }

    println!(
        "scenario {}: {} alerts ({} signature, {} informative), verdict={}",
        report.scenario,
        report.alert_total,
        report.signature_sids.values().sum::<usize>(),
        report.informative_total,
        report.verdict
    );
    for rule in &report.rules {
        println!("rule: {rule}");
    }

    if let Some(expect) = &scenario.expect {
        let diffs = check_expectations(&report, expect);
        if diffs.is_empty() {
            println!("expectations: PASS");
        } else {
            for diff in &diffs {
                println!("expectation FAILED: {diff}");
            }
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_stdin_bytes() -> Result<Vec<u8>, std::io::Error> {
    let mut buf = Vec::new();
    std::io::stdin().read_to_end(&mut buf)?;
    Ok(buf)
}

fn read_stdin_text() -> Result<String, std::io::Error> {
    let mut buf = String::new();
    std::io::stdin().read_to_string(&mut buf)?;
    Ok(buf)
}

fn write_stdout(bytes: &[u8]) -> Result<(), std::io::Error> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)?;
    out.flush()
}

fn decode_hex(text: &str) -> Result<Vec<u8>, String> {
    let text: String = text.split_whitespace().collect();
    if !text.len().is_multiple_of(2) {
        return Err("odd hex length".to_string());
    }
    (0..text.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&text[i..i + 2], 16).map_err(|e| e.to_string()))
        .collect()
}

fn encode_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_codec(codec: CodecCmd) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match codec {
        CodecCmd::Zeus { direction, key, hex } => {
            let input = read_stdin_bytes()?;
            match direction {
                SealDirection::Seal => {
                    let sealed = zeus_seal(key.as_bytes(), &input)?;
                    if hex {
                        println!("{}", encode_hex(&sealed));
                    } else {
                        write_stdout(&sealed)?;
                    }
                }
                SealDirection::Open => {
                    let blob = if hex {
                        decode_hex(&String::from_utf8_lossy(&input))?
                    } else {
                        input
                    };
                    write_stdout(&zeus_open(key.as_bytes(), &blob)?)?;
                }
            }
        }
        CodecCmd::Zitmo { op, key } => {
            let input = read_stdin_text()?;
            match op {
                ZitmoOp::Enc => println!("{}", zitmo_encrypt(&key, input.trim_end_matches('\n'))?),
                ZitmoOp::Dec => println!("{}", zitmo_decrypt(&key, input.trim())?),
                ZitmoOp::Fmt => {
                    let msg: ZitMoMessage = serde_json::from_str(&input)?;
                    println!("{}", zitmo_format(&msg));
                }
                ZitmoOp::Parse => {
                    let msg = zitmo_parse(input.trim_end_matches('\n'))?;
                    println!("{}", serde_json::to_string_pretty(&msg)?);
                }
            }
        }
        CodecCmd::Emotet { op } => match op {
            EmotetOp::Keygen {
                bits,
                seed,
                public,
                private,
            } => {
                let keys = EmotetKeyPair::generate(bits, seed)?;
                std::fs::write(&public, keys.public.to_json())?;
                std::fs::write(&private, keys.private.to_json())?;
                eprintln!("wrote {} and {}", public.display(), private.display());
            }
            EmotetOp::Seal {
                public,
                session_key,
            } => {
                let key = EmotetPublicKey::from_json(&read_file(&public)?)?;
                let session = decode_hex(&session_key)?;
                let payload = read_stdin_bytes()?;
                println!("{}", emotet_seal(&key, &session, &payload)?);
            }
            EmotetOp::Open { private } => {
                let key = EmotetPrivateKey::from_json(&read_file(&private)?)?;
                let cookie = read_stdin_text()?;
                write_stdout(&emotet_open(&key, cookie.trim())?)?;
            }
        },
        CodecCmd::Crc32 => {
            let input = read_stdin_bytes()?;
            println!("{}", crc32_hex(&input));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_events(
    events: &[TrafficEvent],
    out: Option<&PathBuf>,
) -> Result<(), Box<dyn std::error::Error>> {
    let mut text = String::new();
    for event in events {
        text.push_str(&serde_json::to_string(event)?);
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

static SERVE_FOREVER: AtomicBool = AtomicBool::new(false);

fn cmd_emulate(family: EmulateCmd) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match family {
        EmulateCmd::Zeus { mode } => match mode {
            ZeusMode::Serve {
                bind,
                key,
                cfg_uri,
                gate_uri,
            } => {
                let listener = http::bind(&bind.bind, bind.i_know_this_is_a_lab)?;
                eprintln!("zeus c&c listening on {}", listener.local_addr()?);
                let mut cnc = ZeusCnc::new(&key, &cfg_uri, &gate_uri);
                http::serve(&listener, &SERVE_FOREVER, move |req| {
                    let response = cnc.handle(&req);
                    eprintln!("{} {} -> {}", req.method, req.uri, response.status);
                    response
                })?;
            }
            ZeusMode::Client {
                cnc,
                key,
                ticks,
                tick_ms,
                resumed,
                bot_ip,
                cnc_ip,
                interval,
                scripted,
                out,
            } => {
                let cfg = ZeusBotConfig {
                    bot_ip: bot_ip.parse()?,
                    cnc_ip: cnc_ip.parse()?,
                    rc4_key: key,
                    cfg_uri: "/cfg.bin".to_string(),
                    gate_uri: "/gate.php".to_string(),
                    ping_interval_ticks: interval,
                    cnc_port: 80,
                };
                if scripted {
                    let events = if resumed {
                        zeus_bot_run_resumed(&cfg, ticks)?
                    } else {
                        zeus_bot_run(&cfg, ticks)?
                    };
                    write_events(&events, out.as_ref())?;
                } else {
                    let addr = cnc.ok_or("--cnc is required unless --scripted")?;
                    for line in zeus_client_live(&cfg, &addr, ticks, tick_ms, resumed)? {
                        println!("{line}");
                    }
                }
            }
        },
        EmulateCmd::Zitmo { mode } => match mode {
            ZitmoMode::Serve {
                bind,
                key,
                push_urls,
            } => {
                let listener = http::bind(&bind.bind, bind.i_know_this_is_a_lab)?;
                eprintln!("zitmo c&c listening on {}", listener.local_addr()?);
                let mut cnc = ZitMoCnc::new(&key);
                if let Some(urls) = push_urls {
                    cnc.queue_url_update(urls.split(',').map(|s| s.trim().to_string()).collect());
                }
                http::serve(&listener, &SERVE_FOREVER, move |req| {
                    let response = cnc.handle(&req);
                    eprintln!("{} {} -> {}", req.method, req.uri, response.status);
                    response
                })?;
            }
            ZitmoMode::Client {
                cnc,
                key,
                script,
                phone,
                devid,
                url,
                interval,
                tick_ms,
                account,
                scripted,
                out,
                settings,
            } => {
                let script_events: Vec<ZitMoLocalEvent> = match script {
                    Some(path) => serde_json::from_str(&read_file(&path)?)?,
                    None => {
                        let mut script = vec![ZitMoLocalEvent::Boot];
                        if let Some(account) = &account {
                            script.push(ZitMoLocalEvent::AccountEntry {
                                account: account.clone(),
                            });
                        }
                        script
                    }
                };
                let cfg = ZitMoClientConfig {
                    phone,
                    devid,
                    key16: key,
                    cnc_urls: vec![url],
                    ping_interval_ticks: interval,
                    account,
                    settings_path: settings
                        .as_ref()
                        .map(|p| p.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "zitmo-settings/cfg.txt".to_string()),
                    client_ip: "10.0.0.2".parse()?,
                    persist_settings: settings.is_some(),
                };
                if scripted {
                    let run = zitmo_client_run(&cfg, &script_events)?;
                    write_events(&run.events, out.as_ref())?;
                } else {
                    let addr = cnc.ok_or("--cnc is required unless --scripted")?;
                    for body in zitmo_client_live(&cfg, &addr, &script_events, tick_ms)? {
                        println!("{body}");
                    }
                }
            }
        },
        EmulateCmd::Emotet { mode } => match mode {
            EmotetMode::Serve { bind, private } => {
                let key = EmotetPrivateKey::from_json(&read_file(&private)?)?;
                let listener = http::bind(&bind.bind, bind.i_know_this_is_a_lab)?;
                eprintln!("emotet c&c listening on {}", listener.local_addr()?);
                let mut cnc = EmotetCnc::new(key);
                http::serve(&listener, &SERVE_FOREVER, move |req| {
                    let response = cnc.handle(&req);
                    if let Some(plain) = cnc.log.last() {
                        eprintln!("checkin: {plain}");
                    }
                    response
                })?;
            }
            EmotetMode::Client {
                cnc,
                public,
                ticks,
                seed,
                tick_ms,
                interval,
                bot_ip,
                cnc_ip,
                profile,
                scripted,
                out,
            } => {
                let key = EmotetPublicKey::from_json(&read_file(&public)?)?;
                let cfg = EmotetTrafficConfig::new(
                    bot_ip.parse()?,
                    cnc_ip.parse()?,
                    key,
                    interval,
                    profile.into(),
                );
                if scripted {
                    let events = emotet_traffic(&cfg, ticks, seed)?;
                    write_events(&events, out.as_ref())?;
                } else {
                    let addr = cnc.ok_or("--cnc is required unless --scripted")?;
                    for line in emotet_client_live(&cfg, &addr, ticks, seed, tick_ms)? {
                        println!("{line}");
                    }
                }
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let topology = read_file(&args.topology)?;
    let rules = match &args.rules {
        Some(path) => Some(read_file(path)?),
        None => None,
    };
    let compiled = compile_model(&topology, rules.as_deref())?;
    let costs = CostModel::default();
    let likelihoods = LikelihoodRatios::default();

    let (decisions, rules) = if let Some(path) = &args.alerts {
        let alerts = parse_alert_log(&read_file(path)?)?;
        replay_alerts(&compiled, alerts, costs, likelihoods)
    } else if let Some(path) = &args.events {
        let signatures_path = args.signatures.as_ref().expect("clap enforces");
        let signatures = load_signatures(&read_file(signatures_path)?)?;
        let events: Vec<TrafficEvent> = read_file(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        for (i, event) in events.iter().enumerate() {
            event
                .validate()
                .map_err(|e| format!("event {i} invalid: {e}"))?;
        }
        replay_events(&compiled, &signatures, events, costs, likelihoods)
    } else {
        return Err("one of --alerts or --events is required".into());
    };

    for decision in &decisions {
        println!("{}", serde_json::to_string(decision)?);
    }
    for rule in &rules {
        println!("rule: {rule}");
    }
    Ok(ExitCode::SUCCESS)
}
