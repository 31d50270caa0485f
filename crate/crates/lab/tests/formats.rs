use fecsim::config::Settings;
use fecsim::report::{write_metrics, write_summary, SummaryRow, METRICS_HEADER, SUMMARY_HEADER};
use fecsim::trace_csv::{read_trace, write_trace, TRACE_HEADER};
use fecsim_core::metrics::compute_metrics;
use fecsim_core::netsim::run;
use fecsim_core::scenario::*;

fn trace_bytes(s: &ScenarioConfig) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&run(s), &mut out).unwrap();
    out
}

#[test]
fn trace_file_round_trips() {
    for rel in ["sliding", "block", "arq", "none"] {
        let mut settings = Settings::parse("plr = 0.05\n[channel.forward]\np = 0.05\n").unwrap();
        settings.set("reliability.kind", rel).unwrap();
        settings.set("duration", "3").unwrap();
        settings.set("rate.mode", "tfrc").unwrap();
        let (s, _) = settings.scenario().unwrap();
        let t = run(&s);
        let mut bytes = Vec::new();
        write_trace(&t, &mut bytes).unwrap();
        let (records, mode) = read_trace(bytes.as_slice()).unwrap();
        assert_eq!(records, t.records, "{rel}");
        assert_eq!(mode, t.mode);
    }
}

#[test]
fn trace_files_are_byte_identical_across_runs() {
    let mut s = scenario_foreman_proxy().with_seed(42);
    s.channel_forward.model = LossModel::gilbert_elliott_default();
    s.rate.mode = RateMode::Tfrc;
    assert_eq!(trace_bytes(&s), trace_bytes(&s));
    assert_ne!(trace_bytes(&s), trace_bytes(&s.clone().with_seed(43)));
}

#[test]
fn reader_rejects_malformed_files() {
    assert!(read_trace("a,b\n".as_bytes()).is_err());
    let header = TRACE_HEADER.join(",");
    for row in [
        "x,fwd,src_tx,0,10,,,m",
        "0.1,sideways,src_tx,0,10,,,m",
        "0.1,fwd,src_fly,0,10,,,m",
        "0.1,fwd,src_tx,-1,10,,,m",
        "0.1,fwd,src_tx,0,10,,1.2.3,m",
    ] {
        assert!(read_trace(format!("{header}\n{row}\n").as_bytes()).is_err(), "{row}");
    }
    let (r, mode) = read_trace(format!("{header}\n").as_bytes()).unwrap();
    assert!(r.is_empty() && mode.is_empty());
}

#[test]
fn summary_and_metrics_headers() {
    let s = scenario_foreman_proxy();
    let m = compute_metrics(&run(&s), s.deadline, false).unwrap();
    let mut out = Vec::new();
    write_metrics(&m, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), METRICS_HEADER.join(","));
    let mut out = Vec::new();
    write_summary(
        &[SummaryRow {
            axis_value: "0.01".into(),
            rep: 0,
            metrics: m,
        }],
        &mut out,
    )
    .unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis_value,rep,eventual_ratio,deadline_ratio,rec_p50_s,rec_p95_s,rec_p99_s,rec_max_s,goodput_bps,max_queue_delay_s,overhead"
    );
    assert_eq!(SUMMARY_HEADER.len(), 11);
    assert!(lines.next().unwrap().starts_with("0.01,0,1,"));
}

#[test]
fn lossless_run_has_empty_quantile_fields() {
    let mut s = scenario_foreman_proxy();
    s.channel_forward.model = LossModel::Bernoulli { p: 0.0 };
    let m = compute_metrics(&run(&s), s.deadline, false).unwrap();
    let mut out = Vec::new();
    write_metrics(&m, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("1,1,,,,,"), "{text}");
}
