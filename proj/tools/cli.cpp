#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "neurotouch/config.hpp"
#include "neurotouch/demo_server.hpp"
#include "neurotouch/demo_session.hpp"
#include "neurotouch/metrics.hpp"
#include "neurotouch/pipeline.hpp"
#include "neurotouch/recording.hpp"
#include "neurotouch/scenario.hpp"

namespace neurotouch::cli {

namespace {

namespace fs = std::filesystem;

// Input file that parsed as something other than a recording.
class InputDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const CLI::Validator kOutputPath(
    [](std::string& p) {
      const fs::path parent = fs::path(p).parent_path();
      if (!parent.empty() && !fs::is_directory(parent)) return "directory does not exist: " + parent.string();
      return std::string();
    },
    "PATH");

std::string config_help() {
  std::ostringstream ss;
  ss << "\nConfiguration keys (config file lines or --set key=value; defaults shown):\n";
  for (const auto& k : config_keys()) ss << "  " << k.key << " = " << k.default_value << "    " << k.help << '\n';
  return ss.str();
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* sub, bool with_seed) {
    sub->add_option("--config", path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override one configuration key, repeatable")
        ->type_name("KEY=VALUE")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    if (with_seed) sub->add_option("--seed", seed, "RANSAC seed, overrides pipeline.seed");
  }

  PipelineConfig load() const {
    PipelineConfig cfg = path.empty() ? PipelineConfig{} : load_config(path);
    for (const auto& s : sets) apply_override(cfg, s);
    if (seed) cfg.seed = *seed;
    try {
      cfg.engine.px_per_mm = cfg.geometry.px_per_mm;
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return cfg;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kOk;
  } catch (const DecodeError& e) {
    err << "error: " << e.what() << '\n';
    return kDecodeError;
  } catch (const InputDecodeError& e) {
    err << "error: " << e.what() << '\n';
    return kDecodeError;
  } catch (const demo::ProtocolError& e) {
    err << "error: " << e.what() << '\n';
    return kDecodeError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-based gesture detection on a simulated marker gel."};
  app.name("neurotouch");
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 1 runtime error, 2 usage error, 3 decode error, 4 config or scenario error.");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a labeled recording from a scenario file");
  std::string scenario_path, sim_out, events_csv;
  std::optional<std::uint64_t> sim_seed;
  simulate->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "recording to write")->required()->check(kOutputPath);
  simulate->add_option("--seed", sim_seed, "noise seed, overrides the scenario's noise_seed");
  simulate->add_option("--events-csv", events_csv, "also export events as t,x,y,p")->check(kOutputPath);

  // run
  auto* run_cmd = app.add_subcommand("run", "run the pipeline over a recording");
  std::string run_in, run_out;
  ConfigArgs run_cfg;
  run_cmd->add_option("--in", run_in, "recording")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run_out, "outputs file, one JSON record per batch")->required()->check(kOutputPath);
  run_cfg.add_to(run_cmd, true);
  run_cmd->footer(config_help());

  // bench
  auto* bench = app.add_subcommand("bench", "measure throughput and per-stage latency");
  std::string bench_in, bench_report;
  ConfigArgs bench_cfg;
  bench->add_option("--in", bench_in, "recording")->required()->check(CLI::ExistingFile);
  bench->add_option("--report", bench_report, "write the JSON report here instead of stdout")->check(kOutputPath);
  bench_cfg.add_to(bench, true);
  bench->footer(config_help());

  // eval
  auto* eval = app.add_subcommand("eval", "score pipeline outputs against recording labels");
  std::string pred_path, labels_path, report_path, tables_path;
  eval->add_option("--pred", pred_path, "outputs file from run")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", labels_path, "recording holding the labels")->required()->check(CLI::ExistingFile);
  eval->add_option("--report", report_path, "JSON report to write")->required()->check(kOutputPath);
  eval->add_option("--tables", tables_path, "CSV plot-data tables to write")->check(kOutputPath);

  // demo-serve
  auto* serve = app.add_subcommand("demo-serve", "serve interactive sessions over WebSocket");
  demo::ServerOptions sopt;
  ConfigArgs serve_cfg;
  std::string replay_path, replay_out;
  serve->add_option("--port", sopt.port, "TCP port, 0 picks a free one")->capture_default_str();
  serve->add_option("--bind", sopt.bind_address, "listen address")->capture_default_str();
  serve->add_option("--threads", sopt.threads, "I/O threads")->capture_default_str()->check(CLI::Range(1, 64));
  serve->add_option("--sigma-px", sopt.demo.sigma_px, "drag kernel spread, px")->capture_default_str();
  serve->add_option("--speed-cap-mm-s", sopt.demo.speed_cap_mm_s, "gel surface speed limit")->capture_default_str();
  serve->add_option("--max-drag-fraction", sopt.demo.max_drag_fraction, "fraction of the fold-free drag limit")
      ->capture_default_str();
  serve->add_option("--noise-rate", sopt.demo.noise_rate, "background events per pixel per second")
      ->capture_default_str();
  serve->add_option("--noise-seed", sopt.demo.noise_seed, "noise seed")->capture_default_str();
  serve->add_option("--marker-stride", sopt.demo.marker_stride, "marker snapshot decimation, 0 omits it")
      ->capture_default_str();
  serve->add_option("--max-backlog", sopt.demo.max_backlog, "queued pushes before a client is dropped")
      ->capture_default_str();
  serve->add_option("--replay", replay_path, "replay an input trace offline instead of listening")
      ->check(CLI::ExistingFile);
  serve->add_option("--out", replay_out, "pushes from --replay, one JSON object per line (default stdout)")
      ->check(kOutputPath);
  serve_cfg.add_to(serve, true);
  serve->footer(config_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsageError;
  }

  if (simulate->parsed()) {
    return guarded(
        [&] {
          Scenario sc = load_scenario(scenario_path);
          if (sim_seed) sc.scene.noise_seed = *sim_seed;
          const Recording rec = generate(sc);
          write_recording(rec, sim_out);
          if (!events_csv.empty()) {
            auto f = open_out(events_csv);
            write_events_csv(rec, f);
          }
          err << "simulate: " << sc.scripts.size() << " scripts, " << rec.events.size() << " events, "
              << rec.frames.size() << " frames, " << rec.labels.size() << " labels\n";
        },
        err);
  }
  if (run_cmd->parsed()) {
    return guarded(
        [&] {
          const PipelineConfig cfg = run_cfg.load();
          const Recording rec = read_recording(run_in);
          auto f = open_out(run_out);
          std::size_t resets = 0;
          const auto batches = run_pipeline(rec, cfg, [&](const PipelineOutput& o) {
            write_output_record(f, o, cfg);
            resets += o.reset ? 1 : 0;
          });
          if (!f) throw std::runtime_error("write failed: " + run_out);
          err << "run: " << batches << " batches, " << resets << " resets\n";
        },
        err);
  }
  if (bench->parsed()) {
    return guarded(
        [&] {
          const PipelineConfig cfg = bench_cfg.load();
          const Recording rec = read_recording(bench_in);
          const BenchReport r = bench_pipeline(rec, cfg);
          if (bench_report.empty()) {
            write_bench_report(out, r);
          } else {
            auto f = open_out(bench_report);
            write_bench_report(f, r);
          }
        },
        err);
  }
  if (eval->parsed()) {
    return guarded(
        [&] {
          std::vector<Prediction> preds;
          try {
            preds = read_predictions(fs::path(pred_path));
          } catch (const std::runtime_error& e) {
            throw InputDecodeError(e.what());
          }
          const Recording rec = read_recording(labels_path);
          const Alignment al = align_labels(preds, rec.labels);
          if (al.skipped) err << "warning: " << al.skipped << " outputs precede the first label and were skipped\n";
          const EvalReport r = evaluate(al, rec.header.geometry.px_per_mm);
          auto f = open_out(report_path);
          write_eval_report(f, r);
          if (!tables_path.empty()) {
            auto t = open_out(tables_path);
            write_eval_tables(t, r);
          }
        },
        err);
  }
  if (serve->parsed()) {
    return guarded(
        [&] {
          sopt.demo.pipeline = serve_cfg.load();
          try {
            sopt.demo.validate();
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
          if (!replay_path.empty()) {
            std::ifstream in(replay_path);
            if (!in) throw std::runtime_error("cannot open " + replay_path);
            const auto trace = demo::read_trace(in);
            const auto result = demo::replay_trace(sopt.demo, trace);
            std::ofstream f;
            if (!replay_out.empty()) f = open_out(replay_out);
            std::ostream& dst = replay_out.empty() ? out : f;
            for (const auto& p : result.pushes) dst << demo::push_json(p) << '\n';
            err << "replay: " << result.pushes.size() << " pushes, max input-to-push " << result.max_input_to_push_ms
                << " ms, mean batch " << result.mean_batch_ms << " ms\n";
            return;
          }
          sopt.handle_signals = true;
          demo::DemoServer server(sopt);
          err << "demo-serve: listening on ws://" << sopt.bind_address << ':' << server.port() << "/\n";
          server.run();
        },
        err);
  }
  return kUsageError;
}

}  // namespace neurotouch::cli
