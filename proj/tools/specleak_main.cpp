// Copyright 2026 The specleak Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// specleak command line: train models, run sessions, and run the attacks.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "specleak/error.hpp"
#include "specleak/harness.hpp"

namespace fs = std::filesystem;
using namespace specleak;
using harness::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string data_dir;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> temperature;
  std::optional<std::string> engine;
  std::optional<std::string> mitigation;
  std::optional<unsigned> workers;
  bool print_config = false;

  void attach(CLI::App* app, bool with_out = true) {
    app->add_option("-c,--config", config_path, "JSON config file (defaults fill missing keys)")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override a config key, e.g. --set fingerprint.tpq=10");
    app->add_option("--data-dir", data_dir, "Directory for relative data paths");
    if (with_out) app->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
    app->add_option("--seed", seed, "sampler.seed");
    app->add_option("--temperature", temperature, "sampler.temperature");
    app->add_option("--engine", engine, "engine.type (autoregressive, lookahead, retrieval, draft_pair)");
    app->add_option("--mitigation", mitigation, "e.g. none, constant:1024, variable:6, aggregate:3+variable:6");
    app->add_option("--workers", workers, "Worker threads for session collection and tree training");
    app->add_flag("--print-config", print_config, "Print the effective config and exit");
  }

  json resolve() const {
    json cfg = config_path.empty() ? harness::default_config() : harness::load_config_file(config_path);
    if (!data_dir.empty()) cfg["data_dir"] = data_dir;
    if (seed) cfg["sampler"]["seed"] = *seed;
    if (temperature) cfg["sampler"]["temperature"] = *temperature;
    if (engine) cfg["engine"]["type"] = *engine;
    if (mitigation) cfg["mitigation"] = *mitigation;
    if (workers) cfg["workers"] = *workers;
    for (const auto& o : overrides) harness::apply_override(cfg, o);
    harness::validate_config(cfg);
    return cfg;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

void emit_report(const json& report, const std::string& out_dir, const std::string& stem) {
  const fs::path dir(out_dir);
  write_file(dir / (stem + ".json"), harness::dump(report));
  const std::string csv = harness::report_csv(report);
  if (!csv.empty()) write_file(dir / (stem + ".csv"), csv);
  std::cout << "wrote " << (dir / (stem + ".json")).string();
  if (!csv.empty()) std::cout << " and " << stem << ".csv";
  std::cout << "\n";
}

void summarize(const json& report, std::ostream& out) {
  const std::string kind = report.at("kind").get<std::string>();
  const json& r = report.at("results");
  out << "[" << kind << "]\n";
  if (kind == "fingerprint") {
    out << "  scenario " << report["config"]["fingerprint"]["scenario"].get<std::string>() << ", " << r["labels"]
        << " labels, mean accuracy " << r["mean_accuracy"].get<double>() << ", mean macro F1 "
        << r["mean_macro_f1"].get<double>() << "\n";
    if (r.contains("grid")) {
      for (const auto& g : r["grid"]) {
        out << "  tpq " << g["tpq"] << " temperature " << g["temperature"] << ": accuracy "
            << g["accuracy"].get<double>() << "\n";
      }
    }
  } else if (kind == "mitigation_sweep") {
    for (const auto& row : r["rows"]) {
      out << "  " << row["policy"].get<std::string>() << ": accuracy " << row["mean_accuracy"].get<double>()
          << ", overhead " << row["mean_overhead"].get<double>() << "x\n";
    }
  } else if (kind == "extraction") {
    for (const auto& [name, s] : r["strategies"].items()) {
      out << "  " << name << ": mean unique " << s["mean_unique"].get<double>() << ", soundness "
          << s["min_soundness"].get<double>() << "\n";
    }
  } else if (kind == "probe_n" || kind == "probe_g") {
    for (const auto& p : r["probes"]) {
      out << "  configured " << p["configured"] << " seed " << p["seed"] << ": recovered "
          << (p["recovered"].is_null() ? std::string("inconclusive") : p["recovered"].dump()) << "\n";
    }
    out << "  all exact: " << (r["all_exact"].get<bool>() ? "yes" : "no") << "\n";
  }
}

SessionConfig session_from(const harness::Bench& b, const std::string& prompt) {
  SessionConfig s;
  s.model = b.model.get();
  s.engine = b.engine;
  s.prompt = tokenize(prompt, b.model->vocab(), UnknownWords::kMapToUnk);
  s.max_tokens = b.max_tokens;
  s.sampler = b.sampler;
  s.policy = b.policy;
  s.policy.seed = derive_seed(b.sampler.seed, 0x9AD);
  s.separator = b.separator;
  return s;
}

json session_json(const SessionLog& log, const Vocab& vocab) {
  json iters = json::array();
  for (const auto& it : log.iterations) {
    iters.push_back({{"tokens", it.tokens.size()}, {"accepted", it.speculated_accepted}, {"text", detokenize(it.tokens, vocab)}});
  }
  json packets = json::array();
  for (const auto& p : log.packets) {
    packets.push_back({{"seq", p.seq}, {"size", p.size()}, {"payload", p.payload_len}, {"pad", p.pad_len}, {"sent_at", p.sent_at}});
  }
  return {{"engine", log.engine}, {"policy", log.policy}, {"iterations", iters}, {"packets", packets},
          {"transcript", log.transcript}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding side-channel testbed"};
  app.require_subcommand(1);

  // train-lm
  auto* train = app.add_subcommand("train-lm", "Train an n-gram model and save it");
  std::string corpus, model_out;
  int order = 3;
  double alpha = 1e-6;
  train->add_option("--corpus", corpus, "One document per line")->required();
  train->add_option("--order", order, "Model order (context = order - 1)")->capture_default_str();
  train->add_option("--alpha", alpha, "Additive smoothing constant")->capture_default_str();
  train->add_option("-o,--out", model_out, "Model file to write")->required();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run one session; print it, or stream it over TCP");
  CommonOptions serve_opts;
  serve_opts.attach(serve_cmd, false);
  std::string prompt, host = "127.0.0.1";
  int port = -1;
  serve_cmd->add_option("--prompt", prompt, "Prompt text")->required();
  serve_cmd->add_option("--port", port, "Listen on this port (0 = ephemeral) and stream to one client");
  serve_cmd->add_option("--host", host, "Listen address")->capture_default_str();

  // capture
  auto* capture_cmd = app.add_subcommand("capture", "Record traces as the network observer sees them");
  CommonOptions capture_opts;
  capture_opts.attach(capture_cmd, false);
  std::string capture_out, prompts_file, label = "0";
  std::size_t reps = 1;
  capture_cmd->add_option("--host", host, "Server address for TCP capture")->capture_default_str();
  capture_cmd->add_option("--port", port, "Connect to a running 'serve --port'");
  capture_cmd->add_option("--label", label, "Trace label for TCP capture")->capture_default_str();
  capture_cmd->add_option("--prompts", prompts_file, "In-process capture: prompt file (label = line index)");
  capture_cmd->add_option("--reps", reps, "In-process capture: sessions per prompt")->capture_default_str();
  capture_cmd->add_option("-o,--out", capture_out, "CSV file (default stdout)");

  // config-driven subcommands
  CommonOptions fp_opts, ex_opts, pn_opts, pg_opts, ms_opts;
  bool sweep = false, shuffle = false;
  std::string scenario;
  auto* fp = app.add_subcommand("attack-fingerprint", "Profile prompts, then classify fresh traces");
  fp_opts.attach(fp);
  fp->add_flag("--sweep", sweep, "Also run the TPQ x temperature grid");
  fp->add_flag("--shuffle-labels", shuffle, "Control run with permuted training labels");
  fp->add_option("--scenario", scenario, "exact, similar-structure or approximate");
  auto* ex = app.add_subcommand("attack-extract", "Datastore extraction against the retrieval engine");
  ex_opts.attach(ex);
  auto* pn = app.add_subcommand("probe-n", "Recover the lookahead N from token counts");
  pn_opts.attach(pn);
  auto* pg = app.add_subcommand("probe-g", "Recover the lookahead G from token counts");
  pg_opts.attach(pg);
  auto* ms = app.add_subcommand("mitigate-sweep", "Fingerprinting accuracy and overhead per mitigation");
  ms_opts.attach(ms);

  // report
  auto* report = app.add_subcommand("report", "Summarize, flatten or re-verify report files");
  std::vector<std::string> report_files;
  bool verify = false, as_csv = false;
  report->add_option("files", report_files, "Report JSON files")->required()->check(CLI::ExistingFile);
  report->add_flag("--verify", verify, "Rerun each report from its echoed config and compare byte for byte");
  report->add_flag("--csv", as_csv, "Print the CSV view instead of the summary");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto lines = read_corpus_lines(corpus);
      const NGramModel m = train_ngram_from_lines(lines, order, alpha);
      m.save_file(model_out);
      std::cout << "trained order-" << m.order() << " model: " << m.vocab_size() << " vocab entries, "
                << m.context_count() << " contexts -> " << model_out << "\n";
      return 0;
    }

    if (serve_cmd->parsed()) {
      const json cfg = serve_opts.resolve();
      if (serve_opts.print_config) return std::cout << harness::dump(cfg), 0;
      const auto bench = harness::load_bench(cfg);
      SessionConfig s = session_from(bench, prompt);
      if (port < 0) {
        std::cout << harness::dump(session_json(serve(s), bench.model->vocab()));
        return 0;
      }
      TcpListener listener(static_cast<std::uint16_t>(port), host);
      std::cout << "listening on " << host << ":" << listener.port() << std::endl;
      auto sink = listener.accept();
      s.clock = ClockMode::kWall;
      const SessionLog log = serve(s, sink.get());
      std::cerr << "served " << log.iterations.size() << " iterations in " << log.packets.size() << " packets\n";
      return 0;
    }

    if (capture_cmd->parsed()) {
      const json cfg = capture_opts.resolve();
      if (capture_opts.print_config) return std::cout << harness::dump(cfg), 0;
      std::vector<Trace> traces;
      if (port >= 0) {
        auto tap = tcp_connect(host, static_cast<std::uint16_t>(port));
        Trace t = capture(*tap);
        t.id = "tcp-0";
        t.label = label;
        traces.push_back(std::move(t));
      } else {
        const auto bench = harness::load_bench(cfg);
        const std::string file = prompts_file.empty()
                                     ? harness::data_path(cfg, cfg["fingerprint"]["prompts"].get<std::string>())
                                     : prompts_file;
        const auto prompts = read_corpus_lines(file);
        for (std::size_t i = 0; i < prompts.size(); ++i) {
          for (std::size_t r = 0; r < reps; ++r) {
            SessionConfig s = session_from(bench, prompts[i]);
            s.sampler.seed = derive_seed(bench.sampler.seed, i, r);
            s.policy.seed = derive_seed(s.sampler.seed, 0x9AD);
            QueueChannel channel;
            serve(s, &channel);
            Trace t = capture(channel);
            t.id = std::to_string(i) + "-" + std::to_string(r);
            t.label = std::to_string(i);
            traces.push_back(std::move(t));
          }
        }
      }
      if (capture_out.empty()) {
        write_traces_csv(std::cout, traces);
      } else {
        write_traces_csv_file(capture_out, traces);
      }
      for (const auto& t : traces) {
        if (!t.complete) std::cerr << "warning: trace " << t.id << " ended inside a packet\n";
      }
      return 0;
    }

    struct Job {
      CLI::App* cmd;
      CommonOptions* opts;
      const char* kind;
    };
    for (const Job& job : {Job{fp, &fp_opts, "fingerprint"}, Job{ex, &ex_opts, "extraction"}, Job{pn, &pn_opts, "probe_n"},
                           Job{pg, &pg_opts, "probe_g"}, Job{ms, &ms_opts, "mitigation_sweep"}}) {
      if (!job.cmd->parsed()) continue;
      json cfg = job.opts->resolve();
      if (job.cmd == fp) {
        if (sweep) cfg["fingerprint"]["sweep"]["enabled"] = true;
        if (shuffle) cfg["fingerprint"]["shuffle_labels"] = true;
        if (!scenario.empty()) cfg["fingerprint"]["scenario"] = scenario;
        harness::validate_config(cfg);
      }
      if (job.opts->print_config) return std::cout << harness::dump(cfg), 0;
      const json rep = harness::run_report(job.kind, cfg);
      summarize(rep, std::cout);
      emit_report(rep, job.opts->out_dir, job.kind);
      return 0;
    }

    if (report->parsed()) {
      int status = 0;
      for (const auto& file : report_files) {
        std::ifstream in(file);
        json rep;
        try {
          rep = json::parse(in);
        } catch (const json::parse_error& e) {
          throw ConfigError("'" + file + "' is not valid JSON: " + e.what());
        }
        if (!rep.contains("kind") || !rep.contains("config") || !rep.contains("results")) {
          throw ConfigError("'" + file + "' is not a specleak report");
        }
        if (verify) {
          const json cfg = harness::merge_config(harness::default_config(), rep["config"]);
          const json again = harness::run_report(rep["kind"].get<std::string>(), cfg);
          const bool same = harness::dump(again) == harness::dump(rep);
          std::cout << file << ": " << (same ? "reproduced" : "DIFFERS") << "\n";
          if (!same) status = 3;
        } else if (as_csv) {
          std::cout << harness::report_csv(rep);
        } else {
          summarize(rep, std::cout);
        }
      }
      return status;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
