// sim: command-line front end for the multi-GPU coherence simulator.
//
//   sim run   --config sm.cfg --xtreme 1 --size 192K --out runs/x1
//   sim sweep --config sm.cfg --xtreme 3 --size 3M --out x3.csv
//   sim check --records run.tsv --memory run.mem
//   sim gen   --random --seed 7 --out r.trace
//
// Exit codes: 0 clean, 2 checker violation, 3 config/input error, 4 livelock
// cap, 1 internal error.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgsim/simulator.hpp"

namespace {

using namespace mgsim;

constexpr int kExitViolation = 2;
constexpr int kExitConfig = 3;
constexpr int kExitLivelock = 4;

// Above this many ops a run skips recording unless --check is given; records
// cost ~100 B per op.
constexpr std::uint64_t kAutoCheckLimit = 4'000'000;

struct WorkloadArgs {
  std::string trace;
  int xtreme = 0;
  std::string size = "192K";
  std::uint32_t repeats = 10;
  std::string stream;
  bool random = false;
  std::uint64_t seed = 1;
  std::uint64_t ops = 200;
  std::uint32_t addrs = 8;
  double write_ratio = 0.3;
};

struct ConfigArgs {
  std::string config;
  std::string protocol;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* app, ConfigArgs& c) {
  app->add_option("--config", c.config, "Configuration file (key=value lines)");
  app->add_option("--protocol", c.protocol, "Override the configured protocol");
  app->add_option("--set", c.sets, "Extra key=value settings applied after the file")->take_all();
}

void add_workload_flags(CLI::App* app, WorkloadArgs& w) {
  app->add_option("--trace", w.trace, "Trace file");
  app->add_option("--xtreme", w.xtreme, "Xtreme variant")->check(CLI::IsMember({1, 2, 3}));
  app->add_option("--size", w.size, "Xtreme vector size, e.g. 192K, 3M");
  app->add_option("--repeats", w.repeats, "Xtreme repeat count");
  app->add_option("--stream", w.stream, "Streaming RMW sweep over this many bytes");
  app->add_flag("--random", w.random, "Seeded random sharing trace");
  app->add_option("--seed", w.seed, "Random seed");
  app->add_option("--ops", w.ops, "Random trace length");
  app->add_option("--addrs", w.addrs, "Random address pool size");
  app->add_option("--write-ratio", w.write_ratio, "Random write fraction");
}

SystemConfig load(const ConfigArgs& c) {
  std::string text;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw ConfigError("cannot open config file '" + c.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  for (const auto& s : c.sets) text += "\n" + s;
  if (!c.protocol.empty()) text += "\nprotocol=" + c.protocol;
  return parse_config(text);
}

std::unique_ptr<Workload> make_workload(const WorkloadArgs& w, const SystemConfig& cfg) {
  const int chosen = (!w.trace.empty()) + (w.xtreme != 0) + (!w.stream.empty()) + (w.random ? 1 : 0);
  if (chosen != 1) throw ConfigError("choose exactly one of --trace, --xtreme, --stream, --random");
  if (!w.trace.empty()) return trace_workload(load_trace(w.trace), cfg.total_cus());
  if (w.xtreme != 0) {
    XtremeSpec s;
    s.variant = static_cast<XtremeVariant>(w.xtreme);
    s.vector_bytes = parse_size(w.size);
    s.repeats = w.repeats;
    s.gpus = cfg.gpus;
    s.cus_per_gpu = cfg.cus_per_gpu;
    return xtreme_workload(s);
  }
  if (!w.stream.empty()) return stream_workload(parse_size(w.stream), cfg.gpus, cfg.cus_per_gpu);
  RandomSpec r;
  r.seed = w.seed;
  r.n_ops = w.ops;
  r.n_addrs = w.addrs;
  r.write_ratio = w.write_ratio;
  r.gpus = cfg.gpus;
  r.cus_per_gpu = cfg.cus_per_gpu;
  return trace_workload(gen_random(r), cfg.total_cus());
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << body;
}

std::string summary(const RunResult& r) {
  std::ostringstream os;
  os << r.stats.protocol << " cycles=" << r.stats.runtime_cycles << " reads=" << r.stats.reads
     << " writes=" << r.stats.writes << " check=" << to_string(r.check) << " violations=" << r.violations.size();
  return os.str();
}

int cmd_run(const ConfigArgs& ca, const WorkloadArgs& wa, const std::string& out, const std::string& event_log,
            const std::string& records_path, const std::string& memory_path, bool force_check, bool monitor) {
  const SystemConfig cfg = load(ca);
  const auto workload = make_workload(wa, cfg);
  SimOptions opts;
  opts.monitor = monitor;
  opts.record = force_check || workload->op_count() <= kAutoCheckLimit;
  if (!opts.record)
    spdlog::warn("{} ops: recording and checking skipped (pass --check to force)", workload->op_count());
  std::ofstream log;
  if (!event_log.empty()) {
    log.open(event_log);
    if (!log) throw ConfigError("cannot write '" + event_log + "'");
    opts.event_log = &log;
  }
  spdlog::info("running {} on {} ({} ops)", to_string(cfg.protocol), workload->id(), workload->op_count());
  const RunResult r = simulate(cfg, *workload, opts);

  if (!out.empty()) {
    write_file(out + ".json", r.stats.to_json() + "\n");
    write_file(out + ".csv", Stats::csv_header() + "\n" + r.stats.csv_row() + "\n");
    if (!r.violations.empty()) write_file(out + ".violations.json", violations_to_json(r.violations) + "\n");
  } else {
    std::cout << r.stats.to_json() << "\n";
  }
  if (!records_path.empty()) {
    std::ofstream f(records_path);
    write_record_log(f, r.records, r.stats.protocol);
  }
  if (!memory_path.empty()) {
    std::ofstream f(memory_path);
    write_memory_dump(f, r.memory);
  }
  std::cerr << summary(r) << "\n";
  if (!r.violations.empty()) {
    if (out.empty()) std::cerr << violations_to_json(r.violations) << "\n";
    return kExitViolation;
  }
  return 0;
}

int cmd_sweep(const ConfigArgs& ca, const WorkloadArgs& wa, std::vector<std::string> protocols,
              const std::string& baseline, const std::string& out, unsigned jobs) {
  const SystemConfig base = load(ca);
  std::vector<SystemConfig> cfgs;
  for (const auto& p : protocols) {
    SystemConfig c = base;
    c.protocol = parse_protocol(p);
    cfgs.push_back(c);
  }
  std::vector<Stats> stats(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  std::vector<std::size_t> violations(cfgs.size(), 0);
  auto one = [&](std::size_t i) {
    try {
      const auto w = make_workload(wa, cfgs[i]);
      SimOptions opts;
      opts.record = w->op_count() <= kAutoCheckLimit;
      const RunResult r = simulate(cfgs[i], *w, opts);
      stats[i] = r.stats;
      violations[i] = r.violations.size();
      spdlog::info("{}", summary(r));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  // Independent engines; each worker owns whole runs.
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::min<std::size_t>(jobs, cfgs.size()); ++j)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < cfgs.size();) one(i);
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::string report = emit_report(stats, baseline);
  std::ostringstream detail;
  detail << Stats::csv_header() << "\n";
  for (const auto& s : stats) detail << s.csv_row() << "\n";
  if (out.empty()) {
    std::cout << report;
  } else {
    write_file(out, report);
    write_file(out + ".detail.csv", detail.str());
  }
  for (auto v : violations)
    if (v != 0) return kExitViolation;
  return 0;
}

int cmd_check(const std::string& records_path, const std::string& memory_path, bool shares) {
  std::ifstream in(records_path);
  if (!in) throw ConfigError("cannot open record log '" + records_path + "'");
  const RecordFile rf = read_record_log(in);
  const Protocol p = parse_protocol(rf.protocol);
  std::vector<Violation> v;
  if (p == Protocol::SmWtHalcone) v = check_logical_serialization(rf.records);
  else if (!shares) v = check_program_order(rf.records);
  if (!memory_path.empty()) {
    std::ifstream mf(memory_path);
    if (!mf) throw ConfigError("cannot open memory dump '" + memory_path + "'");
    auto mm = compare_final_memory(oracle_final_memory(rf.records), read_memory_dump(mf));
    v.insert(v.end(), mm.begin(), mm.end());
  }
  std::cout << violations_to_json(v) << "\n";
  std::cerr << rf.records.size() << " records, " << v.size() << " violations\n";
  return v.empty() ? 0 : kExitViolation;
}

int cmd_gen(const ConfigArgs& ca, const WorkloadArgs& wa, const std::string& out) {
  const SystemConfig cfg = load(ca);
  if (!wa.trace.empty()) throw ConfigError("gen produces traces; --trace is an input");
  const Trace t = materialize(*make_workload(wa, cfg));
  if (out.empty()) emit_trace(std::cout, t);
  else write_file(out, emit_trace_text(t));
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("SIM_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Multi-GPU timestamp coherence simulator"};
  app.require_subcommand(1);

  ConfigArgs ca;
  WorkloadArgs wa;
  std::string out, event_log, records_path, memory_path, baseline = "rdma-wb-nc";
  bool force_check = false, monitor = false, shares = false;
  std::vector<std::string> protocols{"rdma-wb-nc", "sm-wb-nc", "sm-wt-nc", "sm-wt-c-halcone"};
  unsigned jobs = 0;

  auto* run = app.add_subcommand("run", "Simulate one configuration");
  add_config_flags(run, ca);
  add_workload_flags(run, wa);
  run->add_option("--out", out, "Output prefix for <out>.json and <out>.csv (default: JSON on stdout)");
  run->add_option("--event-log", event_log, "Write one line per dispatched event");
  run->add_option("--records", records_path, "Write the record log (TSV)");
  run->add_option("--memory", memory_path, "Write the final memory image");
  run->add_flag("--check", force_check, "Record and check even large runs");
  run->add_flag("--monitor", monitor, "Check runtime invariants online");

  auto* sweep = app.add_subcommand("sweep", "Run several protocols on one workload and compare");
  add_config_flags(sweep, ca);
  add_workload_flags(sweep, wa);
  sweep->add_option("--protocols", protocols, "Protocols to run")->delimiter(',');
  sweep->add_option("--baseline", baseline, "Protocol the report normalizes against");
  sweep->add_option("--out", out, "CSV report path (default: stdout)");
  sweep->add_option("--jobs", jobs, "Concurrent runs (default: hardware threads)");

  auto* check = app.add_subcommand("check", "Check a saved record log");
  check->add_option("--records", records_path, "Record log")->required();
  check->add_option("--memory", memory_path, "Final memory image to compare with the oracle");
  check->add_flag("--shared", shares, "Trace shares data (skip the NC program-order check)");

  auto* gen = app.add_subcommand("gen", "Emit a generated trace");
  add_config_flags(gen, ca);
  add_workload_flags(gen, wa);
  gen->add_option("--out", out, "Trace path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(ca, wa, out, event_log, records_path, memory_path, force_check, monitor);
    if (*sweep) return cmd_sweep(ca, wa, protocols, baseline, out, jobs);
    if (*check) return cmd_check(records_path, memory_path, shares);
    if (*gen) return cmd_gen(ca, wa, out);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const SimulationFault& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const LivelockError& e) {
    spdlog::error("{}", e.what());
    return kExitLivelock;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
  return 0;
}
