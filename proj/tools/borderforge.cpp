// borderforge command line: scripted runs, batches, offline extraction and the session service.

#include "borderforge/harness.hpp"
#include "borderforge/map_io.hpp"
#include "borderforge/scenario.hpp"
#include "borderforge/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace bf = borderforge;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kUsage = 2;

/// Usage problems detected after CLI parsing (bad files, bad values).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

bf::InteractionMode mode_arg(const std::string& s) {
  try {
    return bf::parse_mode(s);
  } catch (const bf::Error& e) {
    throw UsageError(e.what());
  }
}

bf::Scenario scenario_arg(const std::string& ref) {
  try {
    return bf::resolve_scenario(ref);
  } catch (const bf::ScenarioError& e) {
    throw UsageError("scenario field '" + e.field() + "': " + e.what());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

int run_cmd(const std::string& scenario, const std::string& mode, std::uint64_t seed,
            const fs::path& out, double noise) {
  bf::Scenario sc = scenario_arg(scenario);
  if (noise != 1.0) sc = bf::scale_noise(std::move(sc), noise);
  const bf::RunArtifacts run = bf::run_scenario_detailed(sc, mode_arg(mode), seed);
  bf::write_run(run, out);
  std::cout << bf::to_json(run.report).dump(2) << "\n";
  if (!run.report.success) {
    std::cerr << "run failed: " << run.report.reason << "\n";
    return kRunFailure;
  }
  return kOk;
}

int batch_cmd(std::size_t seeds, const fs::path& out, unsigned threads, double noise) {
  std::vector<bf::Scenario> scenarios = bf::builtin_scenarios();
  if (noise != 1.0)
    for (bf::Scenario& sc : scenarios) sc = bf::scale_noise(std::move(sc), noise);
  std::vector<std::uint64_t> seed_list(seeds);
  std::iota(seed_list.begin(), seed_list.end(), 1);
  const bf::BatchReport report = bf::batch_report(
      scenarios, {bf::InteractionMode::RobotOnly, bf::InteractionMode::NRS}, seed_list, threads);
  fs::create_directories(out);
  write_text(out / "batch.csv", bf::to_csv(report));
  write_text(out / "batch.json", bf::to_json(report).dump(2));
  std::cout << bf::to_csv(report);
  const bool all_ok = std::ranges::all_of(report.runs, [](const auto& r) { return r.success; });
  return all_ok ? kOk : kRunFailure;
}

/// Rows are "x,y" or "x,y,seed"; a header row and blank lines are skipped.
void read_points(const fs::path& path, std::vector<bf::Point2>& border,
                 std::vector<bf::Point2>& seed) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::stringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cols.push_back(c);
    if (n == 1 && !cols.empty() && cols[0].find_first_of("0123456789") == std::string::npos)
      continue;
    if (cols.size() < 2 || cols.size() > 3)
      throw UsageError(path.string() + ":" + std::to_string(n) + ": expected x,y[,border|seed]");
    bf::Point2 p;
    try {
      std::size_t used = 0;
      p.x = std::stod(cols[0], &used);
      p.y = std::stod(cols[1], &used);
    } catch (const std::exception&) {
      throw UsageError(path.string() + ":" + std::to_string(n) + ": not a number");
    }
    std::string purpose = cols.size() == 3 ? cols[2] : "border";
    std::erase_if(purpose, [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (purpose == "seed")
      seed.push_back(p);
    else if (purpose == "border")
      border.push_back(p);
    else
      throw UsageError(path.string() + ":" + std::to_string(n) + ": unknown purpose '" + purpose + "'");
  }
}

int extract_cmd(const fs::path& points, const std::optional<fs::path>& params_file,
                const fs::path& map, const fs::path& out) {
  bf::ExtractionParams params;
  if (params_file) {
    std::ifstream in(*params_file);
    if (!in) throw UsageError("cannot read " + params_file->string());
    try {
      params = bf::params_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(params_file->string() + ": " + e.what());
    } catch (const bf::ScenarioError& e) {
      throw UsageError(params_file->string() + ": " + e.what());
    }
  }
  std::vector<bf::Point2> border;
  std::vector<bf::Point2> seed;
  read_points(points, border, seed);

  const bf::OccupancyGrid prior = [&] {
    try {
      return bf::load_map(map);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }();

  const bf::ExtractionResult result = bf::extract_border_detailed(border, seed, params);
  const bf::OccupancyGrid posterior = bf::integrate_border(prior, result.border);
  bf::save_map(posterior, out);
  const auto& d = result.diagnostics;
  std::cout << nlohmann::json{{"kind", bf::to_string(result.border.kind)},
                              {"chain_points", result.border.chain.size()},
                              {"input_points", d.input_points},
                              {"noise_points", d.noise_points},
                              {"clusters", d.cluster_count},
                              {"border_cluster", d.border_cluster_size},
                              {"thinned_points", d.thinned_points},
                              {"dropped_points", d.dropped_points}}
                   .dump(2)
            << "\n";
  return kOk;
}

bf::Server* g_server = nullptr;

int serve_cmd(const std::string& address, unsigned short port, unsigned threads) {
  bf::SessionManager manager;
  bf::Server server(manager, address, port, threads);
  g_server = &server;
  manager.start_ticker();
  server.start();
  std::cout << "listening on " << address << ":" << server.port() << std::endl;

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  std::thread waiter([&set] {
    int sig = 0;
    sigwait(&set, &sig);
    g_server->stop();
  });
  server.wait();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  manager.stop_ticker();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Block termination signals in every thread; the serve command waits for them explicitly.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  CLI::App app{"Virtual border workbench"};
  app.require_subcommand(1);

  std::string scenario;
  std::string mode = "nrs";
  std::uint64_t seed = 0;
  fs::path out;
  double noise = 1.0;
  auto* run = app.add_subcommand("run", "Replay one scenario with the scripted user");
  run->add_option("--scenario", scenario, "Scenario file or builtin:1..3")->required();
  run->add_option("--mode", mode, "nrs or robot-only");
  run->add_option("--seed", seed, "Noise seed");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--noise", noise, "Noise scale factor")->check(CLI::NonNegativeNumber);

  std::size_t seeds = 20;
  unsigned threads = 0;
  fs::path batch_out;
  double batch_noise = 1.0;
  auto* batch = app.add_subcommand("batch", "All builtin scenarios in both modes over N seeds");
  batch->add_option("--seeds", seeds, "Seeds per scenario and mode")
      ->check(CLI::PositiveNumber);
  batch->add_option("--out", batch_out, "Output directory")->required();
  batch->add_option("--threads", threads, "Worker threads (0 = all cores)");
  batch->add_option("--noise", batch_noise, "Noise scale factor")->check(CLI::NonNegativeNumber);

  fs::path points;
  std::optional<fs::path> params;
  fs::path map;
  fs::path map_out;
  auto* extract = app.add_subcommand("extract", "Extract a border from recorded points into a map");
  extract->add_option("--points", points, "CSV of x,y[,border|seed] in meters")->required();
  extract->add_option("--params", params, "Extraction parameters (JSON)");
  extract->add_option("--map", map, "Prior map (PGM with YAML sidecar, or YAML)")->required();
  extract->add_option("--out", map_out, "Posterior map path")->required();

  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  unsigned serve_threads = 2;
  auto* serve = app.add_subcommand("serve", "Run the session service");
  serve->add_option("--port", port, "TCP port (0 = any)");
  serve->add_option("--address", address, "Bind address");
  serve->add_option("--threads", serve_threads, "I/O threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_cmd(scenario, mode, seed, out, noise);
    if (*batch) return batch_cmd(seeds, batch_out, threads, batch_noise);
    if (*extract) return extract_cmd(points, params, map, map_out);
    if (*serve) return serve_cmd(address, port, serve_threads);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kUsage;
}
