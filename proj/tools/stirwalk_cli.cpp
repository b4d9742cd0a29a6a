// stirwalk: run one named experiment from a config file and write its report.
//
// Exit status: 0 all checks pass, 1 some check failed, 2 invalid config or usage.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stirwalk/experiment.hpp"

namespace fs = std::filesystem;
namespace ex = stirwalk::experiment;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ex::ConfigError("config", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stirring and arrow-field walk experiments"};
  std::string experiment, config_path, out_dir, format = "json";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool list = false;

  std::string names;
  for (const auto& n : ex::experiment_names()) names += "\n  " + n;
  app.add_option("experiment", experiment, "Experiment name:" + names);
  app.add_option("--config", config_path, "Config file (JSON or key = value lines)");
  app.add_option("--seed", seed, "Seed override");
  app.add_option("--out", out_dir, "Output directory (report to stdout when omitted)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--list", list, "List experiment names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (list) {
    for (const auto& n : ex::experiment_names()) std::cout << n << '\n';
    return 0;
  }

  try {
    ex::Json config = config_path.empty() ? ex::Json::object() : ex::parse_config(read_file(config_path));
    if (!config.is_object()) throw ex::ConfigError("config", "must be an object");
    if (!experiment.empty()) {
      const auto it = config.find("experiment");
      if (it != config.end() && *it != experiment) {
        throw ex::ConfigError("experiment", "config names " + it->dump() + " but the command line names " + experiment);
      }
      config["experiment"] = experiment;
    }
    if (out_dir.empty()) {
      if (const auto it = config.find("out"); it != config.end()) {
        if (!it->is_string()) throw ex::ConfigError("out", "must be a path string");
        out_dir = it->get<std::string>();
      }
    }

    const ex::Report report = ex::run_experiment(config, {seed, threads});
    const std::string ts = ex::timestamp_utc();
    const std::string text = format == "json" ? ex::render_json(report, ts) : ex::render_csv(report, ts);
    if (out_dir.empty()) {
      std::cout << text;
      if (!report.artifacts.empty()) std::cerr << "note: artifacts are only written with --out\n";
    } else {
      fs::create_directories(out_dir);
      write_file(fs::path(out_dir) / ("report." + format), text);
      for (const auto& a : report.artifacts) write_file(fs::path(out_dir) / a.filename, a.content);
    }
    for (const auto& c : report.document["checks"]) {
      std::cerr << (c["pass"].get<bool>() ? "pass " : "FAIL ") << c["name"].get<std::string>() << '\n';
    }
    return report.pass ? 0 : 1;
  } catch (const ex::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
