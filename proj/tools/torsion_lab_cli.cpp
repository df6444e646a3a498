// torsion_lab: experiment runner and acceptance suite.
//
//   torsion_lab run <experiment> [--config FILE] [--out DIR] [--seed N] [--param VALUE ...]
//   torsion_lab verify-all [--criterion N ...] [--set birth-death.r2=0.08 ...]
//   torsion_lab list
//
// Exit codes: 0 ok, 1 acceptance failure, 2 invalid configuration, 3 numeric failure.

#include <torsion_lab/torsion_lab.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace tlab;

namespace {

constexpr int exit_ok = 0, exit_fail = 1, exit_config = 2, exit_numeric = 3;

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::invalid_argument, "cannot read config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// "--key value" or "--key=value" pairs left over by the option parser.
std::vector<std::pair<std::string, std::string>> parse_extras(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    require(a.rfind("--", 0) == 0 && a.size() > 2, ErrorKind::invalid_argument, "unexpected argument '" + a + "'");
    std::string body = a.substr(2);
    if (auto eq = body.find('='); eq != std::string::npos) {
      out.push_back({body.substr(0, eq), body.substr(eq + 1)});
    } else {
      require(i + 1 < args.size(), ErrorKind::invalid_argument, "missing value for --" + body);
      out.push_back({body, args[++i]});
    }
  }
  return out;
}

struct RunRequest {
  std::string experiment;
  std::string config_file;
  std::string out_dir;
  long long seed = -1;
  std::vector<std::string> extras;
};

int do_run(const RunRequest& rq) {
  std::string experiment = rq.experiment;
  std::string out_dir = "torsion_lab_out";
  std::uint64_t seed = 1;
  std::map<std::string, std::string> params;
  const Experiment* ex = nullptr;
  ParamSet ps;
  try {
    std::map<std::string, std::string> file;
    if (!rq.config_file.empty()) file = parse_flat_config(read_file(rq.config_file));
    if (auto it = file.find("experiment"); it != file.end()) {
      require(experiment.empty() || experiment == it->second, ErrorKind::invalid_argument,
              "config file names experiment '" + it->second + "' but '" + experiment + "' was requested");
      experiment = it->second;
    }
    require(!experiment.empty(), ErrorKind::invalid_argument, "no experiment given");
    ex = &find_experiment(experiment);
    auto take = [&](const std::string& raw_key, const std::string& val) {
      std::string key = lower(raw_key);
      if (key == "seed") {
        double s = parse_number("seed", val);
        require(s >= 0 && s == std::floor(s) && s < 9e15, ErrorKind::invalid_argument, "seed must be a non-negative integer");
        seed = static_cast<std::uint64_t>(s);
        return;
      }
      if (key == "output_dir") {
        out_dir = val;
        return;
      }
      if (key == "experiment") return;
      const std::string prefix = experiment + ".";
      if (key.rfind(prefix, 0) == 0) key = key.substr(prefix.size());
      require(key.find('.') == std::string::npos, ErrorKind::invalid_argument,
              "parameter " + raw_key + " does not belong to experiment " + experiment);
      params[key] = val;
    };
    for (const auto& [k, v] : file) take(k, v);
    for (const auto& [k, v] : parse_extras(rq.extras)) take(k, v);
    if (!rq.out_dir.empty()) out_dir = rq.out_dir;
    if (rq.seed >= 0) seed = static_cast<std::uint64_t>(rq.seed);
    ps = resolve_params(*ex, params);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }

  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOutput out;
  try {
    out = ex->run(ps, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numeric;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    fs::create_directories(out_dir);
    const std::string canon = canonical_config(experiment, ps, seed);
    nlohmann::ordered_json params_json;
    for (const auto& [k, v] : ps.values()) params_json[k] = v;
    nlohmann::ordered_json result;
    result["experiment"] = experiment;
    result["seed"] = seed;
    result["parameters"] = params_json;
    result["summary"] = out.summary;
    result["rows"] = out.table.json();
    write_text((fs::path(out_dir) / "result.csv").string(), out.table.csv());
    write_text((fs::path(out_dir) / "result.json").string(), result.dump(2) + "\n");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canon)));
    nlohmann::ordered_json man;
    man["experiment"] = experiment;
    man["config_hash"] = std::string("fnv1a64:") + hash;
    man["config"] = canon;
    man["tool_version"] = tlab::version;
    man["seed"] = seed;
    man["wall_time_seconds"] = wall;
    man["threads"] = thread_budget();
    man["files"] = {"result.csv", "result.json"};
    write_text((fs::path(out_dir) / "manifest.json").string(), man.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numeric;
  }
  std::cout << out.table.csv();
  return exit_ok;
}

int do_verify(const std::vector<int>& ids_in, const std::vector<std::string>& sets, bool timings) {
  AcceptanceOptions opt;
  try {
    for (const std::string& s : sets) {
      auto eq = s.find('=');
      require(eq != std::string::npos, ErrorKind::invalid_argument, "--set expects key=value");
      std::string key = lower(s.substr(0, eq));
      const std::string val = s.substr(eq + 1);
      double x = parse_number(key, val);
      ModelParams& p = opt.birth_death;
      if (key == "birth-death.n") p.n = static_cast<int>(x);
      else if (key == "birth-death.i") p.i = static_cast<int>(x);
      else if (key == "birth-death.r1") p.r1 = x;
      else if (key == "birth-death.r2") p.r2 = x;
      else if (key == "birth-death.delta") p.delta = x;
      else if (key == "birth-death.a") p.A = x;
      else if (key == "seed") opt.seed = static_cast<std::uint64_t>(x);
      else throw Error(ErrorKind::invalid_argument, "unknown override " + key);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_config;
  }
  std::vector<int> ids = ids_in;
  if (ids.empty())
    for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) ids.push_back(i);
  bool all = true;
  double total = 0;
  for (int id : ids) {
    CriterionResult r = run_criterion(id, opt);
    all = all && r.pass;
    total += r.seconds;
    std::cout << summary_line(r) << std::endl;
    if (timings) std::cerr << "      criterion " << id << ": " << format_double(std::round(r.seconds * 100) / 100) << " s of "
                           << format_double(r.budget) << " s\n";
  }
  std::cout << (all ? "ALL PASS" : "SOME FAILED") << std::endl;
  if (timings) std::cerr << "      total " << format_double(std::round(total * 100) / 100) << " s\n";
  return all ? exit_ok : exit_fail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Torsion and Witten-deformation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tlab::version);

  RunRequest rq;
  auto* run = app.add_subcommand("run", "run one experiment and write result.csv, result.json, manifest.json");
  run->add_option("experiment", rq.experiment, "experiment name (see `list`)");
  run->add_option("--config", rq.config_file, "flat key=value config file");
  run->add_option("--out", rq.out_dir, "output directory");
  run->add_option("--seed", rq.seed, "random seed");
  run->allow_extras();

  std::vector<int> ids;
  std::vector<std::string> sets;
  bool timings = false;
  auto* verify = app.add_subcommand("verify-all", "run the acceptance suite and print PASS/FAIL per criterion");
  verify->add_option("--criterion", ids, "run only these criteria")->check(CLI::Range(1, 10));
  verify->add_option("--set", sets, "override a model constant, e.g. birth-death.r2=0.08");
  verify->add_flag("--timings", timings, "report wall times on stderr");

  auto* list = app.add_subcommand("list", "list experiments and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  if (*run) {
    rq.extras = run->remaining();
    return do_run(rq);
  }
  if (*verify) return do_verify(ids, sets, timings);
  if (*list) {
    for (const auto& ex : experiments()) {
      std::cout << ex.name << ": " << ex.doc << "\n";
      for (const auto& p : ex.params) {
        std::cout << "  " << ex.name << "." << p.key << " = " << p.def << "  (" << p.doc;
        if (!p.choices.empty()) {
          std::cout << "; one of";
          for (const auto& c : p.choices) std::cout << " " << c;
        }
        std::cout << ")\n";
      }
    }
    return exit_ok;
  }
  return exit_config;
}
