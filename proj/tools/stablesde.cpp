// stablesde: command-line front end for the experiment runners.
//
//   stablesde <command> [--config PATH] [--seed N] [--out DIR]
//   stablesde run --all [--manifest PATH] [--out DIR]
//   stablesde calibrate [--out PATH]
//
// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad config or usage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <Eigen/Core>
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stablesde/experiments.hpp"

namespace fs = std::filesystem;
namespace ex = stablesde::experiments;
using nlohmann::json;

#ifndef STABLESDE_DEFAULT_MANIFEST
#define STABLESDE_DEFAULT_MANIFEST "tests/data/regression_manifest.json"
#endif

namespace {

constexpr int kOk = 0, kAssertionFailed = 1, kConfigError = 2;

int config_error(const std::vector<std::string>& errors) {
  std::cout << json{{"status", "config_error"}, {"errors", errors}}.dump(2) << "\n";
  return kConfigError;
}

json versions() {
  return {{"stablesde", ex::kVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& text) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    os << text;
    files_.push_back({{"file", name}, {"fnv1a64", stablesde::hex64(stablesde::fnv1a64(text))}});
  }
  const json& files() const { return files_; }

 private:
  fs::path dir_;
  json files_ = json::array();
};

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ex::ConfigErrors({"cannot open config '" + path + "'"});
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ex::ConfigErrors({"config '" + path + "' is not valid JSON: " + e.what()});
  }
}

struct Resolved {
  json config;
  std::string out;
};

/// Defaults < flags < config file. A run manifest is accepted as a config.
Resolved resolve(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_flag) {
  json doc = config_path.empty() ? json::object() : read_json_file(config_path);
  if (doc.is_object() && doc.contains("resolved_config")) {
    if (doc.value("command", command) != command)
      throw ex::ConfigErrors({"manifest was written by '" + doc.value("command", "") + "', not '" + command + "'"});
    doc = doc.at("resolved_config");
  }
  if (!doc.is_object()) throw ex::ConfigErrors({"config must be a JSON object"});
  std::vector<std::string> errors;
  if (doc.contains("command")) {
    if (!doc["command"].is_string() || doc["command"] != command)
      errors.push_back("config 'command' does not match '" + command + "'");
    doc.erase("command");
  }
  Resolved r{json::object(), out_flag.empty() ? "stablesde-out/" + command : out_flag};
  if (doc.contains("out")) {
    if (doc["out"].is_string())
      r.out = doc["out"].get<std::string>();
    else
      errors.push_back("'out' must be a string");
    doc.erase("out");
  }
  if (seed && !doc.contains("seed")) doc["seed"] = *seed;
  if (!errors.empty()) throw ex::ConfigErrors(errors);
  r.config = ex::canonical_config(command, doc);
  return r;
}

int run_experiment(const std::string& command, const std::string& config_path, std::optional<std::uint64_t> seed,
                   const std::string& out_flag) {
  const auto r = resolve(command, config_path, seed, out_flag);
  const auto o = ex::run_command(command, r.config);
  OutputDir out(r.out);
  out.write(command + ".csv", o.table.to_csv());
  json result = o.result;
  result["assertions"] = o.assertions_json();
  result["pass"] = o.pass();
  out.write(command + ".json", result.dump(2) + "\n");
  for (const auto& [stem, t] : o.extra_tables) out.write(stem + ".csv", t.to_csv());
  for (const auto& [stem, j] : o.extra_json) out.write(stem + ".json", j.dump(2) + "\n");
  const std::string canonical = r.config.dump();
  json manifest{{"format", "stablesde-run-1"},
                {"command", command},
                {"config_hash", stablesde::hex64(stablesde::fnv1a64(canonical))},
                {"versions", versions()},
                {"seeds", r.config.contains("seed") ? json{{"seed", r.config["seed"]}} : json::object()},
                {"resolved_config", r.config},
                {"outputs", out.files()}};
  OutputDir(r.out).write("manifest.json", manifest.dump(2) + "\n");

  std::cout << command << ": " << o.assertions.size() << " assertions, output in " << r.out << "\n";
  int failed = 0;
  for (const auto& a : o.assertions)
    if (!a.pass) {
      std::cerr << "FAIL " << a.name << (a.detail.empty() ? "" : ": " + a.detail) << "\n";
      ++failed;
    }
  return failed ? kAssertionFailed : kOk;
}

int run_all(const std::string& manifest_path, const std::string& out_flag) {
  const auto manifest = ex::load_regression_manifest(manifest_path);
  OutputDir out(out_flag.empty() ? "stablesde-out/acceptance" : out_flag);
  const auto results = ex::run_acceptance(manifest, [](const ex::CriterionResult& r) { std::cout << r.line() << std::endl; });
  ex::Table t;
  t.header = {"criterion", "title", "pass", "seconds", "limit_seconds", "detail"};
  json j = json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass();
    t.add({std::to_string(r.id), r.title, r.pass() ? "true" : "false", ex::num(r.seconds), ex::num(r.limit_seconds),
           r.detail});
    j.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass()}, {"seconds", r.seconds},
                 {"limit_seconds", r.limit_seconds}, {"detail", r.detail}, {"data", r.data}});
  }
  out.write("acceptance.csv", t.to_csv());
  out.write("acceptance.json", json{{"pass", all}, {"criteria", j}}.dump(2) + "\n");
  return all ? kOk : kAssertionFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for weak uniqueness of stable-driven SDEs"};
  app.require_subcommand(1);

  std::string config_path, out_dir, manifest_path = STABLESDE_DEFAULT_MANIFEST;
  std::uint64_t seed_value = 0;
  std::map<std::string, CLI::App*> commands;
  std::map<std::string, CLI::Option*> seed_opts;
  for (const auto& name : ex::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config or run manifest")->check(CLI::ExistingFile);
    seed_opts[name] = sub->add_option("--seed", seed_value, "seed used when the config does not set one");
    sub->add_option("--out", out_dir, "output directory");
    commands[name] = sub;
  }

  bool all = false;
  auto* run = app.add_subcommand("run", "run the acceptance suite");
  run->add_flag("--all", all, "every acceptance criterion")->required();
  run->add_option("--manifest", manifest_path, "regression manifest with calibrated constants");
  run->add_option("--out", out_dir, "output directory");

  std::size_t oracle_n = ex::CalibrationOptions{}.oracle_N;
  std::string calib_out = manifest_path;
  auto* calib = app.add_subcommand("calibrate", "recompute the regression manifest");
  calib->add_option("--out", calib_out, "manifest path to write");
  calib->add_option("--oracle-n", oracle_n, "paths in the fine-step oracle run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return config_error({e.what()});
  }

  try {
    for (const auto& [name, sub] : commands)
      if (sub->parsed()) {
        std::optional<std::uint64_t> seed;
        if (seed_opts[name]->count()) seed = seed_value;
        return run_experiment(name, config_path, seed, out_dir);
      }
    if (run->parsed()) return run_all(manifest_path, out_dir);
    if (calib->parsed()) {
      ex::CalibrationOptions opts;
      opts.oracle_N = oracle_n;
      const auto doc = ex::calibrate(opts);
      if (auto parent = fs::path(calib_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      std::ofstream(calib_out) << doc.dump(2) << "\n";
      std::cout << "wrote " << calib_out << "\n";
      return kOk;
    }
  } catch (const ex::ConfigErrors& e) {
    return config_error(e.errors());
  } catch (const stablesde::ConfigError& e) {
    return config_error({e.what()});
  } catch (const stablesde::DomainError& e) {
    return config_error({e.what()});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAssertionFailed;
  }
  return kConfigError;
}
