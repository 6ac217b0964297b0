// pcollab: command-line front end for runs, sweeps, leakage judging, the
// numeric switch and the training-data filter.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pcollab/config.hpp"
#include "pcollab/distillation_filter.hpp"
#include "pcollab/evaluation.hpp"

using namespace pcollab;

namespace {

std::vector<ReasoningQuery> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path);
  return read_dataset(in);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void require(const ChatClientPtr& c, const char* role) {
  if (!c) throw ConfigError(std::string("config has no binding for role ") + role);
}

std::vector<double> parse_taus(const std::string& text) {
  std::vector<double> taus;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      taus.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad tau: " + item);
    }
  }
  if (taus.empty()) throw ConfigError("--taus is empty");
  return taus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving local/remote collaboration for numerical reasoning"};
  app.require_subcommand(1);

  std::string dataset, config_path, out_path, method = "pipeline", records_path, taus_text, csv_path, text,
                                              candidates_path;
  std::optional<double> tau_override, remote_only;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Answer every query of a dataset and write records");
  run->add_option("--dataset", dataset, "Queries, one JSON object per line")->required();
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--out", out_path, "Record file (JSON lines)")->required();
  run->add_option("--method", method, "pipeline, single, self_consistency, vanilla_cascade, hint, example, remote_only");
  run->add_option("--tau", tau_override, "Override the config threshold");

  auto* sw = app.add_subcommand("sweep", "Accuracy and leakage across thresholds");
  sw->add_option("--dataset", dataset)->required();
  sw->add_option("--config", config_path)->required();
  sw->add_option("--taus", taus_text, "Comma-separated thresholds in [0,1]")->required();
  sw->add_option("--method", method, "Cascade method to sweep");
  sw->add_option("--csv", csv_path, "Write tau,accuracy,leakage,protection here (default stdout)");
  sw->add_option("--remote-only-accuracy", remote_only, "Normalize accuracy by this remote-only accuracy");

  auto* judge = app.add_subcommand("judge-leakage", "Judge remote payloads of a record file and report metrics");
  judge->add_option("--records", records_path)->required();
  judge->add_option("--config", config_path, "Config with a judge binding");
  judge->add_option("--out", out_path, "Write the judged records here");
  judge->add_option("--remote-only-accuracy", remote_only, "Normalize accuracy by this remote-only accuracy");

  auto* swt = app.add_subcommand("switch", "Show the numeric switch for a text");
  swt->add_option("--text", text)->required();
  swt->add_option("--seed", seed);
  swt->add_option("--config", config_path, "Take the switch policy from this config");

  auto* ft = app.add_subcommand("filter-train", "Filter rewriter training candidates");
  ft->add_option("--candidates", candidates_path)->required();
  ft->add_option("--config", config_path)->required();
  ft->add_option("--out", out_path, "Per-candidate outcomes (JSON lines)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto rc = load_config(config_path);
      if (tau_override) rc.cascade.tau = *tau_override;
      rc.cascade.validate();
      auto clients = make_clients(rc);
      require(clients.local, "local");
      if (method != "single" && method != "self_consistency") require(clients.remote, "remote");
      if (method == "pipeline" || method == "example") require(clients.shifter, "shifter");
      auto sandbox = make_sandbox(rc.sandbox);
      const auto records = run_baseline(method, load_dataset(dataset), rc.cascade, clients, *sandbox);
      auto out = open_out(out_path);
      for (auto& r : records) out << r.to_json().dump() << "\n";
      std::cout << aggregate(records).to_json().dump(2) << "\n";
    } else if (*sw) {
      auto rc = load_config(config_path);
      auto clients = make_clients(rc);
      require(clients.local, "local");
      require(clients.remote, "remote");
      require(clients.judge, "judge");
      auto sandbox = make_sandbox(rc.sandbox);
      const auto points = sweep(load_dataset(dataset), parse_taus(taus_text), rc.cascade, clients, *sandbox, method, remote_only);
      if (csv_path.empty()) {
        write_sweep_csv(std::cout, points);
      } else {
        auto out = open_out(csv_path);
        write_sweep_csv(out, points);
      }
    } else if (*judge) {
      std::ifstream in(records_path);
      if (!in) throw ConfigError("cannot open records " + records_path);
      auto records = read_records(in);
      const bool needs_judge = std::any_of(records.begin(), records.end(), [](auto& r) { return r.remote_contacted(); });
      if (needs_judge) {
        if (config_path.empty()) throw ConfigError("--config with a judge binding is required for remote records");
        auto rc = load_config(config_path);
        auto clients = make_clients(rc);
        require(clients.judge, "judge");
        judge_records(records, *clients.judge, rc.cascade.parallelism);
      } else {
        for (auto& r : records) r.leakage = LeakageVerdict{false, false, "", ""};
      }
      if (!out_path.empty()) {
        auto out = open_out(out_path);
        for (auto& r : records) out << r.to_json().dump() << "\n";
      }
      std::cout << aggregate(records, remote_only).to_json().dump(2) << "\n";
    } else if (*swt) {
      SwitchPolicy policy = config_path.empty() ? SwitchPolicy{} : load_config(config_path).cascade.policy;
      policy.seed = seed;
      const auto mapping = build_mapping(extract_values(text), policy);
      nlohmann::json j = {{"switched", apply_mapping(text, mapping, Direction::Forward)}, {"mapping", mapping.to_json()}};
      std::cout << j.dump(2) << "\n";
    } else if (*ft) {
      auto rc = load_config(config_path);
      auto clients = make_clients(rc);
      require(clients.judge, "judge");
      require(clients.local, "local");
      auto sandbox = make_sandbox(rc.sandbox);
      std::ifstream in(candidates_path);
      if (!in) throw ConfigError("cannot open candidates " + candidates_path);
      const auto cands = read_candidates(in);
      auto [outcomes, summary] =
          filter_training_set(cands, *clients.judge, model_solver(clients.local, *sandbox), rc.cascade.parallelism,
                              rc.cascade.policy);
      if (!out_path.empty()) {
        auto out = open_out(out_path);
        for (auto& o : outcomes) out << o.to_json().dump() << "\n";
      }
      std::cout << summary.to_json().dump(2) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
