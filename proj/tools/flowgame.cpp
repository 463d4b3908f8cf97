// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "CLI11.hpp"
#include "flowgame/harness/experiments.hpp"

using namespace flowgame;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> set;
};

void add_common(CLI::App* cmd, CommonArgs& a, const char* out_help = "output directory") {
  cmd->add_option("--config", a.config, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, out_help)->required();
  cmd->add_option("--seed", a.seed, "root seed (overrides the config)");
  cmd->add_option("--set", a.set, "extra key=value override, repeatable");
}

KeyValues collect(const CommonArgs& a) {
  KeyValues kv = a.config.empty() ? KeyValues{} : load_kv(a.config);
  for (const auto& s : a.set) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("usage", "--set expects key=value, got '" + s + "'");
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  if (a.seed) kv["seed"] = std::to_string(*a.seed);
  return kv;
}

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowgame: adversarial flow-classifier simulation"};
  app.require_subcommand(1);

  CommonArgs gen, train, fast, harden, marl, all, cont;
  add_common(app.add_subcommand("gen-data", "generate a synthetic capture"), gen);
  add_common(app.add_subcommand("train-classifier", "train and evaluate the tree classifier"), train);
  add_common(app.add_subcommand("attack-fast", "train the single-step perturbation attacker"), fast);
  add_common(app.add_subcommand("harden", "one attack-then-retrain hardening cycle"), harden);
  add_common(app.add_subcommand("cybermarl", "two-agent attacker/defender game"), marl);
  add_common(app.add_subcommand("all-paper", "every experiment in sequence"), all);

  auto* c = app.add_subcommand("continual", "online defender under mode shifts");
  add_common(c, cont, "metrics CSV path; companion files go beside it");
  std::string strategy, schedule;
  c->add_option("--strategy", strategy, "naive, replay or agem");
  c->add_option("--schedule", schedule, "mode schedule file")->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("export-plotdata", "split a metrics CSV into gnuplot series");
  std::string plot_csv, plot_out;
  plot->add_option("--csv", plot_csv)->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "gen-data") run_experiment(GenDataExperiment{}, collect(gen), gen.out);
    else if (name == "train-classifier") run_experiment(TrainClassifierExperiment{}, collect(train), train.out);
    else if (name == "attack-fast") run_experiment(AttackFastExperiment{}, collect(fast), fast.out);
    else if (name == "harden") run_experiment(HardenExperiment{}, collect(harden), harden.out);
    else if (name == "cybermarl") run_experiment(CybermarlExperiment{}, collect(marl), marl.out);
    else if (name == "all-paper") run_experiment(AllPaperExperiment{}, collect(all), all.out);
    else if (name == "continual") {
      KeyValues kv = collect(cont);
      if (!strategy.empty()) kv["strategy"] = strategy;
      if (!schedule.empty()) kv["schedule"] = schedule;
      // --out names the CSV; companions go beside it.
      fs::path csv(cont.out);
      fs::path dir = csv.has_parent_path() ? csv.parent_path() : fs::path(".");
      ContinualExperiment e;
      e.output = csv.filename().string();
      run_experiment(e, kv, dir, csv.stem().string());
    } else if (name == "export-plotdata") {
      for (const auto& p : export_plotdata(plot_csv, plot_out)) std::cout << p.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error " << e.code() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
