// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowgame/flowstore/column_store.hpp"
#include "flowgame/flowstore/csv.hpp"
#include "flowgame/harness/run.hpp"
#include "flowgame/harness/world.hpp"
#include "flowgame/neural/serialize.hpp"
#include "flowgame/treeclf/serialize.hpp"

namespace flowgame {

// ---- building blocks shared by the CLI, all-paper and the acceptance suite

inline std::uint64_t replicate_seed(std::uint64_t root, std::size_t i) {
  return child_seed(root, "replicate/" + std::to_string(i));
}

struct ShiftCheck {
  Metrics in_distribution;
  Metrics shifted;
};

// Fixed classifier on its own test split vs. a capture drawn under `eval_shift`.
inline ShiftCheck shift_check(const World& w, const WorldConfig& c, std::uint64_t seed) {
  Dataset shifted = generate(w.schema, c.n_test, c.n_test, child_seed(seed, "world/shifted"),
                             DistributionShift::from_name(c.eval_shift), c.generator);
  return {evaluate(w.model, to_matrix(w.test, w.norm)), evaluate(w.model, to_matrix(shifted, w.norm))};
}

// Passing the same `stream` here and to make_cybermarl gives both attackers
// identical draws.
inline FastResult run_fast(const World& w, const FastConfig& c, std::uint64_t seed, std::string_view stream = "fast") {
  return train_fast(w.score(), w.train_malicious, w.eval_malicious, c, child_seed(seed, stream));
}

struct HardenRun {
  DqnResult dqn;
  HardenResult harden;
};

inline HardenRun run_harden(const World& w, const WorldConfig& wc, const EpisodicConfig& c, std::uint64_t seed) {
  HardenRun r{train_dqn_attacker(w.score(), w.train_malicious, c, child_seed(seed, "dqn")), {}};
  r.harden = harden_once(w.model, r.dqn.attacker, w.train, w.eval_malicious, w.schema, w.norm, wc.trees);
  return r;
}

inline CyberMarl make_cybermarl(const World& w, const CoevoConfig& c, std::uint64_t seed,
                                std::string_view stream = "cybermarl") {
  const TreeEnsemble* model = &w.model;
  const FeatureSchema* schema = &w.schema;
  const NormStats* norm = &w.norm;
  return CyberMarl(
      c, w.coevo_data(), [model](const FeatureVector& z) { return model->margin(z); },
      [schema, norm](const FeatureVector& z) { return realize(*schema, *norm, z); }, child_seed(seed, stream));
}

struct ContinualComparison {
  double naive = 0.0, replay = 0.0, agem = 0.0;  // dormant-mode accuracy at run end
  double naive_active = 0.0, replay_active = 0.0, agem_active = 0.0;
};

inline double final_accuracy(const ContinualResult& r, std::size_t mode) { return r.timeline.back().accuracy.at(mode); }

// Two-mode switch: mode 0 goes dormant after the first phase.
inline ContinualComparison compare_strategies(const ModeSchedule& s, ContinualConfig c, std::uint64_t seed) {
  ContinualComparison out;
  std::size_t dormant = 0, active = s.timeline.back().active.front();
  c.strategy = Strategy::Naive;
  auto n = train_online(s, c, seed);
  c.strategy = Strategy::Replay;
  auto r = train_online(s, c, seed);
  c.strategy = Strategy::Agem;
  auto a = train_online(s, c, seed);
  out.naive = final_accuracy(n, dormant);
  out.replay = final_accuracy(r, dormant);
  out.agem = final_accuracy(a, dormant);
  out.naive_active = final_accuracy(n, active);
  out.replay_active = final_accuracy(r, active);
  out.agem_active = final_accuracy(a, active);
  return out;
}

inline void write_norm_csv(const NormStats& n, const FeatureSchema& s, const fs::path& p) {
  CsvWriter w(p, {"feature", "mean", "std"});
  for (std::size_t j = 0; j < kNumFeatures; ++j) w.row(s[j].name, n.mean[j], n.stddev[j]);
}

inline void write_fast_curve(const FastResult& r, const fs::path& p) {
  CsvWriter w(p, {"step", "attack_rate", "mean_reward", "mean_delta_norm"});
  for (const auto& c : r.curve) w.row(c.step, c.eval.attack_rate, c.eval.mean_reward, c.eval.mean_delta_norm);
}

inline void write_coevo_windows(const std::vector<CoevoWindow>& ws, const fs::path& p) {
  CsvWriter w(p, {"step", "r_attacker", "r_defender", "baseline_attacker_vs_C", "baseline_C_accuracy", "buffer_size"});
  for (const auto& x : ws)
    w.row(x.step, x.r_attacker, x.r_defender, x.baseline_attacker_vs_c, x.baseline_c_accuracy, x.buffer_size);
}

inline void write_continual(const ContinualResult& r, std::size_t n_modes, const fs::path& p) {
  std::vector<std::string> h{"step"};
  for (std::size_t m = 0; m < n_modes; ++m) h.push_back("accuracy_mode_" + std::to_string(m));
  h.push_back("memory_size");
  CsvWriter w(p, h);
  for (const auto& pt : r.timeline) {
    std::vector<std::string> cells{format_value(pt.step)};
    for (double a : pt.accuracy) cells.push_back(format_value(a));
    cells.push_back(format_value(pt.memory_size));
    w.row(cells);
  }
}

// ---- experiments: each lists its config keys and writes its artifacts

struct GenDataExperiment {
  static constexpr const char* kName = "gen-data";
  std::uint64_t seed = 1;
  std::size_t n_benign = 4000;
  std::size_t n_malicious = 4000;
  std::string shift = "yearA";
  bool write_csv = true;
  GeneratorConfig generator;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    v("n_benign", n_benign);
    v("n_malicious", n_malicious);
    v("shift", shift);
    v("write_csv", write_csv);
    visit_fields(generator, v);
  }

  std::vector<fs::path> run(const fs::path& out) const {
    auto schema = default_schema();
    Dataset d = generate(schema, n_benign, n_malicious, child_seed(seed, "gen-data"), DistributionShift::from_name(shift),
                         generator);
    save_store(d, schema, out / "store");
    if (write_csv) export_csv(d, schema, (out / "data.csv").string());
    fs::path counts = out / "class_counts.csv";
    CsvWriter w(counts, {"label", "count"});
    w.row("benign", count_label(d, Label::Benign));
    w.row("malicious", count_label(d, Label::Malicious));
    return {counts};
  }
};

struct TrainClassifierExperiment {
  static constexpr const char* kName = "train-classifier";
  std::uint64_t seed = 1;
  WorldConfig world;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    visit_fields(world, v);
  }

  std::vector<fs::path> run(const fs::path& out) const {
    World w = build_world(world, seed);
    save_tclf(w.model, (out / "model.tclf").string());
    write_norm_csv(w.norm, w.schema, out / "norm.csv");
    auto shift = shift_check(w, world, seed);
    fs::path metrics = out / "metrics.csv";
    {
      CsvWriter m(metrics, {"split", "accuracy", "auc", "fpr", "fnr"});
      auto put = [&](const char* name, const Metrics& x) { m.row(name, x.accuracy, x.auc.value_or(0.5), x.fpr, x.fnr); };
      put("train", evaluate(w.model, to_matrix(w.train, w.norm)));
      put("test", shift.in_distribution);
      put("shifted", shift.shifted);
    }
    fs::path loss = out / "training_loss.csv";
    CsvWriter l(loss, {"trees", "log_loss"});
    for (std::size_t i = 0; i < w.boost.loss.size(); ++i) l.row(i, w.boost.loss[i]);
    return {loss};
  }
};

struct AttackFastExperiment {
  static constexpr const char* kName = "attack-fast";
  std::uint64_t seed = 1;
  WorldConfig world;
  FastConfig fast;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    visit_fields(world, v);
    visit_fields(fast, v);
  }

  std::vector<fs::path> run(const fs::path& out) const {
    World w = build_world(world, seed);
    FastResult r = run_fast(w, fast, seed);
    fs::path csv = out / "attack_fast.csv";
    write_fast_curve(r, csv);
    save_tclf(w.model, (out / "model.tclf").string());
    save_mlp(r.attacker.actor(), (out / "actor.mlp").string());
    save_mlp(r.critic, (out / "critic.mlp").string());
    return {csv};
  }
};

struct HardenExperiment {
  static constexpr const char* kName = "harden";
  std::uint64_t seed = 1;
  WorldConfig world;
  EpisodicConfig dqn;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    visit_fields(world, v);
    visit_fields(dqn, v);
  }

  std::vector<fs::path> run(const fs::path& out) const {
    World w = build_world(world, seed);
    HardenRun r = run_harden(w, world, dqn, seed);
    fs::path csv = out / "harden.csv";
    {
      CsvWriter h(csv, {"phase", "attack_rate", "n_adversarial_samples"});
      h.row("pre", r.harden.rate_before, std::size_t{0});
      h.row("post", r.harden.rate_after, r.harden.n_adversarial);
    }
    fs::path curve = out / "dqn_curve.csv";
    CsvWriter c(curve, {"step", "epsilon", "train_success"});
    for (const auto& p : r.dqn.curve) c.row(p.step, p.epsilon, p.train_success);
    save_tclf(w.model, (out / "model.tclf").string());
    save_tclf(r.harden.model, (out / "model_hardened.tclf").string());
    save_mlp(r.dqn.attacker.network(), (out / "q.mlp").string());
    return {csv, curve};
  }
};

struct CybermarlExperiment {
  static constexpr const char* kName = "cybermarl";
  std::uint64_t seed = 1;
  WorldConfig world;
  CoevoConfig coevo;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    visit_fields(world, v);
    visit_fields(coevo, v);
  }

  std::vector<fs::path> run(const fs::path& out) const {
    World w = build_world(world, seed);
    CyberMarl game = make_cybermarl(w, coevo, seed);
    CoevoResult r = game.run();
    fs::path csv = out / "cybermarl.csv";
    write_coevo_windows(r.windows, csv);
    fs::path inv = out / "invariants.csv";
    {
      CsvWriter c(inv, {"quantity", "value"});
      double n = static_cast<double>(std::max<std::uint64_t>(1, r.sources.total()));
      c.row("source_adversarial", static_cast<double>(r.sources.adversarial) / n);
      c.row("source_benign", static_cast<double>(r.sources.benign) / n);
      c.row("source_malicious", static_cast<double>(r.sources.malicious) / n);
      c.row("adv_draws", r.adv_draws);
      c.row("delay_violations", r.delay_violations);
      c.row("min_raw_reward", r.min_raw_reward);
      c.row("max_raw_reward", r.max_raw_reward);
      c.row("final_attack_rate_vs_C", evaluate_attacker(w.score(), r.attacker, w.eval_malicious, coevo.lambda_reg).attack_rate);
    }
    save_mlp(r.attacker.actor(), (out / "attacker.mlp").string());
    save_mlp(r.defender, (out / "defender.mlp").string());
    save_mlp(r.critic, (out / "critic.mlp").string());
    return {csv};
  }
};

struct ContinualExperiment {
  static constexpr const char* kName = "continual";
  std::uint64_t seed = 1;
  std::string schedule = "two_mode";  // two_mode, stationary, or a schedule file path
  double offset = 1.5;
  std::int64_t phase_length = 10000;
  std::string output = "continual.csv";
  ContinualConfig continual;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    v("schedule", schedule);
    v("offset", offset);
    v("phase_length", phase_length);
    visit_fields(continual, v);
  }

  ModeSchedule resolve_schedule() const {
    if (schedule == "two_mode") return two_mode_switch(offset, phase_length);
    if (schedule == "stationary") return stationary_schedule(offset, 2 * phase_length);
    return parse_schedule(load_kv(schedule));
  }

  std::vector<fs::path> run(const fs::path& out) const {
    ModeSchedule s = resolve_schedule();
    ContinualResult r = train_online(s, continual, child_seed(seed, "continual"));
    fs::path csv = out / output;
    write_continual(r, s.modes.size(), csv);
    return {csv};
  }
};

struct AllPaperExperiment {
  static constexpr const char* kName = "all-paper";
  std::uint64_t seed = 1;
  std::string budgets = "0.001,0.003,0.01,0.03,0.1";
  std::size_t fast_seeds = 5;
  std::size_t harden_seeds = 3;
  std::size_t continual_seeds = 5;
  WorldConfig world;
  FastConfig fast;
  EpisodicConfig dqn;
  CoevoConfig coevo = [] {
    CoevoConfig c;
    c.total_steps = 10000;  // smoke run
    return c;
  }();
  ContinualConfig continual;

  template <class V>
  void visit(V&& v) {
    v("seed", seed);
    v("budgets", budgets);
    v("fast_seeds", fast_seeds);
    v("harden_seeds", harden_seeds);
    v("continual_seeds", continual_seeds);
    visit_fields(world, v);
    visit_fields(fast, Prefixed<V>{"fast.", v});
    visit_fields(dqn, Prefixed<V>{"dqn.", v});
    visit_fields(coevo, Prefixed<V>{"coevo.", v});
    visit_fields(continual, Prefixed<V>{"continual.", v});
  }

  template <class V>
  struct Prefixed {
    std::string prefix;
    V& inner;
    template <class T>
    void operator()(const std::string& key, T& field) {
      inner(prefix + key, field);
    }
  };

  std::vector<double> budget_list() const {
    std::vector<double> out;
    for (const auto& b : split(budgets, ',')) out.push_back(parse_value<double>("budgets", b));
    if (out.empty()) throw Error("config_value", "budgets is empty");
    return out;
  }

  std::vector<fs::path> run(const fs::path& out) const {
    auto bl = budget_list();
    std::vector<fs::path> csvs;
    std::vector<World> worlds;
    std::size_t n_worlds = std::max({fast_seeds, harden_seeds, std::size_t{1}});
    for (std::size_t i = 0; i < n_worlds; ++i) worlds.push_back(build_world(world, replicate_seed(seed, i)));

    fs::path shift_csv = out / "shift.csv";
    {
      CsvWriter c(shift_csv, {"replicate", "accuracy_in", "fpr_in", "accuracy_shifted", "fpr_shifted"});
      for (std::size_t i = 0; i < n_worlds; ++i) {
        auto s = shift_check(worlds[i], world, replicate_seed(seed, i));
        c.row(i, s.in_distribution.accuracy, s.in_distribution.fpr, s.shifted.accuracy, s.shifted.fpr);
      }
    }

    fs::path sweep_csv = out / "budget_sweep.csv";
    fs::path summary_csv = out / "budget_summary.csv";
    {
      CsvWriter c(sweep_csv, {"budget", "replicate", "attack_rate", "mean_delta_norm"});
      CsvWriter m(summary_csv, {"budget", "mean_attack_rate"});
      for (double b : bl) {
        double sum = 0.0;
        for (std::size_t i = 0; i < fast_seeds; ++i) {
          FastConfig fc = fast;
          fc.budget = b;
          auto r = run_fast(worlds[i], fc, replicate_seed(seed, i));
          const auto& e = r.curve.back().eval;
          c.row(b, i, e.attack_rate, e.mean_delta_norm);
          sum += e.attack_rate;
        }
        m.row(b, fast_seeds ? sum / static_cast<double>(fast_seeds) : 0.0);
      }
    }

    fs::path harden_csv = out / "harden.csv";
    {
      CsvWriter c(harden_csv, {"replicate", "phase", "attack_rate", "n_adversarial_samples"});
      for (std::size_t i = 0; i < harden_seeds; ++i) {
        auto r = run_harden(worlds[i], world, dqn, replicate_seed(seed, i));
        c.row(i, "pre", r.harden.rate_before, std::size_t{0});
        c.row(i, "post", r.harden.rate_after, r.harden.n_adversarial);
      }
    }

    fs::path coevo_csv = out / "cybermarl.csv";
    {
      CyberMarl game = make_cybermarl(worlds[0], coevo, replicate_seed(seed, 0));
      write_coevo_windows(game.run().windows, coevo_csv);
    }

    fs::path continual_csv = out / "continual.csv";
    {
      CsvWriter c(continual_csv, {"replicate", "naive_dormant", "replay_dormant", "agem_dormant", "naive_active",
                                  "replay_active", "agem_active"});
      for (std::size_t i = 0; i < continual_seeds; ++i) {
        auto r = compare_strategies(two_mode_switch(), continual, child_seed(replicate_seed(seed, i), "continual"));
        c.row(i, r.naive, r.replay, r.agem, r.naive_active, r.replay_active, r.agem_active);
      }
    }
    return {summary_csv, coevo_csv};
  }
};

// Parses, validates (unknown keys are errors), writes the resolved config
// and a manifest, runs, and exports plot data for the metric CSVs.
template <class E>
RunManifest run_experiment(E e, const KeyValues& kv, const fs::path& out, const std::string& stem = "") {
  ConfigReader reader(kv);
  e.visit(ReadFields{reader, ""});
  reader.finish();
  std::string resolved;
  e.visit(WriteFields{resolved, ""});
  RunManifest m{E::kName, e.seed, resolved, utc_now(), ""};
  std::string base = stem.empty() ? "" : stem + ".";
  fs::create_directories(out);
  write_text(out / (base + "config.resolved"), resolved);
  for (const auto& csv : e.run(out)) export_plotdata(csv, out / (base + "plotdata"));
  m.end_time = utc_now();
  write_text(out / (base + "run.manifest"), m.text());
  return m;
}

}  // namespace flowgame
